#include "wecfarm/wecfarm.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "capi/json_codec.hpp"
#include "wecfarm/climate.hpp"
#include "wecfarm/error.hpp"
#include "wecfarm/hydro.hpp"
#include "wecfarm/optimize.hpp"
#include "wecfarm/surrogate.hpp"

using namespace wecfarm;
using wecfarm::capi::json;

struct wf_site {
  SiteClimate site;
};

struct wf_provider {
  std::unique_ptr<CoefficientProvider> impl;
  std::string name;
};

struct wf_evaluator {
  std::unique_ptr<Evaluator> impl;
};

namespace {

thread_local std::string g_last_error;

wf_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return WF_ERR_VALIDATION;
    case ErrorKind::geometry: return WF_ERR_GEOMETRY;
    case ErrorKind::dimension: return WF_ERR_DIMENSION;
    case ErrorKind::degenerate: return WF_ERR_DEGENERATE;
    case ErrorKind::config: return WF_ERR_CONFIG;
    case ErrorKind::parse: return WF_ERR_PARSE;
    case ErrorKind::io: return WF_ERR_IO;
    case ErrorKind::numerical: return WF_ERR_NUMERICAL;
    case ErrorKind::singular: return WF_ERR_SINGULAR;
  }
  return WF_ERR_INTERNAL;
}

template <class F>
wf_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return WF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return WF_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WF_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const json& j) {
  require(out != nullptr, ErrorKind::validation, "output pointer is null");
  *out = dup(j.dump());
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::validation, std::string(what) + " is null");
}

constexpr double kMseGate = 1e-2;

json complex_parts(const std::vector<Complex>& v) {
  json re = json::array(), im = json::array();
  for (const auto& c : v) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  return {{"re", re}, {"im", im}};
}

json mat2_list(const std::vector<Eigen::Matrix2d>& v) {
  json out = json::array();
  for (const auto& m : v) out.push_back({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}});
  return out;
}

}  // namespace

extern "C" {

const char* wf_version(void) { return "0.1.0"; }

const char* wf_status_name(wf_status s) {
  switch (s) {
    case WF_OK: return "ok";
    case WF_ERR_VALIDATION: return "validation";
    case WF_ERR_GEOMETRY: return "geometry";
    case WF_ERR_DIMENSION: return "dimension";
    case WF_ERR_DEGENERATE: return "degenerate";
    case WF_ERR_CONFIG: return "config";
    case WF_ERR_PARSE: return "parse";
    case WF_ERR_IO: return "io";
    case WF_ERR_NUMERICAL: return "numerical";
    case WF_ERR_SINGULAR: return "singular";
    case WF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* wf_last_error(void) { return g_last_error.c_str(); }

void wf_string_free(char* s) { std::free(s); }

uint64_t wf_fnv1a64(const void* data, size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

wf_status wf_site_build(const char* csv_path, const char* site_id, const char* options_json,
                        wf_site** out) {
  return guarded([&] {
    need(csv_path, "records path");
    need(out, "output handle");
    std::vector<std::string> problems;
    const json j = capi::parse_object(options_json, "site options");
    const ClimateOptions opts = capi::read_climate_options(&j, &problems);
    capi::raise_problems(problems, "site options");
    auto records = read_sea_records(csv_path);
    auto s = std::make_unique<wf_site>();
    s->site = build_site_climate(records, opts, site_id ? site_id : "");
    *out = s.release();
  });
}

wf_status wf_site_load(const char* path, wf_site** out) {
  return guarded([&] {
    need(path, "site path");
    need(out, "output handle");
    auto s = std::make_unique<wf_site>();
    s->site = load_site(path);
    *out = s.release();
  });
}

wf_status wf_site_save(const wf_site* site, const char* path) {
  return guarded([&] {
    need(site, "site");
    need(path, "site path");
    save_site(site->site, path);
  });
}

void wf_site_free(wf_site* site) { delete site; }

wf_status wf_site_summary(const wf_site* site, char** out) {
  return guarded([&] {
    need(site, "site");
    const SiteClimate& s = site->site;
    const auto n = static_cast<Eigen::Index>(s.grid.size());
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    for (const auto& p : s.probability) mean += p;
    if (!s.probability.empty()) mean /= static_cast<double>(s.probability.size());
    json j;
    j["site_id"] = s.site_id;
    j["years"] = s.years();
    j["record_count"] = s.record_count;
    j["hs_bandwidth"] = s.hs_bandwidth;
    j["tp_bandwidth"] = s.tp_bandwidth;
    j["hs_nodes"] = s.grid.hs_nodes;
    j["tp_nodes"] = s.grid.tp_nodes;
    j["probability"] = capi::matrix_to_json(mean);
    put(out, j);
  });
}

wf_status wf_synthetic_records(const char* profile, size_t count, uint64_t seed,
                               const char* csv_path) {
  return guarded([&] {
    need(profile, "profile");
    need(csv_path, "records path");
    write_sea_records(csv_path, synthetic_records(profile, count, seed));
  });
}

wf_status wf_provider_reference(wf_provider** out) {
  return guarded([&] {
    need(out, "output handle");
    auto p = std::make_unique<wf_provider>();
    p->impl = std::make_unique<ReferenceProvider>();
    p->name = p->impl->name();
    *out = p.release();
  });
}

wf_status wf_provider_surrogate(const char* model_dir, int haskind_projection, wf_provider** out) {
  return guarded([&] {
    need(model_dir, "model directory");
    need(out, "output handle");
    auto p = std::make_unique<wf_provider>();
    p->impl = std::make_unique<SurrogateProvider>(load_committee_set(model_dir),
                                                  haskind_projection != 0);
    p->name = p->impl->name();
    *out = p.release();
  });
}

void wf_provider_free(wf_provider* provider) { delete provider; }

const char* wf_provider_name(const wf_provider* provider) {
  return provider ? provider->name.c_str() : "";
}

namespace {

struct HydroRequest {
  double radius = 0, slenderness = 0, separation = 0, heading = 0;
  FrequencyGrid grid;
  Environment env;
};

HydroRequest read_request(const char* text, bool pair) {
  const json j = capi::parse_object(text, "hydro request");
  std::vector<std::string> problems;
  capi::Reader r(j, "", &problems);
  HydroRequest q;
  q.radius = r.number("radius", 0.0);
  q.slenderness = r.number("slenderness", 0.0);
  if (pair) {
    q.separation = r.number("separation", 0.0);
    q.heading = r.number("heading", 0.0);
  }
  q.grid = capi::read_frequency(r.object("frequency"), &problems);
  q.env = capi::read_environment(r.object("environment"), &problems);
  r.finish();
  capi::raise_problems(problems, "hydro request");
  return q;
}

}  // namespace

wf_status wf_hydro_single(const wf_provider* provider, const char* request, char** out) {
  return guarded([&] {
    need(provider, "provider");
    const HydroRequest q = read_request(request, false);
    const auto s = provider->impl->single(WecGeometry(q.radius, q.slenderness), q.grid, q.env);
    json j;
    j["provider"] = provider->name;
    j["omega"] = capi::frequency_to_json(s.grid);
    j["added_mass"] = s.added_mass;
    j["damping"] = s.damping;
    j["excitation"] = complex_parts(s.excitation);
    put(out, j);
  });
}

wf_status wf_hydro_pair(const wf_provider* provider, const char* request, char** out) {
  return guarded([&] {
    need(provider, "provider");
    const HydroRequest q = read_request(request, true);
    const auto p = provider->impl->pair(WecGeometry(q.radius, q.slenderness), q.separation,
                                        q.heading, q.grid, q.env);
    json j;
    j["provider"] = provider->name;
    j["omega"] = capi::frequency_to_json(p.grid);
    j["separation"] = p.separation;
    j["heading"] = p.heading;
    j["added_mass"] = mat2_list(p.added_mass);
    j["damping"] = mat2_list(p.damping);
    std::vector<Complex> f1, f2;
    for (const auto& f : p.excitation) {
      f1.push_back(f(0));
      f2.push_back(f(1));
    }
    j["excitation"] = {complex_parts(f1), complex_parts(f2)};
    put(out, j);
  });
}

wf_status wf_model_ledger(const char* config_json, char** out) {
  return guarded([&] {
    need(out, "output");
    const json j = capi::parse_object(config_json, "ledger config");
    std::vector<std::string> problems;
    capi::Reader r(j, "", &problems);
    const FrequencyGrid grid = capi::read_frequency(r.object("frequency"), &problems);
    const Environment env = capi::read_environment(r.object("environment"), &problems);
    r.finish();
    capi::raise_problems(problems, "ledger config");
    *out = dup(model_ledger(ReferenceModel{}, env, grid));
  });
}

wf_status wf_surrogate_train(const char* plan_json, const char* out_dir, unsigned threads,
                             wf_message_fn progress, void* user, char** report_json) {
  return guarded([&] {
    need(out_dir, "output directory");
    json j = capi::parse_object(plan_json, "training plan");
    double gate = kMseGate;
    if (j.contains("gate")) {
      require(j["gate"].is_number(), ErrorKind::config, "gate: expected a number");
      gate = j["gate"].get<double>();
      j.erase("gate");
    }
    std::vector<std::string> problems;
    FrequencyGrid grid;
    Environment env;
    const TrainPlan plan = capi::read_train_plan(j, &grid, &env, &problems);
    capi::raise_problems(problems, "training plan");

    ReferenceProvider oracle;
    std::vector<MapTrainingReport> reports;
    ProgressFn cb;
    if (progress) cb = [&](const std::string& s) { progress(s.c_str(), user); };
    const CommitteeSet set = train_surrogates(plan, oracle, grid, env, &reports, threads, cb);
    save_committee_set(set, out_dir);

    json rep;
    rep["gate"] = gate;
    json maps = json::array();
    bool all = true;
    for (const auto& r : reports) {
      json m = capi::training_report_to_json(r);
      m["passed"] = r.validation.mean <= gate;
      all = all && r.validation.mean <= gate;
      m["samples"] = set.at(r.target)->samples;
      maps.push_back(std::move(m));
    }
    rep["maps"] = std::move(maps);
    rep["passed"] = all;
    if (report_json) put(report_json, rep);
  });
}

wf_status wf_surrogate_validate(const char* model_dir, const char* options_json,
                                unsigned threads, char** report_json) {
  return guarded([&] {
    need(model_dir, "model directory");
    const json j = capi::parse_object(options_json, "validate options");
    std::vector<std::string> problems;
    capi::Reader r(j, "", &problems);
    const int grid_single = static_cast<int>(r.integer("grid_single", TrainPlan{}.grid_single));
    const int grid_pair = static_cast<int>(r.integer("grid_pair", TrainPlan{}.grid_pair));
    const bool cheating = r.boolean("cheating", false);
    const double gate = r.number("gate", kMseGate);
    std::vector<MapId> maps;
    if (const json* m = r.get("maps")) {
      if (!m->is_array()) r.problem("maps: expected an array");
      else
        for (const auto& n : *m) {
          try {
            maps.push_back(map_from_name(n.get<std::string>()));
          } catch (const std::exception&) {
            r.problem("maps: unknown map " + n.dump());
          }
        }
    }
    r.finish();
    if (grid_single < 2 || grid_pair < 2) problems.push_back("grid sizes must be >= 2");
    capi::raise_problems(problems, "validate options");

    const CommitteeSet set = load_committee_set(model_dir);
    if (maps.empty())
      for (const auto& [id, c] : set) maps.push_back(id);

    ReferenceProvider oracle;
    json rep;
    rep["gate"] = gate;
    rep["cheating"] = cheating;
    json out = json::array();
    bool all = true;
    for (MapId id : maps) {
      auto it = set.find(id);
      require(it != set.end(), ErrorKind::io,
              std::string("no committee for map ") + map_name(id) + " in " + model_dir);
      const Committee& c = *it->second;
      const Labeler labeler(oracle, c.grid, c.env);
      const bool pair = is_pair_map(id);
      const Eigen::MatrixXd pts = tensor_grid(c.space, pair, pair ? grid_pair : grid_single);
      const OracleModel cheat(labeler, id);
      const MapModel& model = cheating ? static_cast<const MapModel&>(cheat) : c;
      const MseMap mse = validate_on_grid(model, id, labeler, pts, c.output_scaler.scale, threads);
      json m = capi::mse_map_to_json(mse);
      m["zero_variance"] = c.zero_variance();
      m["samples"] = c.samples;
      m["passed"] = mse.mean <= gate;
      all = all && mse.mean <= gate;
      out.push_back(std::move(m));
    }
    rep["maps"] = std::move(out);
    rep["passed"] = all;
    put(report_json, rep);
  });
}

wf_status wf_evaluator_create(const wf_provider* provider, const wf_site* site,
                              const char* config_json, wf_evaluator** out) {
  return guarded([&] {
    need(provider, "provider");
    need(site, "site");
    need(out, "output handle");
    const json j = capi::parse_object(config_json, "evaluator config");
    std::vector<std::string> problems;
    capi::Reader r(j, "", &problems);
    const FrequencyGrid grid = capi::read_frequency(r.object("frequency"), &problems);
    const Environment env = capi::read_environment(r.object("environment"), &problems);
    const EfficiencyChain eff = capi::read_efficiency(r.object("efficiency"), &problems);
    const DesignBounds bounds = capi::read_bounds(r.object("bounds"), &problems);
    const auto seed = static_cast<std::uint64_t>(r.integer("seed", 0));
    std::uint64_t hash = 0;
    if (const json* h = r.get("config_hash")) {
      if (h->is_number_unsigned() || h->is_number_integer()) hash = h->get<std::uint64_t>();
      else if (h->is_string()) hash = std::stoull(h->get<std::string>(), nullptr, 16);
      else r.problem("config_hash: expected a number or hex string");
    }
    r.finish();
    capi::raise_problems(problems, "evaluator config");
    auto e = std::make_unique<wf_evaluator>();
    e->impl = std::make_unique<Evaluator>(*provider->impl, site->site, grid, env, eff, bounds);
    e->impl->seed = seed;
    e->impl->config_hash = hash;
    *out = e.release();
  });
}

void wf_evaluator_free(wf_evaluator* evaluator) { delete evaluator; }

wf_status wf_evaluate(const wf_evaluator* evaluator, const char* design_json, int with_q,
                      char** out) {
  return guarded([&] {
    need(evaluator, "evaluator");
    const DesignPoint d = capi::design_from_json(capi::parse_object(design_json, "design"), "");
    const EvaluationResult r = evaluator->impl->evaluate(d, with_q != 0);
    json j = capi::result_to_json(r);
    j["design"] = capi::design_to_json(d);
    put(out, j);
  });
}

wf_status wf_optimize(const wf_evaluator* evaluator, const char* study_json, unsigned threads,
                      wf_message_fn progress, void* user, char** out) {
  return guarded([&] {
    need(evaluator, "evaluator");
    const StudySpec spec = capi::study_from_json(capi::parse_object(study_json, "study config"));
    GaProgress cb;
    if (progress)
      cb = [&](const GenerationRecord& g) {
        progress(capi::generation_to_json(g).dump().c_str(), user);
      };
    const GaResult r = run_ga(spec, *evaluator->impl, threads, cb);
    put(out, capi::ga_result_to_json(r, spec));
  });
}

wf_status wf_benchmark(const wf_evaluator* reference, const wf_evaluator* surrogate,
                       size_t samples, size_t devices, uint64_t seed, unsigned threads,
                       char** out) {
  return guarded([&] {
    need(reference, "reference evaluator");
    need(surrogate, "surrogate evaluator");
    const BenchmarkReport r =
        power_error_benchmark(samples, devices, *reference->impl, *surrogate->impl, seed, threads);
    json j = capi::benchmark_to_json(r);
    j["reference_provider"] = reference->impl->provider().name();
    j["surrogate_provider"] = surrogate->impl->provider().name();
    j["seed"] = seed;
    j["devices"] = devices;
    put(out, j);
  });
}

wf_status wf_random_layouts(const wf_evaluator* evaluator, const char* design_json,
                            size_t samples, uint64_t seed, unsigned threads, char** out) {
  return guarded([&] {
    need(evaluator, "evaluator");
    const DesignPoint d = capi::design_from_json(capi::parse_object(design_json, "design"), "");
    const RandomLayoutReport r = random_layout_analysis(d, samples, *evaluator->impl, seed, threads);
    json j = capi::random_layouts_to_json(r);
    j["seed"] = seed;
    put(out, j);
  });
}

wf_status wf_sensitivity(const wf_evaluator* evaluator, const char* design_json,
                         size_t wec_index, int resolution, double window, unsigned threads,
                         char** out) {
  return guarded([&] {
    need(evaluator, "evaluator");
    const DesignPoint d = capi::design_from_json(capi::parse_object(design_json, "design"), "");
    const SensitivityMap m = sensitivity_map(d, wec_index, resolution, window, *evaluator->impl, threads);
    json j = capi::sensitivity_to_json(m);
    j["layout"] = capi::design_to_json(d)["layout"];
    j["radius"] = d.geometry.radius();
    j["window"] = window;
    put(out, j);
  });
}

}  // extern "C"
