#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "run.hpp"
#include "svg.hpp"

using namespace wfcli;

namespace {

struct SiteDel { void operator()(wf_site* p) const { wf_site_free(p); } };
struct ProviderDel { void operator()(wf_provider* p) const { wf_provider_free(p); } };
struct EvalDel { void operator()(wf_evaluator* p) const { wf_evaluator_free(p); } };
using SitePtr = std::unique_ptr<wf_site, SiteDel>;
using ProviderPtr = std::unique_ptr<wf_provider, ProviderDel>;
using EvalPtr = std::unique_ptr<wf_evaluator, EvalDel>;

json take(char* s) {
  json j = json::parse(s);
  wf_string_free(s);
  return j;
}

// Lists unknown keys and missing required ones in one go.
void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::vector<std::string>& required, const std::string& what) {
  std::vector<std::string> problems;
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      problems.push_back(k + ": unknown key");
  for (const auto& r : required)
    if (!j.contains(r)) problems.push_back(r + ": missing");
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << what << ": " << problems.size() << " problem" << (problems.size() > 1 ? "s" : "");
  for (const auto& p : problems) msg << "\n  " << p;
  fail_input("config", msg.str());
}

void require_file(const fs::path& p, const std::string& what, const std::string& hint) {
  if (!fs::exists(p)) fail_input("io", "missing " + what + ": " + p.string() + " (" + hint + ")");
}

std::uint64_t pick_seed(const Globals& g, const json& cfg, const char* key, std::uint64_t fallback) {
  if (g.seed) return *g.seed;
  if (cfg.contains(key)) return cfg[key].get<std::uint64_t>();
  return fallback;
}

// Site, provider and evaluator described by the shared config keys.
struct Setup {
  SitePtr site;
  ProviderPtr provider;
  ProviderPtr reference;  // only for benchmarks
  EvalPtr eval;
  EvalPtr ref_eval;
};

const std::vector<std::string> kEvalKeys{"site", "provider", "models", "haskind_projection",
                                         "evaluator"};

ProviderPtr open_provider(const Config& c, const std::string& kind, Run& run) {
  wf_provider* p = nullptr;
  if (kind == "reference") {
    check(wf_provider_reference(&p));
  } else if (kind == "surrogate") {
    if (!c.j.contains("models")) fail_input("config", "provider surrogate needs \"models\"");
    const fs::path dir = c.resolve(c.j["models"].get<std::string>());
    require_file(dir, "surrogate model directory", "train one with `wecfarm surrogate train`");
    run.input_dir(dir);
    check(wf_provider_surrogate(dir.string().c_str(), c.j.value("haskind_projection", false), &p));
  } else {
    fail_input("config", "provider: expected \"reference\" or \"surrogate\", got \"" + kind + "\"");
  }
  return ProviderPtr(p);
}

EvalPtr open_evaluator(const Config& c, const wf_provider* provider, const wf_site* site,
                       const Run& run) {
  json ev = c.j.value("evaluator", json::object());
  ev["seed"] = run.seed();
  ev["config_hash"] = run.config_hash();
  wf_evaluator* e = nullptr;
  check(wf_evaluator_create(provider, site, ev.dump().c_str(), &e));
  return EvalPtr(e);
}

Setup open_setup(const Config& c, Run& run, bool with_reference = false) {
  Setup s;
  const fs::path site = c.resolve(c.j.at("site").get<std::string>());
  require_file(site, "site file", "build one with `wecfarm sites build`");
  run.input(site);
  wf_site* sp = nullptr;
  check(wf_site_load(site.string().c_str(), &sp));
  s.site.reset(sp);
  s.provider = open_provider(c, c.j.value("provider", std::string("reference")), run);
  s.eval = open_evaluator(c, s.provider.get(), s.site.get(), run);
  if (with_reference) {
    s.reference = open_provider(c, "reference", run);
    s.ref_eval = open_evaluator(c, s.reference.get(), s.site.get(), run);
  }
  return s;
}

// "design" is an inline object, a design JSON file or a run directory.
json load_design(const Config& c, Run& run) {
  const json& d = c.j.at("design");
  if (d.is_object()) return d;
  if (!d.is_string()) fail_input("config", "design: expected an object or a path");
  fs::path p = c.resolve(d.get<std::string>());
  if (fs::is_directory(p)) p /= "best_design.json";
  require_file(p, "design file", "run `wecfarm optimize` first or give the design inline");
  run.input(p);
  return read_json_file(p, "design file");
}

std::string layout_plot(const json& design, double half_width, const std::string& title) {
  std::vector<Circle> circles;
  const double r = design["radius"].get<double>();
  int i = 0;
  for (const auto& p : design["layout"])
    circles.push_back({p[0].get<double>(), p[1].get<double>(), r, std::to_string(i++)});
  return layout_svg(circles, 0.0, half_width, -half_width, half_width, title);
}

double farm_half_width(std::size_t devices) { return 0.5 * std::sqrt(20000.0 * devices); }

void print_run(const Run& run) { std::cout << "run_dir: " << run.dir().string() << "\n"; }

// ---- sites ----------------------------------------------------------

int local_maxima(const json& prob) {
  const int n = static_cast<int>(prob.size());
  double top = 0;
  for (const auto& row : prob)
    for (const auto& v : row) top = std::max(top, v.get<double>());
  int modes = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = prob[i][j].get<double>();
      if (v < 0.01 * top) continue;
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (!di && !dj) continue;
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= n || b >= n) continue;
          if (prob[a][b].get<double>() >= v) {
            peak = false;
            break;
          }
        }
      modes += peak;
    }
  }
  return modes;
}

int cmd_sites_synth(const Globals& g, const std::string& profile, std::size_t count,
                    const std::string& out) {
  const std::uint64_t seed = g.seed.value_or(1);
  check(wf_synthetic_records(profile.c_str(), count, seed, out.c_str()));
  std::cout << "wrote " << count << " records (" << profile << ", seed " << seed << ") to " << out
            << "\n";
  return 0;
}

int cmd_sites_build(const Globals& g, const std::string& records, std::string site_id,
                    const std::string& config_path) {
  json options = json::object();
  if (!config_path.empty()) options = load_config(config_path).j;
  require_file(records, "records CSV", "write one with `wecfarm sites synth`");
  if (site_id.empty()) site_id = fs::path(records).stem().string();
  Run run("sites build", {{"site_id", site_id}, {"options", options}}, g, 0);
  run.input(records);
  wf_site* sp = nullptr;
  check(wf_site_build(records.c_str(), site_id.c_str(), options.dump().c_str(), &sp));
  SitePtr site(sp);
  const fs::path out = run.dir() / "site.json";
  check(wf_site_save(site.get(), out.string().c_str()));
  run.output(out);
  char* s = nullptr;
  check(wf_site_summary(site.get(), &s));
  const json sum = take(s);

  std::ostringstream csv;
  csv << "hs_m,tp_s,probability\n";
  Grid2 grid;
  for (const auto& v : sum["tp_nodes"]) grid.xs.push_back(v.get<double>());
  for (const auto& v : sum["hs_nodes"]) grid.ys.push_back(v.get<double>());
  for (std::size_t i = 0; i < grid.ys.size(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < grid.xs.size(); ++j) {
      const double p = sum["probability"][i][j].get<double>();
      row.push_back(p);
      csv << fmt(grid.ys[i]) << ',' << fmt(grid.xs[j]) << ',' << fmt(p) << '\n';
    }
    grid.z.push_back(std::move(row));
  }
  run.write("probability.csv", csv.str());
  run.write("heatmap.svg", heatmap_svg(grid, "Sea-state probability, " + site_id, "Tp [s]",
                                       "Hs [m]"));
  const int modes = local_maxima(sum["probability"]);
  run.finish({{"site_id", site_id}, {"modes", modes}, {"years", sum["years"]},
              {"record_count", sum["record_count"]}});
  std::cout << "site " << site_id << ": " << sum["record_count"] << " records, " << sum["years"]
            << " years, " << grid.ys.size() << "x" << grid.xs.size() << " nodes, modes " << modes
            << "\n";
  print_run(run);
  return 0;
}

// ---- surrogate ------------------------------------------------------

void write_mse_outputs(Run& run, const json& maps) {
  for (const auto& m : maps) {
    const std::string name = m["map"].get<std::string>();
    const auto& pts = m["points"];
    const auto& mse = m["mse"];
    const bool pair = !pts.empty() && pts[0].size() == 4;
    std::ostringstream csv;
    csv << (pair ? "radius,slenderness,separation,heading,mse\n" : "radius,slenderness,mse\n");
    std::map<std::pair<double, double>, std::pair<double, int>> grouped;
    std::vector<ScatterPoint> sp;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (const auto& v : pts[i]) csv << fmt(v.get<double>()) << ',';
      const double e = mse[i].get<double>();
      csv << fmt(e) << '\n';
      if (pair) {
        auto& g = grouped[{pts[i][2].get<double>(), pts[i][3].get<double>()}];
        g.first += e;
        g.second += 1;
      } else {
        sp.push_back({pts[i][0].get<double>(), pts[i][1].get<double>(), e});
      }
    }
    for (const auto& [k, v] : grouped) sp.push_back({k.first, k.second, v.first / v.second});
    run.write("mse_" + name + ".csv", csv.str());
    run.write("mse_" + name + ".svg",
              scatter_svg(sp, "Normalised MSE, " + name + (pair ? " (mean over R, R/D)" : ""),
                          pair ? "separation l [m]" : "R [m]", pair ? "heading [rad]" : "R/D", true));
  }
}

bool print_gate(const json& rep) {
  for (const auto& m : rep["maps"]) {
    std::printf("%-5s max %.3e  mean %.3e  median %.3e  %s\n", m["map"].get<std::string>().c_str(),
                m["max"].get<double>(), m["mean"].get<double>(), m["median"].get<double>(),
                m["passed"].get<bool>() ? "ok" : "FAIL");
  }
  return rep["passed"].get<bool>();
}

json strip_points(json rep) {
  for (auto& m : rep["maps"]) {
    if (m.contains("validation")) {
      m["validation"].erase("points");
      m["validation"].erase("mse");
    } else {
      m.erase("points");
      m.erase("mse");
    }
  }
  return rep;
}

int cmd_surrogate_train(const Globals& g, const std::string& config_path) {
  json plan = config_path.empty() ? json::object() : load_config(config_path).j;
  if (g.seed) plan["seed"] = *g.seed;
  const std::uint64_t seed = plan.value("seed", std::uint64_t{1});
  Run run("surrogate train", plan, g, seed);
  const fs::path models = run.dir() / "models";
  fs::create_directories(models);
  auto progress = [](const char* text, void*) { std::cerr << text << "\n"; };
  char* out = nullptr;
  check(wf_surrogate_train(plan.dump().c_str(), models.string().c_str(), g.thread_count(), progress,
                           nullptr, &out));
  json rep = take(out);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(models)) files.push_back(e.path());
  for (const auto& f : files) run.output(f);

  json maps = json::array();
  std::ostringstream csv;
  csv << "map,round,dataset_size,max_disagreement,mean_disagreement,grid_mse\n";
  for (const auto& m : rep["maps"]) {
    json v = m["validation"];
    v["passed"] = m["passed"];
    maps.push_back(v);
    for (const auto& r : m["rounds"])
      csv << m["map"].get<std::string>() << ',' << r["round"] << ',' << r["dataset_size"] << ','
          << fmt(r["max_disagreement"].get<double>()) << ','
          << fmt(r["mean_disagreement"].get<double>()) << ','
          << (r["grid_mse"].is_null() ? std::string() : fmt(r["grid_mse"].get<double>())) << '\n';
  }
  run.write("training.csv", csv.str());
  write_mse_outputs(run, maps);
  run.write("report.json", strip_points(rep).dump(2) + "\n");
  const bool ok = print_gate({{"maps", maps}, {"passed", rep["passed"]}});
  run.finish({{"passed", ok}, {"models", "models"}});
  print_run(run);
  if (!ok) {
    std::cerr << "error: gate: at least one map exceeds the MSE gate " << rep["gate"] << "\n";
    return 2;
  }
  return 0;
}

int cmd_surrogate_validate(const Globals& g, const std::string& models, bool cheating,
                           const std::string& config_path) {
  json opts = config_path.empty() ? json::object() : load_config(config_path).j;
  if (cheating) opts["cheating"] = true;
  require_file(models, "surrogate model directory", "train one with `wecfarm surrogate train`");
  Run run("surrogate validate", {{"models", models}, {"options", opts}}, g, 0);
  run.input_dir(models);
  char* out = nullptr;
  check(wf_surrogate_validate(models.c_str(), opts.dump().c_str(), g.thread_count(), &out));
  const json rep = take(out);
  write_mse_outputs(run, rep["maps"]);
  run.write("report.json", strip_points(rep).dump(2) + "\n");
  const bool ok = print_gate(rep);
  run.finish({{"passed", ok}, {"cheating", opts.value("cheating", false)}});
  print_run(run);
  if (!ok) {
    std::cerr << "error: gate: at least one map exceeds the MSE gate " << rep["gate"] << "\n";
    return 2;
  }
  return 0;
}

// ---- optimize -------------------------------------------------------

int cmd_optimize(const Globals& g, const std::string& config_path) {
  Config c = load_config(config_path);
  auto keys = kEvalKeys;
  keys.insert(keys.end(), {"study", "inject_from"});
  check_keys(c.j, keys, {"site", "study"}, config_path);
  json study = c.j["study"];
  if (!study.is_object()) fail_input("config", "study: expected an object");
  if (g.seed) study["ga"]["seed"] = *g.seed;
  const std::uint64_t seed = study.contains("ga") ? study["ga"].value("seed", std::uint64_t{42}) : 42;
  c.j["study"] = study;
  Run run("optimize", c.j, g, seed);
  if (c.j.contains("inject_from")) {
    for (const auto& p : c.j["inject_from"]) {
      fs::path path = c.resolve(p.get<std::string>());
      if (fs::is_directory(path)) path /= "best_design.json";
      require_file(path, "design to inject", "run the preceding study first");
      run.input(path);
      study["inject"].push_back(read_json_file(path, "design to inject"));
    }
  }
  Setup s = open_setup(c, run);
  auto progress = [](const char* text, void*) {
    const json r = json::parse(text);
    std::fprintf(stderr, "gen %3d  best %.6g  pv %.6g  feasible %.2f\n", r["generation"].get<int>(),
                 r["best_fitness"].get<double>(), r["best_pv"].get<double>(),
                 r["feasible_rate"].get<double>());
  };
  char* out = nullptr;
  check(wf_optimize(s.eval.get(), study.dump().c_str(), g.thread_count(), progress, nullptr, &out));
  const json r = take(out);

  std::ostringstream hist;
  hist << "generation,best_fitness,median_fitness,feasible_rate,best_pv,best_feasible\n";
  for (const auto& h : r["history"])
    hist << h["generation"] << ',' << fmt(h["best_fitness"].get<double>()) << ','
         << fmt(h["median_fitness"].get<double>()) << ',' << fmt(h["feasible_rate"].get<double>())
         << ',' << fmt(h["best_pv"].get<double>()) << ',' << (h["best_feasible"].get<bool>() ? 1 : 0)
         << '\n';
  run.write("history.csv", hist.str());

  json best = r["best"];
  run.write("best_design.json", best.dump(2) + "\n");
  run.write("result.json", r.dump(2) + "\n");

  // per-device position, control and power (scatter data for the control study)
  std::ostringstream dev;
  dev << "device,x,y,stiffness,damping,power\n";
  const std::size_t n = best["layout"].size();
  for (std::size_t i = 0; i < n; ++i) {
    auto pick = [&](const char* k) {
      const json& v = best["pto"][k];
      return v.is_array() ? v[i].get<double>() : v.get<double>();
    };
    dev << i << ',' << fmt(best["layout"][i][0].get<double>()) << ','
        << fmt(best["layout"][i][1].get<double>()) << ',' << fmt(pick("stiffness")) << ','
        << fmt(pick("damping")) << ',' << fmt(r["best_result"]["device_power"][i].get<double>())
        << '\n';
  }
  run.write("devices.csv", dev.str());
  const double pv = r["best_result"]["p_v"].get<double>();
  std::ostringstream title;
  title << "Study " << r["study"]["study"].get<std::string>() << " best layout, p_v = " << pv
        << " W/m^3";
  run.write("layout.svg", layout_plot(best, r["study"]["farm_half_width"].get<double>(), title.str()));

  const json& br = r["best_result"];
  run.finish({{"p_v", pv},
              {"feasible", br["feasible"]},
              {"q_factor", br["q_factor"]},
              {"evaluations", r["evaluations"]},
              {"active_bounds", r["active_bounds"]}});
  std::cout << "study " << r["study"]["study"].get<std::string>() << ": p_v " << fmt(pv)
            << " W/m^3, R " << fmt(best["radius"].get<double>()) << ", R/D "
            << fmt(best["slenderness"].get<double>()) << ", feasible "
            << (br["feasible"].get<bool>() ? "yes" : "no") << ", q "
            << (br["q_factor"].is_null() ? std::string("-") : fmt(br["q_factor"].get<double>()))
            << "\n";
  for (const auto& a : r["active_bounds"]) std::cout << "active bound: " << a.get<std::string>() << "\n";
  print_run(run);
  return 0;
}

// ---- analyze --------------------------------------------------------

int cmd_benchmark(const Globals& g, const std::string& config_path) {
  Config c = load_config(config_path);
  auto keys = kEvalKeys;
  keys.insert(keys.end(), {"samples", "devices", "seed", "cheating"});
  check_keys(c.j, keys, {"site"}, config_path);
  const bool cheating = c.j.value("cheating", false);
  if (!cheating && !c.j.contains("models"))
    fail_input("config", "benchmark needs \"models\" (or \"cheating\": true)");
  c.j["provider"] = cheating ? "reference" : "surrogate";
  const std::uint64_t seed = pick_seed(g, c.j, "seed", 1);
  c.j["seed"] = seed;
  const std::size_t samples = c.j.value("samples", std::size_t{1000});
  const std::size_t devices = c.j.value("devices", std::size_t{5});
  Run run("analyze benchmark", c.j, g, seed);
  Setup s = open_setup(c, run, true);
  char* out = nullptr;
  check(wf_benchmark(s.ref_eval.get(), s.eval.get(), samples, devices, seed, g.thread_count(), &out));
  const json r = take(out);
  std::ostringstream csv;
  csv << "sample,reference_pv,surrogate_pv,relative_error\n";
  std::vector<double> rel;
  for (std::size_t i = 0; i < r["relative_error"].size(); ++i) {
    rel.push_back(r["relative_error"][i].get<double>());
    csv << i << ',' << fmt(r["reference_pv"][i].get<double>()) << ','
        << fmt(r["surrogate_pv"][i].get<double>()) << ',' << fmt(rel.back()) << '\n';
  }
  run.write("benchmark.csv", csv.str());
  json brief = r;
  brief.erase("reference_pv");
  brief.erase("surrogate_pv");
  brief.erase("relative_error");
  run.write("benchmark.json", brief.dump(2) + "\n");
  const double p99 = r["relative"]["p99"].get<double>();
  run.write("error_histogram.svg",
            histogram_svg(rel, 40, "Relative p_v error, surrogate vs reference", "relative error",
                          p99, "99th percentile"));
  run.finish({{"p50", r["relative"]["p50"]}, {"p95", r["relative"]["p95"]}, {"p99", p99},
              {"max", r["relative"]["max"]}, {"skipped", r["skipped"]}});
  std::cout << "benchmark: " << r["samples"] << " designs, relative p_v error p50 "
            << fmt(r["relative"]["p50"].get<double>()) << " p95 "
            << fmt(r["relative"]["p95"].get<double>()) << " p99 " << fmt(p99) << " max "
            << fmt(r["relative"]["max"].get<double>()) << "\n";
  print_run(run);
  return 0;
}

int cmd_random_layouts(const Globals& g, const std::string& config_path) {
  Config c = load_config(config_path);
  auto keys = kEvalKeys;
  keys.insert(keys.end(), {"design", "samples", "seed"});
  check_keys(c.j, keys, {"site", "design"}, config_path);
  const std::uint64_t seed = pick_seed(g, c.j, "seed", 1);
  c.j["seed"] = seed;
  const std::size_t samples = c.j.value("samples", std::size_t{250});
  Run run("analyze random-layouts", c.j, g, seed);
  const json design = load_design(c, run);
  Setup s = open_setup(c, run);
  char* out = nullptr;
  check(wf_random_layouts(s.eval.get(), design.dump().c_str(), samples, seed, g.thread_count(), &out));
  const json r = take(out);
  std::ostringstream csv;
  csv << "sample,p_v\n";
  std::vector<double> pv;
  for (std::size_t i = 0; i < r["layout_pv"].size(); ++i) {
    pv.push_back(r["layout_pv"][i].get<double>());
    csv << i << ',' << fmt(pv.back()) << '\n';
  }
  run.write("random_layouts.csv", csv.str());
  run.write("random_layouts.json",
            json{{"design_pv", r["design_pv"]}, {"percentile", r["percentile"]},
                 {"samples", samples}, {"seed", seed}}
                    .dump(2) + "\n");
  run.write("histogram.svg", histogram_svg(pv, 30, "p_v of random feasible layouts", "p_v [W/m^3]",
                                           r["design_pv"].get<double>(), "design"));
  run.finish({{"design_pv", r["design_pv"]}, {"percentile", r["percentile"]}});
  std::cout << "design p_v " << fmt(r["design_pv"].get<double>()) << " ranks at percentile "
            << fmt(r["percentile"].get<double>()) << " of " << samples << " random layouts\n";
  print_run(run);
  return 0;
}

int cmd_sensitivity(const Globals& g, const std::string& config_path) {
  Config c = load_config(config_path);
  auto keys = kEvalKeys;
  keys.insert(keys.end(), {"design", "wec_index", "resolution", "window"});
  check_keys(c.j, keys, {"site", "design"}, config_path);
  const std::size_t index = c.j.value("wec_index", std::size_t{1});
  const int resolution = c.j.value("resolution", 41);
  const double window = c.j.value("window", 60.0);
  Run run("analyze sensitivity", c.j, g, 0);
  const json design = load_design(c, run);
  Setup s = open_setup(c, run);
  char* out = nullptr;
  check(wf_sensitivity(s.eval.get(), design.dump().c_str(), index, resolution, window,
                       g.thread_count(), &out));
  const json r = take(out);
  Grid2 grid;
  for (const auto& v : r["xs"]) grid.xs.push_back(v.get<double>());
  for (const auto& v : r["ys"]) grid.ys.push_back(v.get<double>());
  std::ostringstream csv;
  csv << "x,y,p_v\n";
  for (std::size_t j = 0; j < grid.ys.size(); ++j) {
    std::vector<double> row;
    for (std::size_t i = 0; i < grid.xs.size(); ++i) {
      const json& v = r["pv"][j][i];
      row.push_back(v.is_null() ? NAN : v.get<double>());
      csv << fmt(grid.xs[i]) << ',' << fmt(grid.ys[j]) << ','
          << (v.is_null() ? std::string("nan") : fmt(v.get<double>())) << '\n';
    }
    grid.z.push_back(std::move(row));
  }
  run.write("sensitivity.csv", csv.str());
  json brief = r;
  brief.erase("pv");
  run.write("sensitivity.json", brief.dump(2) + "\n");
  const json& pos = design["layout"][index];
  std::vector<Marker> markers{{pos[0].get<double>(), pos[1].get<double>(), "design"},
                              {r["best_position"][0].get<double>(),
                               r["best_position"][1].get<double>(), "argmax"}};
  run.write("sensitivity.svg",
            heatmap_svg(grid, "p_v with device " + std::to_string(index) + " moved", "x [m]",
                        "y [m]", markers, 8));
  run.finish({{"design_pv", r["design_pv"]}, {"best_pv", r["best_pv"]}, {"offset", r["offset"]},
              {"gap", r["gap"]}});
  std::cout << "device " << index << ": argmax offset " << fmt(r["offset"].get<double>())
            << " m, p_v gap " << fmt(r["gap"].get<double>()) << "\n";
  print_run(run);
  return 0;
}

// ---- eval -----------------------------------------------------------

int cmd_eval(const Globals& g, const std::string& config_path) {
  Config c = load_config(config_path);
  auto keys = kEvalKeys;
  keys.insert(keys.end(), {"design", "with_q"});
  check_keys(c.j, keys, {"site", "design"}, config_path);
  Run run("eval", c.j, g, 0);
  const json design = load_design(c, run);
  Setup s = open_setup(c, run);
  char* out = nullptr;
  check(wf_evaluate(s.eval.get(), design.dump().c_str(), c.j.value("with_q", true), &out));
  const json r = take(out);
  run.write("result.json", r.dump(2) + "\n");
  const std::size_t n = r["design"]["layout"].size();
  run.write("layout.svg", layout_plot(r["design"], farm_half_width(n), "Evaluated layout"));
  run.finish({{"p_v", r["p_v"]}, {"feasible", r["feasible"]}});
  std::cout << "p_v " << fmt(r["p_v"].get<double>()) << " W/m^3, p_a "
            << fmt(r["p_a_per_year"].get<double>()) << " W/year-avg, feasible "
            << (r["feasible"].get<bool>() ? "yes" : "no");
  if (!r["q_factor"].is_null()) std::cout << ", q " << fmt(r["q_factor"].get<double>());
  std::cout << "\n";
  for (const auto& v : r["violations"])
    std::cout << "spacing violation: devices " << v["p"] << "," << v["q"] << " by "
              << fmt(v["magnitude"].get<double>()) << " m\n";
  print_run(run);
  return 0;
}

void print_failure(const Failure& f) {
  std::istringstream lines(f.message);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    if (first) std::cerr << "error: " << f.kind << ": " << line << "\n";
    else std::cerr << "  " << line.substr(std::min(line.find_first_not_of(' '), line.size())) << "\n";
    first = false;
  }
  if (first) std::cerr << "error: " << f.kind << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wave-energy farm design: sites, surrogates, optimisation and analysis"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides config seeds)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output root (default $WECFARM_OUT or ./runs)");
  app.add_option("--name", g.name, "Run directory name (default: command and config hash)");
  app.set_version_flag("--version", std::string(wf_version()));

  std::string config, records, site_id, profile, out_csv, models;
  std::size_t count = 2000;
  bool cheating = false;
  std::function<int()> action;

  auto* sites = app.add_subcommand("sites", "Sea-state climates")->require_subcommand(1);
  auto* sbuild = sites->add_subcommand("build", "Build a site climate from an (hs, tp) record CSV");
  sbuild->add_option("--records", records, "CSV with header hs_m,tp_s[,year]")->required();
  sbuild->add_option("--site-id", site_id, "Site identifier (default: CSV file stem)");
  sbuild->add_option("--config", config, "Climate options JSON");
  sbuild->callback([&] { action = [&] { return cmd_sites_build(g, records, site_id, config); }; });
  auto* ssynth = sites->add_subcommand("synth", "Write a synthetic record CSV");
  ssynth->add_option("--profile", profile, "alaska, east_coast, pacific_islands, west_coast, bimodal")
      ->required();
  ssynth->add_option("--count", count, "Number of records")->capture_default_str();
  ssynth->add_option("--out", out_csv, "Output CSV path")->required();
  ssynth->callback([&] { action = [&] { return cmd_sites_synth(g, profile, count, out_csv); }; });

  auto* sur = app.add_subcommand("surrogate", "Surrogate coefficient models")->require_subcommand(1);
  auto* strain = sur->add_subcommand("train", "Train the committees by query-by-committee");
  strain->add_option("--config", config, "Training plan JSON (defaults when omitted)");
  strain->callback([&] { action = [&] { return cmd_surrogate_train(g, config); }; });
  auto* sval = sur->add_subcommand("validate", "Grid MSE of trained committees");
  sval->add_option("--models", models, "Model directory")->required();
  sval->add_option("--config", config, "Validation options JSON");
  sval->add_flag("--cheating", cheating, "Validate the reference model against itself");
  sval->callback([&] { action = [&] { return cmd_surrogate_validate(g, models, cheating, config); }; });

  auto* opt = app.add_subcommand("optimize", "Run a design study with the genetic algorithm");
  opt->add_option("--config", config, "Study config JSON")->required();
  opt->callback([&] { action = [&] { return cmd_optimize(g, config); }; });

  auto* an = app.add_subcommand("analyze", "Post-optimisation analyses")->require_subcommand(1);
  auto* abench = an->add_subcommand("benchmark", "Surrogate vs reference p_v error on random designs");
  abench->add_option("--config", config, "Benchmark config JSON")->required();
  abench->callback([&] { action = [&] { return cmd_benchmark(g, config); }; });
  auto* arand = an->add_subcommand("random-layouts", "Rank a design among random layouts");
  arand->add_option("--config", config, "Config JSON")->required();
  arand->callback([&] { action = [&] { return cmd_random_layouts(g, config); }; });
  auto* asens = an->add_subcommand("sensitivity", "p_v map for moving one device");
  asens->add_option("--config", config, "Config JSON")->required();
  asens->callback([&] { action = [&] { return cmd_sensitivity(g, config); }; });

  auto* ev = app.add_subcommand("eval", "Evaluate one design");
  ev->add_option("--config", config, "Config JSON")->required();
  ev->callback([&] { action = [&] { return cmd_eval(g, config); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count() > 0) g.seed = seed;
  try {
    return action();
  } catch (const Failure& f) {
    print_failure(f);
    return f.code;
  } catch (const json::exception& e) {
    print_failure({1, "config", e.what()});
    return 1;
  } catch (const std::exception& e) {
    print_failure({2, "internal", e.what()});
    return 2;
  }
}
