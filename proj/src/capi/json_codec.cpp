#include "capi/json_codec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wecfarm/error.hpp"

namespace wecfarm::capi {

json parse_object(const char* text, const std::string& what) {
  if (text == nullptr || *text == '\0') return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, what + ": " + e.what());
  }
  if (j.is_null()) return json::object();
  require(j.is_object(), ErrorKind::config, what + ": expected a JSON object");
  return j;
}

Reader::Reader(const json& j, std::string path, std::vector<std::string>* problems)
    : j_(j), path_(std::move(path)), problems_(problems) {
  if (!j_.is_object()) problem("expected an object");
}

bool Reader::has(const char* key) const { return j_.is_object() && j_.contains(key); }

const json* Reader::get(const char* key) {
  seen_.emplace_back(key);
  if (!has(key)) return nullptr;
  const json& v = j_.at(key);
  return v.is_null() ? nullptr : &v;
}

double Reader::number(const char* key, double fallback) {
  const json* v = get(key);
  if (!v) return fallback;
  if (!v->is_number()) {
    problem(std::string(key) + ": expected a number");
    return fallback;
  }
  return v->get<double>();
}

long long Reader::integer(const char* key, long long fallback) {
  const json* v = get(key);
  if (!v) return fallback;
  if (!v->is_number_integer()) {
    problem(std::string(key) + ": expected an integer");
    return fallback;
  }
  return v->get<long long>();
}

bool Reader::boolean(const char* key, bool fallback) {
  const json* v = get(key);
  if (!v) return fallback;
  if (!v->is_boolean()) {
    problem(std::string(key) + ": expected true or false");
    return fallback;
  }
  return v->get<bool>();
}

std::string Reader::string(const char* key, const std::string& fallback) {
  const json* v = get(key);
  if (!v) return fallback;
  if (!v->is_string()) {
    problem(std::string(key) + ": expected a string");
    return fallback;
  }
  return v->get<std::string>();
}

const json* Reader::object(const char* key) {
  const json* v = get(key);
  if (v && !v->is_object()) {
    problem(std::string(key) + ": expected an object");
    return nullptr;
  }
  return v;
}

void Reader::finish() {
  if (!j_.is_object()) return;
  for (const auto& [k, v] : j_.items()) {
    if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
      problem(k + ": unknown key");
  }
}

void raise_problems(const std::vector<std::string>& problems, const std::string& what) {
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << what << ": " << problems.size() << " problem" << (problems.size() > 1 ? "s" : "");
  for (const auto& p : problems) msg << "\n  " << p;
  fail(ErrorKind::config, msg.str());
}

namespace {

const json& empty_object() {
  static const json e = json::object();
  return e;
}

// Runs a validate() and turns its error into a problem line.
template <class F>
void check(F&& f, const std::string& where, std::vector<std::string>* problems) {
  try {
    f();
  } catch (const Error& e) {
    std::istringstream lines(e.what());
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      auto first = line.find_first_not_of(' ');
      problems->push_back(where + line.substr(first));
    }
  }
}

}  // namespace

FrequencyGrid read_frequency(const json* j, std::vector<std::string>* problems) {
  Reader r(j ? *j : empty_object(), "frequency.", problems);
  const double lo = r.number("min", FrequencyGrid::kDefaultMin);
  const double hi = r.number("max", FrequencyGrid::kDefaultMax);
  const long long n = r.integer("count", FrequencyGrid::kDefaultCount);
  r.finish();
  FrequencyGrid g;
  check([&] { g = FrequencyGrid::uniform(lo, hi, static_cast<int>(n)); }, "frequency.", problems);
  return g;
}

Environment read_environment(const json* j, std::vector<std::string>* problems) {
  Reader r(j ? *j : empty_object(), "environment.", problems);
  Environment e;
  e.water_depth = r.number("water_depth", e.water_depth);
  e.gravity = r.number("gravity", e.gravity);
  e.water_density = r.number("water_density", e.water_density);
  r.finish();
  check([&] { e.validate(); }, "environment.", problems);
  return e;
}

EfficiencyChain read_efficiency(const json* j, std::vector<std::string>* problems) {
  Reader r(j ? *j : empty_object(), "efficiency.", problems);
  EfficiencyChain e;
  e.pcc = r.number("pcc", e.pcc);
  e.operational_availability = r.number("operational_availability", e.operational_availability);
  e.transmission = r.number("transmission", e.transmission);
  r.finish();
  check([&] { e.validate(); }, "efficiency.", problems);
  return e;
}

DesignBounds read_bounds(const json* j, std::vector<std::string>* problems) {
  Reader r(j ? *j : empty_object(), "bounds.", problems);
  DesignBounds b;
  b.radius_min = r.number("radius_min", b.radius_min);
  b.radius_max = r.number("radius_max", b.radius_max);
  b.slenderness_min = r.number("slenderness_min", b.slenderness_min);
  b.slenderness_max = r.number("slenderness_max", b.slenderness_max);
  b.draft_min = r.number("draft_min", b.draft_min);
  b.draft_max = r.number("draft_max", b.draft_max);
  b.stiffness_min = r.number("stiffness_min", b.stiffness_min);
  b.stiffness_max = r.number("stiffness_max", b.stiffness_max);
  b.damping_min = r.number("damping_min", b.damping_min);
  b.damping_max = r.number("damping_max", b.damping_max);
  b.clearance = r.number("clearance", b.clearance);
  r.finish();
  check([&] { b.validate(); }, "bounds.", problems);
  return b;
}

ClimateOptions read_climate_options(const json* j, std::vector<std::string>* problems) {
  Reader r(j ? *j : empty_object(), "", problems);
  ClimateOptions o;
  o.n_gq = static_cast<int>(r.integer("n_gq", o.n_gq));
  o.years = static_cast<int>(r.integer("years", o.years));
  o.bandwidth_scale = r.number("bandwidth_scale", o.bandwidth_scale);
  o.min_records = static_cast<std::size_t>(r.integer("min_records", o.min_records));
  if (const json* b = r.object("bounds")) {
    Reader rb(*b, "bounds.", problems);
    o.bounds.hs_min = rb.number("hs_min", o.bounds.hs_min);
    o.bounds.hs_max = rb.number("hs_max", o.bounds.hs_max);
    o.bounds.tp_min = rb.number("tp_min", o.bounds.tp_min);
    o.bounds.tp_max = rb.number("tp_max", o.bounds.tp_max);
    rb.finish();
  }
  r.finish();
  if (o.n_gq < 2) problems->push_back("n_gq must be >= 2");
  if (o.years < 1) problems->push_back("years must be >= 1");
  if (!(o.bandwidth_scale > 0)) problems->push_back("bandwidth_scale must be positive");
  check([&] { o.bounds.validate(); }, "bounds.", problems);
  return o;
}

GaConfig read_ga(const json* j, std::vector<std::string>* problems) {
  Reader r(j ? *j : empty_object(), "ga.", problems);
  GaConfig g;
  g.population = static_cast<int>(r.integer("population", g.population));
  g.generations = static_cast<int>(r.integer("generations", g.generations));
  g.crossover_probability = r.number("crossover_probability", g.crossover_probability);
  g.crossover_eta = r.number("crossover_eta", g.crossover_eta);
  g.mutation_probability = r.number("mutation_probability", g.mutation_probability);
  g.mutation_eta = r.number("mutation_eta", g.mutation_eta);
  g.tournament = static_cast<int>(r.integer("tournament", g.tournament));
  g.elitism = static_cast<int>(r.integer("elitism", g.elitism));
  g.penalty = r.number("penalty", g.penalty);
  g.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<long long>(g.seed)));
  r.finish();
  check([&] { g.validate(); }, "ga.", problems);
  return g;
}

TrainPlan read_train_plan(const json& j, FrequencyGrid* grid, Environment* env,
                          std::vector<std::string>* problems) {
  Reader r(j, "", problems);
  TrainPlan p;
  *grid = read_frequency(r.object("frequency"), problems);
  *env = read_environment(r.object("environment"), problems);
  if (const json* s = r.object("space")) {
    Reader rs(*s, "space.", problems);
    auto& sp = p.space;
    sp.radius_min = rs.number("radius_min", sp.radius_min);
    sp.radius_max = rs.number("radius_max", sp.radius_max);
    sp.slenderness_min = rs.number("slenderness_min", sp.slenderness_min);
    sp.slenderness_max = rs.number("slenderness_max", sp.slenderness_max);
    sp.draft_min = rs.number("draft_min", sp.draft_min);
    sp.draft_max = rs.number("draft_max", sp.draft_max);
    sp.clearance = rs.number("clearance", sp.clearance);
    sp.separation_max = rs.number("separation_max", sp.separation_max);
    rs.finish();
  }
  if (const json* c = r.object("committee")) {
    Reader rc(*c, "committee.", problems);
    auto& cc = p.committee;
    if (const json* h = rc.get("hidden")) {
      try {
        cc.hidden = h->get<std::vector<int>>();
      } catch (const json::exception&) {
        rc.problem("hidden: expected an array of integers");
      }
    }
    cc.members = static_cast<int>(rc.integer("members", cc.members));
    cc.bootstrap = rc.number("bootstrap", cc.bootstrap);
    cc.min_samples = static_cast<std::size_t>(rc.integer("min_samples", cc.min_samples));
    cc.sgd.learning_rate = rc.number("learning_rate", cc.sgd.learning_rate);
    cc.sgd.momentum = rc.number("momentum", cc.sgd.momentum);
    cc.sgd.batch = static_cast<int>(rc.integer("batch", cc.sgd.batch));
    cc.seed = static_cast<std::uint64_t>(rc.integer("seed", static_cast<long long>(cc.seed)));
    rc.finish();
  }
  if (const json* m = r.get("maps")) {
    if (!m->is_array()) {
      r.problem("maps: expected an array of map names");
    } else {
      p.maps.clear();
      for (const auto& name : *m) {
        try {
          p.maps.push_back(map_from_name(name.get<std::string>()));
        } catch (const std::exception&) {
          r.problem("maps: unknown map " + name.dump());
        }
      }
    }
  }
  auto size = [&](const char* key, std::size_t fallback) {
    const long long v = r.integer(key, static_cast<long long>(fallback));
    if (v < 0) r.problem(std::string(key) + ": must be >= 0");
    return static_cast<std::size_t>(std::max(0LL, v));
  };
  p.initial_single = size("initial_single", p.initial_single);
  p.initial_pair = size("initial_pair", p.initial_pair);
  p.rounds = static_cast<int>(r.integer("rounds", p.rounds));
  p.batch_single = size("batch_single", p.batch_single);
  p.batch_pair = size("batch_pair", p.batch_pair);
  p.pool = size("pool", p.pool);
  p.face_fraction = r.number("face_fraction", p.face_fraction);
  p.epochs_single = static_cast<int>(r.integer("epochs_single", p.epochs_single));
  p.epochs_pair = static_cast<int>(r.integer("epochs_pair", p.epochs_pair));
  p.retrain_single = static_cast<int>(r.integer("retrain_single", p.retrain_single));
  p.retrain_pair = static_cast<int>(r.integer("retrain_pair", p.retrain_pair));
  p.grid_single = static_cast<int>(r.integer("grid_single", p.grid_single));
  p.grid_pair = static_cast<int>(r.integer("grid_pair", p.grid_pair));
  p.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<long long>(p.seed)));
  r.finish();
  check([&] { p.validate(); }, "", problems);
  return p;
}

namespace {

std::vector<double> number_or_array(const json& v, std::size_t n, const std::string& what) {
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  require(v.is_array(), ErrorKind::config, what + ": expected a number or an array");
  std::vector<double> out;
  for (const auto& e : v) {
    require(e.is_number(), ErrorKind::config, what + ": expected numbers");
    out.push_back(e.get<double>());
  }
  require(out.size() == n, ErrorKind::dimension,
          what + ": expected " + std::to_string(n) + " values, got " + std::to_string(out.size()));
  return out;
}

}  // namespace

DesignPoint design_from_json(const json& j, const std::string& where) {
  std::vector<std::string> problems;
  Reader r(j, where, &problems);
  const double radius = r.number("radius", NAN);
  const double slender = r.number("slenderness", NAN);
  if (!r.has("radius")) r.problem("radius: missing");
  if (!r.has("slenderness")) r.problem("slenderness: missing");
  std::vector<Point> pts;
  if (const json* l = r.get("layout")) {
    if (!l->is_array() || l->empty()) {
      r.problem("layout: expected a non-empty array of [x, y]");
    } else {
      for (const auto& p : *l) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          r.problem("layout: every position must be [x, y]");
          break;
        }
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
      }
    }
  } else {
    r.problem("layout: missing");
  }
  PtoSettings pto;
  if (const json* p = r.object("pto")) {
    Reader rp(*p, where + "pto.", &problems);
    const json* k = rp.get("stiffness");
    const json* b = rp.get("damping");
    if (!k || !b) rp.problem("stiffness and damping are both required");
    rp.finish();
    if (k && b && !pts.empty()) {
      try {
        const bool shared = k->is_number() && b->is_number();
        auto ks = number_or_array(*k, pts.size(), where + "pto.stiffness");
        auto bs = number_or_array(*b, pts.size(), where + "pto.damping");
        pto = shared ? PtoSettings::uniform(pts.size(), ks[0], bs[0])
                     : PtoSettings::per_device(std::move(ks), std::move(bs));
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    }
  } else {
    r.problem("pto: missing");
  }
  DesignPoint d;
  d.site_id = r.string("site_id", "");
  r.get("draft");  // written for readers, derived from the two above
  r.finish();
  raise_problems(problems, "design");
  d.geometry = WecGeometry(radius, slender);
  d.layout = Layout(std::move(pts));
  d.pto = std::move(pto);
  return d;
}

json design_to_json(const DesignPoint& d) {
  json j;
  j["radius"] = d.geometry.radius();
  j["slenderness"] = d.geometry.slenderness();
  j["draft"] = d.geometry.draft();
  if (d.pto.mode == PtoSettings::Mode::farm_uniform && d.pto.size() > 0) {
    j["pto"] = {{"stiffness", d.pto.stiffness[0]}, {"damping", d.pto.damping[0]}};
  } else {
    j["pto"] = {{"stiffness", d.pto.stiffness}, {"damping", d.pto.damping}};
  }
  json layout = json::array();
  for (const auto& p : d.layout.positions()) layout.push_back({p.x, p.y});
  j["layout"] = std::move(layout);
  j["site_id"] = d.site_id;
  return j;
}

StudySpec study_from_json(const json& j) {
  std::vector<std::string> problems;
  Reader r(j, "", &problems);
  StudySpec s;
  const std::string name = r.string("study", "");
  if (name.empty()) {
    r.problem("study: missing (I, II or III)");
  } else {
    try {
      s.study = study_from_name(name);
    } catch (const Error& e) {
      r.problem(std::string("study: ") + e.what());
    }
  }
  const long long devices = r.integer("devices", static_cast<long long>(s.devices));
  if (devices < 1) r.problem("devices: must be >= 1");
  s.devices = static_cast<std::size_t>(std::max(1LL, devices));
  if (const json* fc = r.get("fixed_control")) {
    if (fc->is_array() && fc->size() == 2 && (*fc)[0].is_number() && (*fc)[1].is_number()) {
      s.fixed_control = std::make_pair((*fc)[0].get<double>(), (*fc)[1].get<double>());
    } else if (fc->is_object() && fc->contains("stiffness") && fc->contains("damping")) {
      s.fixed_control = std::make_pair(fc->at("stiffness").get<double>(),
                                       fc->at("damping").get<double>());
    } else {
      r.problem("fixed_control: expected [stiffness, damping]");
    }
  }
  s.ga = read_ga(r.object("ga"), &problems);
  s.bounds = read_bounds(r.object("bounds"), &problems);
  if (const json* inj = r.get("inject")) {
    if (!inj->is_array()) {
      r.problem("inject: expected an array of designs");
    } else {
      for (std::size_t i = 0; i < inj->size(); ++i) {
        try {
          s.inject.push_back(design_from_json((*inj)[i], "inject[" + std::to_string(i) + "]."));
        } catch (const Error& e) {
          problems.push_back(e.what());
        }
      }
    }
  }
  s.polish = r.boolean("polish", s.polish);
  s.polish_evaluations = static_cast<int>(r.integer("polish_evaluations", s.polish_evaluations));
  r.finish();
  if (problems.empty()) check([&] { s.validate(); }, "", &problems);
  raise_problems(problems, "study config");
  return s;
}

json study_to_json(const StudySpec& s) {
  json j;
  j["study"] = study_name(s.study);
  j["devices"] = s.devices;
  j["farm_half_width"] = DesignBounds::farm_half_width(s.devices);
  if (s.fixed_control) j["fixed_control"] = {s.fixed_control->first, s.fixed_control->second};
  j["ga"] = {{"population", s.ga.population},
             {"generations", s.ga.generations},
             {"crossover_probability", s.ga.crossover_probability},
             {"crossover_eta", s.ga.crossover_eta},
             {"mutation_probability", s.ga.mutation_probability},
             {"mutation_eta", s.ga.mutation_eta},
             {"tournament", s.ga.tournament},
             {"elitism", s.ga.elitism},
             {"penalty", s.ga.penalty},
             {"seed", s.ga.seed}};
  j["polish"] = s.polish;
  j["inject"] = s.inject.size();
  return j;
}

json result_to_json(const EvaluationResult& r) {
  json j;
  j["p_a"] = r.p_a;
  j["p_a_per_year"] = r.p_a_per_year;
  j["p_v"] = r.p_v;
  j["device_power"] = r.device_power;
  j["q_factor"] = r.q_factor ? json(*r.q_factor) : json(nullptr);
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"p", x.p}, {"q", x.q}, {"magnitude", x.magnitude}});
  j["violations"] = std::move(v);
  j["feasible"] = r.feasible();
  j["evaluated"] = r.evaluated;
  j["provider"] = r.provider;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  return j;
}

json generation_to_json(const GenerationRecord& g) {
  return {{"generation", g.generation},     {"best_fitness", g.best_fitness},
          {"median_fitness", g.median_fitness}, {"feasible_rate", g.feasible_rate},
          {"best_pv", g.best_pv},           {"best_feasible", g.best_feasible}};
}

json ga_result_to_json(const GaResult& r, const StudySpec& spec) {
  json j;
  j["study"] = study_to_json(spec);
  j["best"] = design_to_json(r.best);
  j["best_result"] = result_to_json(r.best_result);
  j["best_fitness"] = r.best_fitness;
  j["best_genome"] = std::vector<double>(r.best_genome.data(),
                                         r.best_genome.data() + r.best_genome.size());
  j["found_feasible"] = r.found_feasible;
  json h = json::array();
  for (const auto& g : r.history) h.push_back(generation_to_json(g));
  j["history"] = std::move(h);
  j["active_bounds"] = r.active_bounds;
  j["evaluations"] = r.evaluations;
  j["polish_gain"] = r.polish_gain ? json(*r.polish_gain) : json(nullptr);
  return j;
}

namespace {

json percentiles_json(const Percentiles& p) {
  return {{"p50", p.p50}, {"p95", p.p95}, {"p99", p.p99}, {"max", p.max}};
}

}  // namespace

json benchmark_to_json(const BenchmarkReport& r) {
  json j;
  json ref = json::array(), sur = json::array(), rel = json::array();
  for (const auto& s : r.samples) {
    ref.push_back(s.reference_pv);
    sur.push_back(s.surrogate_pv);
    rel.push_back(s.relative_error);
  }
  j["reference_pv"] = std::move(ref);
  j["surrogate_pv"] = std::move(sur);
  j["relative_error"] = std::move(rel);
  j["relative"] = percentiles_json(r.relative);
  j["absolute"] = percentiles_json(r.absolute);
  j["samples"] = r.samples.size();
  j["skipped"] = r.skipped;
  return j;
}

json random_layouts_to_json(const RandomLayoutReport& r) {
  return {{"design_pv", r.design_pv}, {"layout_pv", r.layout_pv}, {"percentile", r.percentile}};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const double v = m(i, k);
      row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json sensitivity_to_json(const SensitivityMap& m) {
  json j;
  j["wec_index"] = m.wec_index;
  j["xs"] = m.xs;
  j["ys"] = m.ys;
  j["pv"] = matrix_to_json(m.pv);
  j["design_pv"] = m.design_pv;
  j["best_pv"] = m.best_pv;
  j["best_position"] = {m.best_position.x, m.best_position.y};
  j["offset"] = m.offset;
  j["gap"] = m.gap;
  return j;
}

json mse_map_to_json(const MseMap& m) {
  json j;
  j["map"] = map_name(m.target);
  j["max"] = m.max;
  j["mean"] = m.mean;
  j["median"] = m.median;
  j["points"] = matrix_to_json(m.points);
  j["mse"] = std::vector<double>(m.mse.data(), m.mse.data() + m.mse.size());
  return j;
}

json training_report_to_json(const MapTrainingReport& r) {
  json j;
  j["map"] = map_name(r.target);
  j["zero_variance"] = r.zero_variance;
  json rounds = json::array();
  for (const auto& q : r.rounds) {
    rounds.push_back({{"round", q.round},
                      {"dataset_size", q.dataset_size},
                      {"max_disagreement", q.max_disagreement},
                      {"mean_disagreement", q.mean_disagreement},
                      {"grid_mse", q.grid_mse ? json(*q.grid_mse) : json(nullptr)}});
  }
  j["rounds"] = std::move(rounds);
  j["validation"] = mse_map_to_json(r.validation);
  return j;
}

json frequency_to_json(const FrequencyGrid& g) { return g.values(); }

json environment_to_json(const Environment& e) {
  return {{"water_depth", e.water_depth}, {"gravity", e.gravity}, {"water_density", e.water_density}};
}

}  // namespace wecfarm::capi
