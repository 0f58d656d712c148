#include "wecfarm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "wecfarm/error.hpp"
#include "wecfarm/parallel.hpp"
#include "wecfarm/rng.hpp"

namespace wecfarm {

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamOperators = 2;
constexpr std::uint64_t kStreamBenchmark = 30;
constexpr std::uint64_t kStreamLayouts = 40;

std::string genome_text(const Eigen::VectorXd& g) {
  std::ostringstream s;
  s.precision(17);
  s << "[";
  for (Eigen::Index i = 0; i < g.size(); ++i) s << (i ? ", " : "") << g(i);
  s << "]";
  return s.str();
}

bool overlapping(const Layout& layout, const WecGeometry& geom) {
  for (std::size_t p = 0; p < layout.size(); ++p)
    for (std::size_t q = p + 1; q < layout.size(); ++q)
      if (pair_geometry(layout, p, q).separation <= 2.0 * geom.radius()) return true;
  return false;
}

bool inside_farm(const Point& pt, double half_width) {
  return pt.x >= 0.0 && pt.x <= half_width && std::fabs(pt.y) <= half_width;
}

}  // namespace

double DesignBounds::farm_half_width(std::size_t devices) {
  return 0.5 * std::sqrt(20000.0 * static_cast<double>(devices));
}

std::pair<double, double> DesignBounds::slenderness_range(double r) const {
  return {std::max(slenderness_min, r / draft_max), std::min(slenderness_max, r / draft_min)};
}

void DesignBounds::validate() const {
  require(radius_min > 0 && radius_max > radius_min && slenderness_min > 0 &&
              slenderness_max > slenderness_min && draft_min > 0 && draft_max > draft_min,
          ErrorKind::config, "plant bounds are inconsistent");
  require(stiffness_min >= PtoSettings::kMinStiffness &&
              stiffness_max <= PtoSettings::kMaxStiffness && stiffness_max >= stiffness_min,
          ErrorKind::config, "PTO stiffness bounds must lie inside [-5e5, 5e5]");
  require(damping_min >= PtoSettings::kMinDamping && damping_max <= PtoSettings::kMaxDamping &&
              damping_max >= damping_min,
          ErrorKind::config, "PTO damping bounds must lie inside [0, 5e5]");
  require(clearance >= 0, ErrorKind::config, "clearance must be non-negative");
}

std::vector<Violation> min_distance_violations(const Layout& layout, const WecGeometry& geom,
                                               double clearance) {
  std::vector<Violation> out;
  for (std::size_t p = 0; p < layout.size(); ++p)
    for (std::size_t q = p + 1; q < layout.size(); ++q) {
      const double v = 2.0 * geom.radius() + clearance - pair_geometry(layout, p, q).separation;
      if (v > 0.0) out.push_back({p, q, v});
    }
  return out;
}

void check_design_bounds(const DesignPoint& d, const DesignBounds& b) {
  std::vector<std::string> problems;
  auto out_of = [&](const std::string& what, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi)) {
      std::ostringstream s;
      s << what << " " << v << " outside [" << lo << ", " << hi << "]";
      problems.push_back(s.str());
    }
  };
  const auto& g = d.geometry;
  out_of("radius", g.radius(), b.radius_min, b.radius_max);
  out_of("slenderness", g.slenderness(), b.slenderness_min, b.slenderness_max);
  out_of("draft", g.draft(), b.draft_min, b.draft_max);
  const std::size_t n = d.layout.size();
  if (n == 0) problems.push_back("layout has no devices");
  if (d.pto.size() != n) problems.push_back("PTO settings do not match the device count");
  for (std::size_t i = 0; i < d.pto.size(); ++i) {
    out_of("PTO stiffness", d.pto.stiffness[i], b.stiffness_min, b.stiffness_max);
    out_of("PTO damping", d.pto.damping[i], b.damping_min, b.damping_max);
  }
  if (n > 0) {
    if (!(d.layout[0] == Point{0.0, 0.0})) problems.push_back("device 0 is not at the origin");
    const double h = DesignBounds::farm_half_width(n);
    for (std::size_t i = 1; i < n; ++i)
      if (!inside_farm(d.layout[i], h)) {
        std::ostringstream s;
        s << "device " << i << " at (" << d.layout[i].x << ", " << d.layout[i].y
          << ") outside the farm box";
        problems.push_back(s.str());
      }
  }
  if (problems.empty()) return;
  std::string msg = "design out of bounds: ";
  for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
  fail(ErrorKind::validation, msg);
}

Evaluator::Evaluator(const CoefficientProvider& provider, SiteClimate site, FrequencyGrid grid,
                     Environment env, EfficiencyChain efficiency, DesignBounds bounds)
    : provider_(provider),
      site_(std::move(site)),
      grid_(std::move(grid)),
      env_(env),
      efficiency_(efficiency),
      bounds_(bounds),
      table_(site_.grid, grid_) {
  env_.validate();
  efficiency_.validate();
  bounds_.validate();
}

double Evaluator::isolated_power(const WecGeometry& geom, double stiffness,
                                 double damping) const {
  const Layout one({{0.0, 0.0}});
  const auto pto = PtoSettings::uniform(1, stiffness, damping);
  const auto farm = compose_farm(provider_, geom, one, grid_, env_);
  const auto pm = regular_wave_power(solve_motion(farm, geom, pto, env_), pto);
  return lifetime_average_power(table_.sea_state_power(pm.total), site_, efficiency_).lifetime;
}

EvaluationResult Evaluator::evaluate(const DesignPoint& d, bool with_q) const {
  check_design_bounds(d, bounds_);
  EvaluationResult r;
  r.provider = provider_.name();
  r.seed = seed;
  r.config_hash = config_hash;
  r.violations = min_distance_violations(d.layout, d.geometry, bounds_.clearance);
  const std::size_t n = d.layout.size();
  r.device_power.assign(n, 0.0);
  if (overlapping(d.layout, d.geometry)) {
    r.evaluated = false;
    return r;
  }
  const auto farm = compose_farm(provider_, d.geometry, d.layout, grid_, env_);
  const auto pm = regular_wave_power(solve_motion(farm, d.geometry, d.pto, env_), d.pto);
  const auto total = lifetime_average_power(table_.sea_state_power(pm.total), site_, efficiency_);
  r.p_a = total.lifetime;
  r.p_a_per_year = total.per_year;
  r.p_v = objective_pv(r.p_a, d.geometry, n);
  std::vector<double> curve(grid_.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < grid_.size(); ++k)
      curve[k] = pm.per_device[k](static_cast<Eigen::Index>(i));
    r.device_power[i] =
        lifetime_average_power(table_.sea_state_power(curve), site_, efficiency_).lifetime;
  }
  if (with_q) {
    std::vector<double> isolated(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool repeat = i > 0 && d.pto.stiffness[i] == d.pto.stiffness[i - 1] &&
                          d.pto.damping[i] == d.pto.damping[i - 1];
      isolated[i] = repeat ? isolated[i - 1]
                           : isolated_power(d.geometry, d.pto.stiffness[i], d.pto.damping[i]);
    }
    r.q_factor = q_factor(r.p_a, isolated);
  }
  return r;
}

double penalized_fitness(const EvaluationResult& result, double penalty) {
  double v2 = 0.0;
  for (const auto& v : result.violations) v2 += v.magnitude * v.magnitude;
  return -result.p_v + penalty * v2;
}

const char* study_name(Study s) {
  switch (s) {
    case Study::I: return "I";
    case Study::II: return "II";
    case Study::III: return "III";
  }
  return "?";
}

Study study_from_name(const std::string& name) {
  if (name == "I" || name == "1") return Study::I;
  if (name == "II" || name == "2") return Study::II;
  if (name == "III" || name == "3") return Study::III;
  fail(ErrorKind::config, "unknown study '" + name + "' (expected I, II or III)");
}

void GaConfig::validate() const {
  std::vector<std::string> p;
  if (population < 2 || population % 2 != 0) p.push_back("population must be even and >= 2");
  if (generations < 0) p.push_back("generations must be >= 0");
  if (!(crossover_probability >= 0 && crossover_probability <= 1))
    p.push_back("crossover probability must lie in [0, 1]");
  if (!(mutation_probability <= 1)) p.push_back("mutation probability must be <= 1");
  if (!(crossover_eta >= 0 && mutation_eta >= 0)) p.push_back("distribution indices must be >= 0");
  if (tournament < 1) p.push_back("tournament size must be >= 1");
  if (elitism < 0 || elitism >= population) p.push_back("elitism must lie in [0, population)");
  if (!(penalty >= 0)) p.push_back("penalty must be >= 0");
  if (p.empty()) return;
  std::string msg = "GA configuration: ";
  for (std::size_t i = 0; i < p.size(); ++i) msg += (i ? "; " : "") + p[i];
  fail(ErrorKind::config, msg);
}

std::size_t StudySpec::genome_length() const {
  const std::size_t layout = 2 * (devices - 1);
  switch (study) {
    case Study::I: return 2 + layout;
    case Study::II: return 4 + layout;
    case Study::III: return 2 + 2 * devices + layout;
  }
  return 0;
}

void StudySpec::validate() const {
  ga.validate();
  bounds.validate();
  require(devices >= 1, ErrorKind::config, "a study needs at least one device");
  if (study == Study::I) {
    require(fixed_control.has_value(), ErrorKind::config,
            "Study I needs a fixed control (K_pto, B_pto)");
    const auto [k, b] = *fixed_control;
    require(k >= PtoSettings::kMinStiffness && k <= PtoSettings::kMaxStiffness &&
                b >= PtoSettings::kMinDamping && b <= PtoSettings::kMaxDamping,
            ErrorKind::config, "Study I fixed control outside the PTO bounds");
  } else {
    require(!fixed_control.has_value(), ErrorKind::config,
            std::string("Study ") + study_name(study) + " optimises the control; remove fixed_control");
  }
  require(polish_evaluations >= 0, ErrorKind::config, "polish budget must be >= 0");
  for (const auto& d : inject)
    require(d.layout.size() == devices, ErrorKind::config,
            "injected design has a different device count");
}

GenomeCodec::GenomeCodec(StudySpec s) : spec(std::move(s)) {}

Eigen::VectorXd GenomeCodec::lower() const {
  const auto& b = spec.bounds;
  const std::size_t n = spec.devices;
  Eigen::VectorXd lo(static_cast<Eigen::Index>(size()));
  Eigen::Index i = 0;
  lo(i++) = b.radius_min;
  lo(i++) = b.slenderness_min;
  const std::size_t controls = spec.study == Study::I ? 0 : spec.study == Study::II ? 1 : n;
  for (std::size_t c = 0; c < controls; ++c) lo(i++) = b.stiffness_min;
  for (std::size_t c = 0; c < controls; ++c) lo(i++) = b.damping_min;
  const double h = DesignBounds::farm_half_width(n);
  for (std::size_t d = 1; d < n; ++d) {
    lo(i++) = 0.0;
    lo(i++) = -h;
  }
  return lo;
}

Eigen::VectorXd GenomeCodec::upper() const {
  const auto& b = spec.bounds;
  const std::size_t n = spec.devices;
  Eigen::VectorXd hi(static_cast<Eigen::Index>(size()));
  Eigen::Index i = 0;
  hi(i++) = b.radius_max;
  hi(i++) = b.slenderness_max;
  const std::size_t controls = spec.study == Study::I ? 0 : spec.study == Study::II ? 1 : n;
  for (std::size_t c = 0; c < controls; ++c) hi(i++) = b.stiffness_max;
  for (std::size_t c = 0; c < controls; ++c) hi(i++) = b.damping_max;
  const double h = DesignBounds::farm_half_width(n);
  for (std::size_t d = 1; d < n; ++d) {
    hi(i++) = h;
    hi(i++) = h;
  }
  return hi;
}

DesignPoint GenomeCodec::decode(const Eigen::VectorXd& g, const std::string& site_id) const {
  require(static_cast<std::size_t>(g.size()) == size(), ErrorKind::dimension,
          "genome length does not match the study");
  const std::size_t n = spec.devices;
  const Eigen::VectorXd lo = lower(), hi = upper();
  const Eigen::VectorXd x = g.cwiseMax(lo).cwiseMin(hi);
  const double r = x(0);
  const auto [ar_lo, ar_hi] = spec.bounds.slenderness_range(r);
  const double ar = std::clamp(x(1), ar_lo, ar_hi);
  DesignPoint d{WecGeometry(r, ar), {}, {}, site_id};
  Eigen::Index i = 2;
  switch (spec.study) {
    case Study::I:
      d.pto = PtoSettings::uniform(n, spec.fixed_control->first, spec.fixed_control->second);
      break;
    case Study::II:
      d.pto = PtoSettings::uniform(n, x(2), x(3));
      i = 4;
      break;
    case Study::III: {
      std::vector<double> k(n), b(n);
      for (std::size_t c = 0; c < n; ++c) k[c] = x(i + static_cast<Eigen::Index>(c));
      for (std::size_t c = 0; c < n; ++c) b[c] = x(i + static_cast<Eigen::Index>(n + c));
      d.pto = PtoSettings::per_device(std::move(k), std::move(b));
      i += static_cast<Eigen::Index>(2 * n);
      break;
    }
  }
  std::vector<Point> pts{{0.0, 0.0}};
  for (std::size_t dev = 1; dev < n; ++dev, i += 2) pts.push_back({x(i), x(i + 1)});
  d.layout = Layout(std::move(pts));
  return d;
}

Eigen::VectorXd GenomeCodec::encode(const DesignPoint& d) const {
  const std::size_t n = spec.devices;
  require(d.layout.size() == n && d.pto.size() == n, ErrorKind::dimension,
          "design does not match the study device count");
  Eigen::VectorXd g(static_cast<Eigen::Index>(size()));
  Eigen::Index i = 0;
  g(i++) = d.geometry.radius();
  g(i++) = d.geometry.slenderness();
  if (spec.study == Study::II) {
    g(i++) = d.pto.stiffness[0];
    g(i++) = d.pto.damping[0];
  } else if (spec.study == Study::III) {
    for (std::size_t c = 0; c < n; ++c) g(i++) = d.pto.stiffness[c];
    for (std::size_t c = 0; c < n; ++c) g(i++) = d.pto.damping[c];
  }
  for (std::size_t dev = 1; dev < n; ++dev) {
    g(i++) = d.layout[dev].x - d.layout[0].x;
    g(i++) = d.layout[dev].y - d.layout[0].y;
  }
  return g;
}

namespace {

struct Individual {
  Eigen::VectorXd genome;
  double fitness = 0.0;
  EvaluationResult result;
};

// Bounded simulated binary crossover, one gene.
void sbx_gene(double& a, double& b, double lo, double hi, double eta, Rng& rng) {
  if (std::fabs(a - b) <= 1e-14 || hi <= lo) return;
  const double y1 = std::min(a, b), y2 = std::max(a, b);
  const double u = rng.uniform();
  auto spread = [&](double beta) {
    const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
    return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                            : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
  };
  const double bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
  const double bq2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
  double c1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), lo, hi);
  double c2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), lo, hi);
  if (rng.uniform() < 0.5) std::swap(c1, c2);
  a = c1;
  b = c2;
}

// Bounded polynomial mutation, one gene.
double mutate_gene(double y, double lo, double hi, double eta, Rng& rng) {
  if (hi <= lo) return y;
  const double d1 = (y - lo) / (hi - lo), d2 = (hi - y) / (hi - lo);
  const double r = rng.uniform();
  const double p = 1.0 / (eta + 1.0);
  double dq;
  if (r < 0.5) {
    const double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
    dq = std::pow(v, p) - 1.0;
  } else {
    const double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
    dq = 1.0 - std::pow(v, p);
  }
  return std::clamp(y + dq * (hi - lo), lo, hi);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

GaResult run_ga(const StudySpec& spec, const Evaluator& evaluator, unsigned threads,
                const GaProgress& progress) {
  spec.validate();
  const GenomeCodec codec(spec);
  const auto& ga = spec.ga;
  const Eigen::VectorXd lo = codec.lower(), hi = codec.upper();
  const auto dim = static_cast<Eigen::Index>(codec.size());
  const double pm = ga.mutation_probability < 0 ? 1.0 / static_cast<double>(dim)
                                                : ga.mutation_probability;
  const std::string site = evaluator.site().site_id;
  GaResult out;

  auto evaluate_all = [&](std::vector<Individual>& pop, std::size_t from) {
    parallel_for(pop.size() - from, threads, [&](std::size_t j) {
      Individual& ind = pop[from + j];
      try {
        ind.result = evaluator.evaluate(codec.decode(ind.genome, site));
      } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " (genome " + genome_text(ind.genome) + ")");
      }
      ind.fitness = penalized_fitness(ind.result, ga.penalty);
    });
    out.evaluations += pop.size() - from;
  };
  auto consider = [&](const Individual& ind) {
    if (!ind.result.feasible() || !ind.result.evaluated) return;
    if (!out.found_feasible || ind.fitness < out.best_fitness) {
      out.found_feasible = true;
      out.best_fitness = ind.fitness;
      out.best_genome = ind.genome;
      out.best_result = ind.result;
    }
  };
  auto best_index = [](const std::vector<Individual>& pop) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
      if (pop[i].fitness < pop[b].fitness) b = i;
    return b;
  };
  auto record = [&](int gen, const std::vector<Individual>& pop) {
    GenerationRecord rec;
    rec.generation = gen;
    std::vector<double> f;
    std::size_t feasible = 0;
    for (const auto& ind : pop) {
      f.push_back(ind.fitness);
      feasible += ind.result.feasible() ? 1 : 0;
    }
    const std::size_t b = best_index(pop);
    rec.best_fitness = pop[b].fitness;
    rec.best_pv = pop[b].result.p_v;
    rec.best_feasible = pop[b].result.feasible();
    rec.median_fitness = median_of(f);
    rec.feasible_rate = static_cast<double>(feasible) / static_cast<double>(pop.size());
    out.history.push_back(rec);
    if (progress) progress(rec);
  };

  // initial population: injected designs first, the rest uniform in the box
  std::vector<Individual> pop(static_cast<std::size_t>(ga.population));
  Rng init(derive_seed(ga.seed, kStreamInit));
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (i < spec.inject.size()) {
      pop[i].genome = codec.encode(spec.inject[i]).cwiseMax(lo).cwiseMin(hi);
      continue;
    }
    pop[i].genome.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j) pop[i].genome(j) = init.uniform(lo(j), hi(j));
  }
  evaluate_all(pop, 0);
  for (const auto& ind : pop) consider(ind);
  record(0, pop);

  Rng rng(derive_seed(ga.seed, kStreamOperators));
  auto tournament = [&](const std::vector<Individual>& p) {
    std::size_t w = rng.index(p.size());
    for (int t = 1; t < ga.tournament; ++t) {
      const std::size_t c = rng.index(p.size());
      if (p[c].fitness < p[w].fitness || (p[c].fitness == p[w].fitness && c < w)) w = c;
    }
    return w;
  };
  for (int gen = 1; gen <= ga.generations; ++gen) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    std::vector<Individual> next;
    next.reserve(pop.size());
    for (int e = 0; e < ga.elitism; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
    const std::size_t elites = next.size();
    while (next.size() < pop.size()) {
      Individual a, b;
      a.genome = pop[tournament(pop)].genome;
      b.genome = pop[tournament(pop)].genome;
      if (rng.uniform() < ga.crossover_probability) {
        for (Eigen::Index j = 0; j < dim; ++j)
          if (rng.uniform() < 0.5) sbx_gene(a.genome(j), b.genome(j), lo(j), hi(j), ga.crossover_eta, rng);
      }
      for (Individual* c : {&a, &b})
        for (Eigen::Index j = 0; j < dim; ++j)
          if (rng.uniform() < pm) c->genome(j) = mutate_gene(c->genome(j), lo(j), hi(j), ga.mutation_eta, rng);
      next.push_back(std::move(a));
      if (next.size() < pop.size()) next.push_back(std::move(b));
    }
    pop = std::move(next);
    evaluate_all(pop, elites);
    for (std::size_t i = elites; i < pop.size(); ++i) consider(pop[i]);
    record(gen, pop);
  }

  if (!out.found_feasible) {
    const std::size_t b = best_index(pop);
    out.best_fitness = pop[b].fitness;
    out.best_genome = pop[b].genome;
    out.best_result = pop[b].result;
  }

  if (spec.polish && out.found_feasible) {
    // coordinate descent on the best feasible genome
    const double start = out.best_result.p_v;
    Eigen::VectorXd step = 0.05 * (hi - lo);
    int budget = spec.polish_evaluations;
    while (budget > 0 && step.maxCoeff() > 1e-6 * (hi - lo).maxCoeff()) {
      bool improved = false;
      for (Eigen::Index j = 0; j < dim && budget > 0; ++j) {
        for (double sgn : {1.0, -1.0}) {
          if (budget <= 0) break;
          Individual c;
          c.genome = out.best_genome;
          c.genome(j) = std::clamp(c.genome(j) + sgn * step(j), lo(j), hi(j));
          if (c.genome(j) == out.best_genome(j)) continue;
          c.result = evaluator.evaluate(codec.decode(c.genome, site));
          c.fitness = penalized_fitness(c.result, ga.penalty);
          --budget;
          ++out.evaluations;
          if (c.result.feasible() && c.result.evaluated && c.fitness < out.best_fitness) {
            out.best_fitness = c.fitness;
            out.best_genome = c.genome;
            out.best_result = c.result;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    out.polish_gain = out.best_result.p_v - start;
  }

  out.best = codec.decode(out.best_genome, site);
  out.best_result = evaluator.evaluate(out.best, true);

  if (spec.study != Study::I) {
    const auto& b = spec.bounds;
    const auto& pto = out.best.pto;
    const std::size_t controls = spec.study == Study::II ? 1 : spec.devices;
    for (std::size_t c = 0; c < controls; ++c) {
      const std::string tag = spec.study == Study::II ? "" : "[" + std::to_string(c) + "]";
      if (pto.stiffness[c] <= b.stiffness_min) out.active_bounds.push_back("K_pto" + tag + " at lower bound");
      if (pto.stiffness[c] >= b.stiffness_max) out.active_bounds.push_back("K_pto" + tag + " at upper bound");
      if (pto.damping[c] <= b.damping_min) out.active_bounds.push_back("B_pto" + tag + " at lower bound");
      if (pto.damping[c] >= b.damping_max) out.active_bounds.push_back("B_pto" + tag + " at upper bound");
    }
  }
  return out;
}

Layout random_layout(const DesignBounds& bounds, std::size_t devices, const WecGeometry& geom,
                     Rng& rng, int max_attempts) {
  require(devices >= 1, ErrorKind::validation, "layout needs at least one device");
  const double h = DesignBounds::farm_half_width(devices);
  const double min_l = 2.0 * geom.radius() + bounds.clearance;
  std::vector<Point> pts{{0.0, 0.0}};
  int attempts = 0;
  while (pts.size() < devices) {
    require(++attempts <= max_attempts, ErrorKind::numerical,
            "could not place a feasible random layout; the farm box is too tight");
    const Point c{rng.uniform(0.0, h), rng.uniform(-h, h)};
    const bool ok = std::all_of(pts.begin(), pts.end(), [&](const Point& p) {
      return std::hypot(c.x - p.x, c.y - p.y) >= min_l;
    });
    if (ok) pts.push_back(c);
  }
  return Layout(std::move(pts));
}

DesignPoint random_design(const DesignBounds& b, std::size_t devices, Rng& rng,
                          const std::string& site_id) {
  const double r = rng.uniform(b.radius_min, b.radius_max);
  const auto [ar_lo, ar_hi] = b.slenderness_range(r);
  const WecGeometry geom(r, rng.uniform(ar_lo, ar_hi));
  const double k = rng.uniform(b.stiffness_min, b.stiffness_max);
  const double damping = rng.uniform(b.damping_min, b.damping_max);
  return {geom, PtoSettings::uniform(devices, k, damping), random_layout(b, devices, geom, rng),
          site_id};
}

double percentile(std::vector<double> v, double q) {
  require(!v.empty(), ErrorKind::validation, "percentile of an empty sample");
  require(q >= 0 && q <= 100, ErrorKind::validation, "percentile must lie in [0, 100]");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

namespace {

Percentiles summarize(const std::vector<double>& v) {
  if (v.empty()) return {};
  return {percentile(v, 50), percentile(v, 95), percentile(v, 99), *std::max_element(v.begin(), v.end())};
}

}  // namespace

BenchmarkReport power_error_benchmark(std::size_t n, std::size_t devices,
                                      const Evaluator& reference, const Evaluator& surrogate,
                                      std::uint64_t seed, unsigned threads) {
  require(n >= 1, ErrorKind::validation, "benchmark needs at least one sample");
  require(reference.grid() == surrogate.grid() && reference.env() == surrogate.env(),
          ErrorKind::config, "benchmark evaluators must share grid and environment");
  std::vector<std::optional<BenchmarkSample>> slots(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, kStreamBenchmark, i));
    const DesignPoint d = random_design(reference.bounds(), devices, rng, reference.site().site_id);
    try {
      const double pr = reference.evaluate(d).p_v;
      const double ps = surrogate.evaluate(d).p_v;
      slots[i] = BenchmarkSample{pr, ps, pr != 0.0 ? std::fabs(ps - pr) / std::fabs(pr) : 0.0};
    } catch (const Error&) {
      slots[i].reset();
    }
  });
  BenchmarkReport rep;
  std::vector<double> rel, abs;
  for (const auto& s : slots) {
    if (!s) {
      ++rep.skipped;
      continue;
    }
    rep.samples.push_back(*s);
    rel.push_back(s->relative_error);
    abs.push_back(std::fabs(s->surrogate_pv - s->reference_pv));
  }
  rep.relative = summarize(rel);
  rep.absolute = summarize(abs);
  return rep;
}

RandomLayoutReport random_layout_analysis(const DesignPoint& design, std::size_t n,
                                          const Evaluator& evaluator, std::uint64_t seed,
                                          unsigned threads) {
  require(n >= 1, ErrorKind::validation, "need at least one random layout");
  RandomLayoutReport rep;
  rep.design_pv = evaluator.evaluate(design).p_v;
  rep.layout_pv.assign(n, 0.0);
  const std::size_t devices = design.layout.size();
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, kStreamLayouts, i));
    DesignPoint d = design;
    d.layout = random_layout(evaluator.bounds(), devices, design.geometry, rng);
    rep.layout_pv[i] = evaluator.evaluate(d).p_v;
  });
  const auto below = std::count_if(rep.layout_pv.begin(), rep.layout_pv.end(),
                                   [&](double v) { return v < rep.design_pv; });
  rep.percentile = 100.0 * static_cast<double>(below) / static_cast<double>(n);
  return rep;
}

SensitivityMap sensitivity_map(const DesignPoint& design, std::size_t wec_index, int resolution,
                               double window, const Evaluator& evaluator, unsigned threads) {
  const std::size_t n = design.layout.size();
  require(wec_index != 0, ErrorKind::validation,
          "device 0 is pinned at the origin and cannot be perturbed");
  require(wec_index < n, ErrorKind::validation, "device index out of range");
  require(resolution >= 10, ErrorKind::validation, "sensitivity grid needs at least 10x10 cells");
  require(window > 0, ErrorKind::validation, "sensitivity window must be positive");
  SensitivityMap m;
  m.wec_index = wec_index;
  const Point c = design.layout[wec_index];
  for (int i = 0; i < resolution; ++i) {
    const double t = -1.0 + 2.0 * i / (resolution - 1);
    m.xs.push_back(c.x + window * t);
    m.ys.push_back(c.y + window * t);
  }
  m.design_pv = evaluator.evaluate(design).p_v;
  m.pv.resize(resolution, resolution);
  const double h = DesignBounds::farm_half_width(n);
  const auto cells = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  parallel_for(cells, threads, [&](std::size_t k) {
    const auto row = static_cast<Eigen::Index>(k / static_cast<std::size_t>(resolution));
    const auto col = static_cast<Eigen::Index>(k % static_cast<std::size_t>(resolution));
    const Point p{m.xs[static_cast<std::size_t>(col)], m.ys[static_cast<std::size_t>(row)]};
    std::vector<Point> pts = design.layout.positions();
    pts[wec_index] = p;
    const Layout layout(std::move(pts));
    double v = std::numeric_limits<double>::quiet_NaN();
    if (inside_farm(p, h) &&
        min_distance_violations(layout, design.geometry, evaluator.bounds().clearance).empty()) {
      DesignPoint d = design;
      d.layout = layout;
      v = evaluator.evaluate(d).p_v;
    }
    m.pv(row, col) = v;
  });
  m.best_pv = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < m.pv.rows(); ++r)
    for (Eigen::Index col = 0; col < m.pv.cols(); ++col)
      if (!std::isnan(m.pv(r, col)) && m.pv(r, col) > m.best_pv) {
        m.best_pv = m.pv(r, col);
        m.best_position = {m.xs[static_cast<std::size_t>(col)], m.ys[static_cast<std::size_t>(r)]};
      }
  if (std::isfinite(m.best_pv)) {
    m.offset = std::hypot(m.best_position.x - c.x, m.best_position.y - c.y);
    m.gap = (m.best_pv - m.design_pv) / m.best_pv;
  }
  return m;
}

}  // namespace wecfarm
