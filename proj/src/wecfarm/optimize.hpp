#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wecfarm/climate.hpp"
#include "wecfarm/dynamics.hpp"
#include "wecfarm/hydro.hpp"
#include "wecfarm/mbe.hpp"
#include "wecfarm/rng.hpp"

namespace wecfarm {

// Box bounds of the design problem. The farm box is x in [0, half_width],
// y in [-half_width, half_width] with half_width = 0.5 sqrt(20000 N).
struct DesignBounds {
  double radius_min = WecGeometry::kMinRadius;
  double radius_max = WecGeometry::kMaxRadius;
  double slenderness_min = WecGeometry::kMinSlenderness;
  double slenderness_max = WecGeometry::kMaxSlenderness;
  double draft_min = WecGeometry::kMinDraft;
  double draft_max = WecGeometry::kMaxDraft;
  double stiffness_min = PtoSettings::kMinStiffness;
  double stiffness_max = PtoSettings::kMaxStiffness;
  double damping_min = PtoSettings::kMinDamping;
  double damping_max = PtoSettings::kMaxDamping;
  double clearance = 10.0;  // s_d

  static double farm_half_width(std::size_t devices);
  // Slenderness range that keeps the draft inside its bounds for radius r.
  std::pair<double, double> slenderness_range(double r) const;
  void validate() const;
};

struct DesignPoint {
  WecGeometry geometry{1.0, 1.0};
  PtoSettings pto;
  Layout layout;
  std::string site_id;
};

struct Violation {
  std::size_t p = 0;
  std::size_t q = 0;
  double magnitude = 0.0;  // m
};

// max(0, 2R + s_d - l_pq) for every pair with a positive value; empty means
// the layout satisfies the spacing constraint.
std::vector<Violation> min_distance_violations(const Layout& layout, const WecGeometry& geom,
                                               double clearance = 10.0);

// Throws a validation error naming every box bound the design breaks. The
// spacing constraint is not checked here; it is penalised instead.
void check_design_bounds(const DesignPoint& design, const DesignBounds& bounds);

struct EvaluationResult {
  double p_a = 0.0;           // lifetime sum, W
  double p_a_per_year = 0.0;  // W
  double p_v = 0.0;           // W/m^3
  std::vector<double> device_power;  // lifetime sum per device, W
  std::optional<double> q_factor;
  std::vector<Violation> violations;
  bool evaluated = true;  // false when bodies overlap and no physics was run
  std::string provider;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  bool feasible() const { return violations.empty(); }
};

// Everything an evaluation needs besides the design. Holds the spectrum table
// so the per-call cost is the farm solve only.
class Evaluator {
 public:
  Evaluator(const CoefficientProvider& provider, SiteClimate site, FrequencyGrid grid,
            Environment env = {}, EfficiencyChain efficiency = {}, DesignBounds bounds = {});

  // Pure in (design, grid, env, provider). Overlapping bodies (l <= 2R)
  // return evaluated = false with zero power and the violations filled in.
  EvaluationResult evaluate(const DesignPoint& design, bool with_q = false) const;

  // Lifetime power of one isolated device with the given PTO.
  double isolated_power(const WecGeometry& geom, double stiffness, double damping) const;

  const CoefficientProvider& provider() const { return provider_; }
  const SiteClimate& site() const { return site_; }
  const FrequencyGrid& grid() const { return grid_; }
  const Environment& env() const { return env_; }
  const DesignBounds& bounds() const { return bounds_; }

  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

 private:
  const CoefficientProvider& provider_;
  SiteClimate site_;
  FrequencyGrid grid_;
  Environment env_;
  EfficiencyChain efficiency_;
  DesignBounds bounds_;
  SpectrumTable table_;
};

// -p_v + penalty * sum(violation^2)
double penalized_fitness(const EvaluationResult& result, double penalty);

enum class Study { I, II, III };
const char* study_name(Study s);
Study study_from_name(const std::string& name);

struct GaConfig {
  int population = 40;
  int generations = 60;
  double crossover_probability = 0.9;
  double crossover_eta = 15.0;
  double mutation_probability = -1.0;  // negative means 1 / genome length
  double mutation_eta = 20.0;
  int tournament = 2;
  int elitism = 1;
  double penalty = 1e6;
  std::uint64_t seed = 42;

  void validate() const;
};

struct StudySpec {
  Study study = Study::I;
  std::size_t devices = 5;
  // Study I only: (K_pto, B_pto) shared by every device.
  std::optional<std::pair<double, double>> fixed_control;
  GaConfig ga;
  DesignBounds bounds;
  // Designs placed at the front of the initial population.
  std::vector<DesignPoint> inject;
  // Coordinate-descent refinement of the GA best; off by default.
  bool polish = false;
  int polish_evaluations = 400;

  std::size_t genome_length() const;
  void validate() const;
};

// Genome layout: R, R/D, control genes, then (x, y) of devices 2..N. Control
// genes are empty (Study I), K and B (Study II) or K_1..K_N, B_1..B_N (III).
struct GenomeCodec {
  StudySpec spec;

  explicit GenomeCodec(StudySpec spec);
  std::size_t size() const { return spec.genome_length(); }
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  // Out-of-range slenderness is pulled back to the draft limits (repair).
  DesignPoint decode(const Eigen::VectorXd& genome, const std::string& site_id) const;
  Eigen::VectorXd encode(const DesignPoint& design) const;
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double median_fitness = 0.0;
  double feasible_rate = 0.0;
  double best_pv = 0.0;  // of the best-fitness individual
  bool best_feasible = false;
};

struct GaResult {
  DesignPoint best;
  EvaluationResult best_result;
  double best_fitness = 0.0;
  Eigen::VectorXd best_genome;
  bool found_feasible = false;
  std::vector<GenerationRecord> history;
  std::vector<std::string> active_bounds;  // control genes sitting on a bound
  std::size_t evaluations = 0;
  std::optional<double> polish_gain;  // p_v gained by the polish step
};

using GaProgress = std::function<void(const GenerationRecord&)>;

GaResult run_ga(const StudySpec& spec, const Evaluator& evaluator, unsigned threads = 1,
                const GaProgress& progress = {});

// Uniform random design inside the boxes with a feasible layout.
DesignPoint random_design(const DesignBounds& bounds, std::size_t devices, Rng& rng,
                          const std::string& site_id = "");
// Rejection-sampled feasible layout with device 0 at the origin.
Layout random_layout(const DesignBounds& bounds, std::size_t devices, const WecGeometry& geom,
                     Rng& rng, int max_attempts = 100000);

struct Percentiles {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};
// Linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

struct BenchmarkSample {
  double reference_pv = 0.0;
  double surrogate_pv = 0.0;
  double relative_error = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkSample> samples;
  Percentiles relative;
  Percentiles absolute;  // W/m^3
  std::size_t skipped = 0;  // provider failures
};

BenchmarkReport power_error_benchmark(std::size_t n, std::size_t devices,
                                      const Evaluator& reference, const Evaluator& surrogate,
                                      std::uint64_t seed, unsigned threads = 1);

struct RandomLayoutReport {
  double design_pv = 0.0;
  std::vector<double> layout_pv;
  double percentile = 0.0;  // share of random layouts below the design, in %
};

RandomLayoutReport random_layout_analysis(const DesignPoint& design, std::size_t n,
                                          const Evaluator& evaluator, std::uint64_t seed,
                                          unsigned threads = 1);

struct SensitivityMap {
  std::size_t wec_index = 0;
  std::vector<double> xs, ys;
  Eigen::MatrixXd pv;  // rows follow ys, columns xs; NaN where masked
  double design_pv = 0.0;
  double best_pv = 0.0;
  Point best_position;
  double offset = 0.0;  // distance from the design position to the argmax
  double gap = 0.0;     // (best - design) / best
};

// Moves device wec_index over a resolution x resolution grid of half-width
// `window` centred on its design position; cells outside the farm box or
// breaking the spacing constraint are masked.
SensitivityMap sensitivity_map(const DesignPoint& design, std::size_t wec_index, int resolution,
                               double window, const Evaluator& evaluator, unsigned threads = 1);

}  // namespace wecfarm
