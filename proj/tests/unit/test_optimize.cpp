#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "unit/oracles.hpp"
#include "wecfarm/error.hpp"
#include "wecfarm/optimize.hpp"

using namespace wecfarm;

namespace {

const double kPi = std::numbers::pi;

SiteClimate point_mass(std::size_t i, std::size_t j, int n_gq = 4) {
  SiteClimate site;
  site.site_id = "point";
  site.grid = SeaStateGrid::gauss({}, n_gq);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_gq, n_gq);
  p(i, j) = 1.0;
  site.probability = {p};
  return site;
}

SiteClimate small_site() {
  ClimateOptions opt;
  opt.n_gq = 8;
  opt.years = 3;
  return build_site_climate(synthetic_records("west_coast", 600, 5), opt, "wc");
}

DesignPoint design(double r, double ar, std::vector<Point> pts, double k = -5e3,
                   double b = 5e4) {
  const std::size_t n = pts.size();
  return {WecGeometry(r, ar), PtoSettings::uniform(n, k, b), Layout(std::move(pts)), "t"};
}

const ReferenceProvider& reference() {
  static const ReferenceProvider p;
  return p;
}

const Evaluator& evaluator() {
  static const Evaluator e(reference(), small_site(), FrequencyGrid::uniform(0.3, 2.0, 60));
  return e;
}

}  // namespace

TEST_CASE("spacing constraint") {
  const WecGeometry geom(3, 1);
  CHECK(min_distance_violations(Layout({{0, 0}, {20, 0}}), geom).empty());
  const auto v = min_distance_violations(Layout({{0, 0}, {15, 0}}), geom);
  REQUIRE(v.size() == 1);
  CHECK(v[0].p == 0);
  CHECK(v[0].q == 1);
  CHECK(v[0].magnitude == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(min_distance_violations(Layout({{0, 0}, {0, 12}, {10, 0}}), geom).size() == 3);
}

TEST_CASE("design bounds") {
  const DesignBounds b;
  CHECK(DesignBounds::farm_half_width(5) == doctest::Approx(0.5 * std::sqrt(100000.0)));
  const auto [lo, hi] = b.slenderness_range(4.0);
  CHECK(lo == doctest::Approx(0.2));
  CHECK(hi == doctest::Approx(8.0));
  CHECK_NOTHROW(check_design_bounds(design(3, 1, {{0, 0}, {30, 10}}), b));
  auto off = design(3, 1, {{1, 0}, {30, 10}});
  CHECK_THROWS_AS(check_design_bounds(off, b), Error);
  try {
    check_design_bounds(design(3, 1, {{0, 0}, {-5, 10}, {30, 500}}), b);
    FAIL("expected bounds error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    const std::string what = e.what();
    CHECK(what.find("device 1") != std::string::npos);
    CHECK(what.find("device 2") != std::string::npos);
  }
  DesignPoint pto_mismatch = design(3, 1, {{0, 0}, {30, 10}});
  pto_mismatch.pto = PtoSettings::uniform(3, 0, 1e4);
  CHECK_THROWS_AS(check_design_bounds(pto_mismatch, b), Error);
}

TEST_CASE("single device against a scripted pipeline") {
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 60);
  const Environment env;
  const SiteClimate site = point_mass(2, 1);
  const Evaluator ev(reference(), site, grid, env);
  const double r = 2.5, ar = 1.25, k_pto = -2e4, b_pto = 8e4;
  const DesignPoint d = design(r, ar, {{0, 0}}, k_pto, b_pto);
  const auto res = ev.evaluate(d, true);

  const double draft = r / ar;
  const double rho = env.water_density, g = env.gravity;
  const double mass = rho * kPi * r * r * draft;
  const double stiff = rho * g * kPi * r * r;
  const double hs = site.grid.hs_nodes[2], tp = site.grid.tp_nodes[1];
  double p_i = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid[i];
    const auto c = oracle::single(r, draft, w);
    const std::complex<double> z(-w * w * (mass + c.added_mass) + stiff + k_pto,
                                 w * (c.damping + b_pto));
    const double pm = 0.5 * w * w * b_pto * std::norm(c.force / z);
    p_i += 2 * grid.spacing()[i] * jonswap_density(w, hs, tp) * pm;
  }
  const double p_a = 0.8 * 0.95 * 0.98 * p_i;
  CHECK(oracle::rel(res.p_a, p_a) < 1e-10);
  CHECK(oracle::rel(res.p_v, p_a / (kPi * r * r * draft)) < 1e-10);
  CHECK(oracle::rel(res.device_power[0], res.p_a) < 1e-14);
  REQUIRE(res.q_factor.has_value());
  CHECK(*res.q_factor == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(res.provider == "reference");
}

TEST_CASE("evaluation symmetries and purity") {
  const Evaluator& ev = evaluator();
  const DesignPoint d = design(2, 1, {{0, 0}, {30, 12}, {15, -28}, {55, 25}, {60, -15}});
  const auto a = ev.evaluate(d, true);
  const auto again = ev.evaluate(d, true);
  CHECK(a.p_v == again.p_v);
  CHECK(a.device_power == again.device_power);
  CHECK(*a.q_factor == *again.q_factor);

  DesignPoint mirrored = d;
  mirrored.layout = d.layout.reflected();
  const auto m = ev.evaluate(mirrored, true);
  CHECK(oracle::rel(m.p_v, a.p_v) < 1e-12);
  CHECK(oracle::rel(*m.q_factor, *a.q_factor) < 1e-12);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(oracle::rel(m.device_power[i], a.device_power[i]) < 1e-12);

  double sum = 0;
  for (double p : a.device_power) sum += p;
  CHECK(oracle::rel(sum, a.p_a) < 1e-12);
  CHECK(a.feasible());
  CHECK(a.p_a_per_year == doctest::Approx(a.p_a / 3));
}

TEST_CASE("penalized fitness") {
  const Evaluator& ev = evaluator();
  const auto ok = ev.evaluate(design(3, 1, {{0, 0}, {30, 0}}));
  CHECK(penalized_fitness(ok, 1e6) == -ok.p_v);
  EvaluationResult bad = ok;
  bad.violations = {{0, 1, 1.0}};
  CHECK(penalized_fitness(bad, 1e6) > penalized_fitness(ok, 1e6));
  CHECK(penalized_fitness(bad, 1e6) == -ok.p_v + 1e6);

  // overlapping bodies are penalised without running the physics
  const auto overlap = ev.evaluate(design(3, 1, {{0, 0}, {5, 0}}));
  CHECK_FALSE(overlap.evaluated);
  CHECK(overlap.p_v == 0);
  CHECK(overlap.violations.size() == 1);
  CHECK(penalized_fitness(overlap, 1e6) == doctest::Approx(1e6 * 11 * 11));
}

TEST_CASE("genome codec") {
  StudySpec s;
  s.fixed_control = {{-5e3, 5e5}};
  CHECK(s.genome_length() == 10);
  s.study = Study::II;
  CHECK(s.genome_length() == 12);
  s.study = Study::III;
  CHECK(s.genome_length() == 20);

  s.study = Study::II;
  s.fixed_control.reset();
  const GenomeCodec codec(s);
  const DesignPoint d = design(3, 1.5, {{0, 0}, {30, 12}, {15, -28}, {55, 25}, {60, -15}}, -1e4, 2e5);
  const Eigen::VectorXd g = codec.encode(d);
  const DesignPoint back = codec.decode(g, "x");
  CHECK(back.geometry == d.geometry);
  CHECK(back.pto.stiffness == d.pto.stiffness);
  CHECK(back.layout.positions() == d.layout.positions());
  CHECK((codec.lower().array() <= g.array()).all());
  CHECK((g.array() <= codec.upper().array()).all());

  // slenderness repaired to the draft limits
  Eigen::VectorXd deep = g;
  deep(0) = 10.0;
  deep(1) = 0.2;  // draft 50
  CHECK(codec.decode(deep, "x").geometry.draft() == doctest::Approx(20.0));
  deep(0) = 0.5;
  deep(1) = 10.0;  // draft 0.05
  CHECK(codec.decode(deep, "x").geometry.draft() == doctest::Approx(0.5));

  StudySpec s3 = s;
  s3.study = Study::III;
  const GenomeCodec c3(s3);
  const Eigen::VectorXd g3 = c3.encode(d);
  CHECK(g3.segment(2, 5).isConstant(-1e4));
  CHECK(g3.segment(7, 5).isConstant(2e5));
  CHECK(c3.decode(g3, "x").pto.mode == PtoSettings::Mode::per_device);
}

TEST_CASE("study configuration") {
  StudySpec s;
  CHECK_THROWS_AS(s.validate(), Error);  // Study I without control
  s.fixed_control = {{-5e3, 5e5}};
  CHECK_NOTHROW(s.validate());
  s.study = Study::III;
  CHECK_THROWS_AS(s.validate(), Error);  // Study I control on Study III
  s.fixed_control.reset();
  s.ga.population = 41;
  try {
    s.ga.crossover_probability = 2;
    s.validate();
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("even") != std::string::npos);
    CHECK(std::string(e.what()).find("crossover") != std::string::npos);
  }
  CHECK(study_from_name("II") == Study::II);
  CHECK_THROWS_AS(study_from_name("IV"), Error);
}

TEST_CASE("genetic algorithm") {
  const Evaluator& ev = evaluator();
  StudySpec s1;
  s1.fixed_control = {{-5e3, 5e5}};
  s1.ga.generations = 25;
  const GaResult r1 = run_ga(s1, ev);

  SUBCASE("elitism and feasibility") {
    REQUIRE(r1.history.size() == 26);
    for (std::size_t g = 1; g < r1.history.size(); ++g)
      CHECK(r1.history[g].best_fitness <= r1.history[g - 1].best_fitness);
    CHECK(r1.found_feasible);
    CHECK(r1.best_result.feasible());
    CHECK(min_distance_violations(r1.best.layout, r1.best.geometry).empty());
    CHECK_NOTHROW(check_design_bounds(r1.best, DesignBounds{}));
    CHECK(r1.best_result.p_v == doctest::Approx(-r1.best_fitness).epsilon(1e-12));
    CHECK(r1.best_result.q_factor.has_value());
    CHECK(r1.evaluations == 40 + 25 * 39);
  }

  SUBCASE("determinism across thread counts") {
    const GaResult again = run_ga(s1, ev, 3);
    CHECK(again.best_genome == r1.best_genome);
    CHECK(again.history.back().median_fitness == r1.history.back().median_fitness);
  }

  SUBCASE("nested studies with optimum injection") {
    StudySpec s2;
    s2.study = Study::II;
    s2.ga.generations = 10;
    s2.inject = {r1.best};
    const GaResult r2 = run_ga(s2, ev);
    CHECK(r2.best_result.p_v >= r1.best_result.p_v - 1e-9);
    StudySpec s3;
    s3.study = Study::III;
    s3.ga.generations = 10;
    s3.inject = {r2.best};
    const GaResult r3 = run_ga(s3, ev);
    CHECK(r3.best_result.p_v >= r2.best_result.p_v - 1e-9);
    CHECK(r3.best.pto.mode == PtoSettings::Mode::per_device);
  }

  SUBCASE("polish never loses power") {
    StudySpec sp = s1;
    sp.ga.generations = 5;
    sp.polish = true;
    sp.polish_evaluations = 60;
    const GaResult plain = run_ga([&] { auto t = sp; t.polish = false; return t; }(), ev);
    const GaResult polished = run_ga(sp, ev);
    REQUIRE(polished.polish_gain.has_value());
    CHECK(*polished.polish_gain >= 0);
    CHECK(polished.best_result.p_v >= plain.best_result.p_v);
    CHECK(polished.best_result.feasible());
  }
}

TEST_CASE("penalty sweep") {
  const Evaluator& ev = evaluator();
  for (double c : {1e4, 1e6}) {
    StudySpec s;
    s.fixed_control = {{-5e3, 5e5}};
    s.ga.generations = 20;
    s.ga.penalty = c;
    const GaResult r = run_ga(s, ev);
    CHECK(r.history.back().best_feasible);
  }
}

TEST_CASE("random layouts and designs") {
  const DesignBounds b;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const DesignPoint d = random_design(b, 5, rng);
    CHECK_NOTHROW(check_design_bounds(d, b));
    CHECK(min_distance_violations(d.layout, d.geometry).empty());
  }
  // a box too small for the spacing
  DesignBounds tight;
  tight.clearance = 400;
  CHECK_THROWS_AS(random_layout(tight, 5, WecGeometry(3, 1), rng, 1000), Error);

  CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3);
  CHECK(percentile({1, 2, 3, 4, 5}, 100) == 5);
  CHECK(percentile({0, 10}, 95) == doctest::Approx(9.5));
}

TEST_CASE("power error benchmark") {
  const Evaluator& ev = evaluator();
  const Evaluator same(reference(), ev.site(), ev.grid());
  const auto rep = power_error_benchmark(100, 5, ev, same, 7);
  CHECK(rep.samples.size() == 100);
  CHECK(rep.skipped == 0);
  for (const auto& s : rep.samples) CHECK(s.relative_error == 0.0);
  CHECK(rep.relative.p99 == 0.0);

  ReferenceModel other;
  other.interaction_strength = 0.3;
  const ReferenceProvider perturbed(other);
  const Evaluator alt(perturbed, ev.site(), ev.grid());
  const auto a = power_error_benchmark(100, 5, ev, alt, 7);
  const auto b = power_error_benchmark(100, 5, ev, alt, 7, 3);
  CHECK(a.relative.p99 > 0);
  CHECK(a.relative.p99 == b.relative.p99);
  CHECK(a.relative.p50 <= a.relative.p95);
  CHECK(a.relative.p95 <= a.relative.p99);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(a.samples[i].surrogate_pv == b.samples[i].surrogate_pv);
}

TEST_CASE("random layout analysis") {
  const Evaluator& ev = evaluator();
  const DesignPoint d = design(2, 1, {{0, 0}, {30, 12}, {15, -28}, {55, 25}, {60, -15}});
  const auto a = random_layout_analysis(d, 100, ev, 11);
  const auto b = random_layout_analysis(d, 100, ev, 11, 3);
  CHECK(a.layout_pv == b.layout_pv);
  CHECK(a.percentile == b.percentile);
  CHECK(a.percentile >= 0);
  CHECK(a.percentile <= 100);
  CHECK(a.design_pv == ev.evaluate(d).p_v);
}

TEST_CASE("sensitivity map") {
  const Evaluator& ev = evaluator();
  // x-axis symmetric layout, perturbed device on the axis
  const DesignPoint d = design(2, 1, {{0, 0}, {40, 0}, {20, 30}, {20, -30}, {70, 0}});
  CHECK_THROWS_AS(sensitivity_map(d, 0, 11, 20, ev), Error);
  CHECK_THROWS_AS(sensitivity_map(d, 1, 9, 20, ev), Error);
  const auto m = sensitivity_map(d, 1, 11, 20, ev);
  REQUIRE(m.pv.rows() == 11);
  for (Eigen::Index r = 0; r < 11; ++r)
    for (Eigen::Index c = 0; c < 11; ++c) {
      const double a = m.pv(r, c), b = m.pv(10 - r, c);
      CHECK(std::isnan(a) == std::isnan(b));
      if (!std::isnan(a)) CHECK(oracle::rel(a, b) < 1e-12);
    }
  // centre cell is the design itself
  CHECK(oracle::rel(m.pv(5, 5), m.design_pv) < 1e-12);
  CHECK(m.best_pv >= m.design_pv);
  CHECK(m.gap >= 0);
  // (20, 20) is 10 m from device 2 at (20, 30), inside its 2R + s_d = 14 m disk
  CHECK(m.xs[0] == 20);
  CHECK(m.ys[10] == 20);
  CHECK(std::isnan(m.pv(10, 0)));
  CHECK(!std::isnan(m.pv(5, 0)));
  CHECK(m.offset == doctest::Approx(std::hypot(m.best_position.x - 40, m.best_position.y)));
}
