#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "unit/oracles.hpp"
#include "wecfarm/climate.hpp"
#include "wecfarm/dynamics.hpp"
#include "wecfarm/error.hpp"
#include "wecfarm/rng.hpp"

using namespace wecfarm;

namespace {

const double kPi = std::numbers::pi;

// Textbook JONSWAP shape without normalisation.
double shape(double w, double tp) {
  const double wp = 2 * kPi / tp;
  const double sigma = w <= wp ? 0.07 : 0.09;
  const double r = std::exp(-std::pow(w - wp, 2) / (2 * sigma * sigma * wp * wp));
  return std::pow(w, -5) * std::exp(-1.25 * std::pow(wp / w, 4)) * std::pow(3.3, r);
}

double trapezoid_m0(double hs, double tp, int n) {
  const double c = jonswap_density(2 * kPi / tp, hs, tp) / shape(2 * kPi / tp, tp);
  const double lo = kSpectrumMin, hi = kSpectrumMax;
  const double h = (hi - lo) / n;
  double sum = 0.5 * (shape(lo, tp) + shape(hi, tp));
  for (int i = 1; i < n; ++i) sum += shape(lo + i * h, tp);
  return c * h * sum;
}

// Single device with fixed K, B: analytic regular-wave power per grid point.
std::vector<double> single_power(const FrequencyGrid& grid, double r, double d,
                                 double kpto, double bpto) {
  std::vector<double> out;
  const double m = 1025 * kPi * r * r * d;
  const double g = 1025 * 9.81 * kPi * r * r;
  for (double w : grid.values()) {
    const auto s = oracle::single(r, d, w);
    const std::complex<double> z(-w * w * (m + s.added_mass) + g + kpto,
                                 w * (s.damping + bpto));
    out.push_back(0.5 * w * w * bpto * s.force * s.force / std::norm(z));
  }
  return out;
}

FrequencyGrid linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return FrequencyGrid(v);
}

SiteClimate point_mass(std::size_t i, std::size_t j, int n_gq = 4) {
  SiteClimate site;
  site.grid = SeaStateGrid::gauss({}, n_gq);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_gq, n_gq);
  p(i, j) = 1.0;
  site.probability = {p};
  return site;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("jonswap spectrum") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const double hs = rng.uniform(0.5, 8.0), tp = rng.uniform(3.0, 18.0);
    const double m0 = trapezoid_m0(hs, tp, 400000);
    CHECK(std::fabs(m0 - hs * hs / 16) < 1e-6 * hs * hs / 16);
    // shape agrees with the textbook formula away from the peak too
    const double c = jonswap_density(2 * kPi / tp, hs, tp) / shape(2 * kPi / tp, tp);
    for (double w : {0.3, 0.7, 1.4, 3.0})
      CHECK(oracle::rel(jonswap_density(w, hs, tp), c * shape(w, tp)) < 1e-12);
  }

  CHECK(jonswap_density(1e-3, 2, 8) < 1e-100);
  CHECK(jonswap_density(0.05, 2, 8) < 1e-10);

  const double tp = 9.0;
  const double step = 1e-4;
  double best = 0, arg = 0;
  for (double w = 0.1; w < 3.0; w += step) {
    const double s = jonswap_density(w, 3, tp);
    if (s > best) best = s, arg = w;
  }
  CHECK(std::fabs(arg - 2 * kPi / tp) <= step);

  CHECK_THROWS_AS(jonswap_density(0.0, 1, 8), Error);
  CHECK_THROWS_AS(jonswap_density(1.0, -1, 8), Error);
  CHECK_THROWS_AS(jonswap_density(1.0, 1, 0), Error);
}

TEST_CASE("gauss legendre rule") {
  const auto r = gauss_legendre(20);
  double s0 = 0, s6 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    s0 += r.weights[i];
    s6 += r.weights[i] * std::pow(r.nodes[i], 6);
  }
  CHECK(s0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s6 == doctest::Approx(2.0 / 7).epsilon(1e-14));
  const auto grid = SeaStateGrid::gauss({}, 20);
  CHECK(grid.weights.sum() == doctest::Approx(7.75 * 15).epsilon(1e-12));
  CHECK(grid.hs_nodes.front() > 0.25);
  CHECK(grid.tp_nodes.back() < 18.0);
  CHECK((grid.weights.array() > 0).all());
}

TEST_CASE("irregular power") {
  const FrequencyGrid grid = FrequencyGrid::uniform();
  CHECK(irregular_power(std::vector<double>(grid.size(), 0.0), grid, 2, 8) == 0.0);
  CHECK_THROWS_AS(irregular_power(std::vector<double>(3, 1.0), grid, 2, 8), Error);

  const FrequencyGrid wide = linspace(0.05, 6.0, 4000);
  const double c = 7.5;
  CHECK(irregular_power(std::vector<double>(wide.size(), c), wide, 2, 8) ==
        doctest::Approx(2 * c * 4.0 / 16).epsilon(1e-4));

  // single device, PTO tuned to the peak frequency
  const double r = 3, d = 0.5, wp = 2 * kPi / 8;
  const auto s = oracle::single(r, d, wp);
  const double kpto = wp * wp * (1025 * kPi * r * r * d + s.added_mass) - 1025 * 9.81 * kPi * r * r;
  const double bpto = s.damping;

  const double coarse = irregular_power(single_power(grid, r, d, kpto, bpto), grid, 2, 8);
  const FrequencyGrid half = FrequencyGrid::uniform(0.3, 2.0, 399);
  const double halved = irregular_power(single_power(half, r, d, kpto, bpto), half, 2, 8);
  CHECK(std::fabs(halved - coarse) < 0.01 * halved);

  // 10x finer grid oracle summed in place
  const FrequencyGrid fine = FrequencyGrid::uniform(0.3, 2.0, 1991);
  const auto pm = single_power(fine, r, d, kpto, bpto);
  double oracle_sum = 0;
  for (std::size_t k = 0; k < fine.size(); ++k)
    oracle_sum += 2 * fine.spacing()[k] * jonswap_density(fine[k], 2, 8) * pm[k];
  CHECK(std::fabs(coarse - oracle_sum) < 0.005 * oracle_sum);

  // the library path through the provider agrees with the analytic curve
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(r, d);
  const auto farm = compose_farm(provider, geom, Layout({{0, 0}}), grid, env);
  const PtoSettings pto{{kpto}, {bpto}, PtoSettings::Mode::per_device};
  const auto p = regular_wave_power(solve_motion(farm, geom, pto, env), pto);
  CHECK(oracle::rel(irregular_power(p.total, grid, 2, 8), coarse) < 1e-9);
}

TEST_CASE("site climate from records") {
  ClimateOptions opt;

  SUBCASE("gaussian records") {
    Rng rng(3);
    std::vector<SeaRecord> recs;
    while (recs.size() < 2000) {
      const double hs = 3 + 0.5 * rng.normal(), tp = 10 + 1.5 * rng.normal();
      if (opt.bounds.contains(hs, tp)) recs.push_back({hs, tp, std::nullopt});
    }
    double mean = 0, var = 0;
    for (const auto& r : recs) mean += r.hs;
    mean /= recs.size();
    for (const auto& r : recs) var += (r.hs - mean) * (r.hs - mean);
    const double se = std::sqrt(var / (recs.size() - 1) / recs.size());
    const auto site = build_site_climate(recs, opt, "g");
    CHECK(site.years() == 30);
    double hs_mean = 0;
    for (int y = 0; y < site.years(); ++y) {
      CHECK(std::fabs(site.probability[y].sum() - 1) < 1e-9);
      CHECK((site.probability[y].array() >= 0).all());
    }
    for (std::size_t i = 0; i < site.grid.size(); ++i)
      hs_mean += site.probability[0].row(i).sum() * site.grid.hs_nodes[i];
    CHECK(std::fabs(hs_mean - mean) < 3 * se);
  }

  SUBCASE("degenerate records") {
    std::vector<SeaRecord> recs(50, SeaRecord{2, 8, std::nullopt});
    try {
      build_site_climate(recs, opt, "d");
      FAIL("expected degenerate error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate);
    }
  }

  SUBCASE("uniform records follow the quadrature weights") {
    std::vector<SeaRecord> recs;
    const int m = 80;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        recs.push_back({0.25 + 7.75 * (a + 0.5) / m, 3 + 15 * (b + 0.5) / m, std::nullopt});
    const auto site = build_site_climate(recs, opt, "u");
    const auto& g = site.grid;
    double lo = 1e300, hi = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        const bool interior =
            g.hs_nodes[i] > 0.25 + 3 * site.hs_bandwidth &&
            g.hs_nodes[i] < 8 - 3 * site.hs_bandwidth &&
            g.tp_nodes[j] > 3 + 3 * site.tp_bandwidth &&
            g.tp_nodes[j] < 18 - 3 * site.tp_bandwidth;
        if (!interior) continue;
        const double ratio = site.probability[0](i, j) / g.weights(i, j);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
    CHECK(hi > 0);
    CHECK(hi / lo < 1.02);
  }

  SUBCASE("bad inputs") {
    std::vector<SeaRecord> few(10, SeaRecord{2, 8, std::nullopt});
    CHECK_THROWS_AS(build_site_climate(few, opt, "f"), Error);
    auto recs = synthetic_records("west_coast", 200, 1);
    recs.push_back({12.0, 8.0, std::nullopt});
    CHECK_THROWS_AS(build_site_climate(recs, opt, "o"), Error);
  }

  SUBCASE("records with years") {
    std::vector<SeaRecord> recs;
    for (int y = 0; y < 3; ++y)
      for (auto r : synthetic_records("east_coast", 100, 10 + y)) {
        r.year = 2000 + y;
        recs.push_back(r);
      }
    opt.years = 3;
    const auto site = build_site_climate(recs, opt, "y");
    CHECK(site.years() == 3);
    CHECK((site.probability[0] - site.probability[1]).norm() > 1e-6);
    for (const auto& p : site.probability) CHECK(std::fabs(p.sum() - 1) < 1e-9);
    opt.years = 5;
    CHECK_THROWS_AS(build_site_climate(recs, opt, "y"), Error);
  }
}

TEST_CASE("lifetime aggregation") {
  ClimateOptions opt;
  const auto site = build_site_climate(synthetic_records("alaska", 500, 4), opt, "a");
  const EfficiencyChain eff;
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(20, 20);
  const auto lp = lifetime_average_power(ones, site, eff);
  CHECK(lp.lifetime == doctest::Approx(22.344).epsilon(1e-12));
  CHECK(lp.per_year == doctest::Approx(22.344 / 30).epsilon(1e-12));

  const auto pm = point_mass(1, 2);
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(4, 4);
  pi(1, 2) = 123.0;
  CHECK(lifetime_average_power(pi, pm, eff).lifetime == doctest::Approx(0.74480 * 123.0));

  Rng rng(1);
  Eigen::MatrixXd p(20, 20);
  for (int i = 0; i < 400; ++i) p.data()[i] = rng.uniform(0, 1e5);
  const double base = lifetime_average_power(p, site, eff).lifetime;
  for (double f : {0.5, 0.9}) {
    EfficiencyChain e1 = eff, e2 = eff, e3 = eff;
    e1.pcc *= f;
    e2.operational_availability *= f;
    e3.transmission *= f;
    for (const auto& e : {e1, e2, e3})
      CHECK(oracle::rel(lifetime_average_power(p, site, e).lifetime, f * base) < 1e-14);
  }
  CHECK(oracle::rel(lifetime_average_power(2.5 * p, site, eff).lifetime, 2.5 * base) < 1e-14);
  EfficiencyChain bad;
  bad.pcc = 1.2;
  CHECK_THROWS_AS(lifetime_average_power(p, site, bad), Error);
  CHECK_THROWS_AS(lifetime_average_power(Eigen::MatrixXd::Ones(3, 3), site, eff), Error);
}

TEST_CASE("volume objective and q factor") {
  const WecGeometry geom = WecGeometry::from_draft(3, 0.5);
  CHECK(objective_pv(1e6, geom, 5) == doctest::Approx(14147.1).epsilon(1e-6));
  CHECK(objective_pv(5 * geom.volume(), geom, 5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(objective_pv(1e6, geom, 10) == doctest::Approx(0.5 * objective_pv(1e6, geom, 5)));
  CHECK(q_factor(3.7, {3.7}) == 1.0);
  CHECK_THROWS_AS(q_factor(1, {1, 0}), Error);
  CHECK_THROWS_AS(q_factor(1, {}), Error);
}

TEST_CASE("five device pipeline against a scripted recomputation") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(2, 1);
  const Layout layout({{0, 0}, {30, 10}, {15, -30}, {55, 25}, {60, -15}});
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 60);
  const auto pto = PtoSettings::uniform(5, -5e3, 5e4);
  const auto farm = compose_farm(provider, geom, layout, grid, env);
  const auto pm = regular_wave_power(solve_motion(farm, geom, pto, env), pto);

  ClimateOptions opt;
  opt.n_gq = 6;
  opt.years = 2;
  const auto site = build_site_climate(synthetic_records("pacific_islands", 300, 9), opt, "p");
  const SpectrumTable table(site.grid, grid);
  const auto pa = lifetime_average_power(table.sea_state_power(pm.total), site, EfficiencyChain{});

  double sum = 0;
  for (int y = 0; y < 2; ++y)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        double pi = 0;
        for (std::size_t k = 0; k < grid.size(); ++k)
          pi += 2 * grid.spacing()[k] *
                jonswap_density(grid[k], site.grid.hs_nodes[i], site.grid.tp_nodes[j]) *
                pm.total[k];
        sum += pi * site.probability[y](i, j);
      }
  CHECK(oracle::rel(pa.lifetime, 0.8 * 0.95 * 0.98 * sum) < 1e-10);
  CHECK(pa.lifetime > 0);
}

TEST_CASE("q factor at large spacing") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(2, 1);
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 60);
  const double l = 500 / solve_dispersion(0.3, env).k;
  const Layout layout({{0, 0}, {l, 0}, {0, l}});
  const auto pto = PtoSettings::uniform(3, 0, 5e4);
  ClimateOptions opt;
  opt.n_gq = 6;
  const auto site = build_site_climate(synthetic_records("west_coast", 300, 2), opt, "w");
  const SpectrumTable table(site.grid, grid);
  auto average = [&](const Layout& lay, const PtoSettings& p) {
    const auto farm = compose_farm(provider, geom, lay, grid, env);
    const auto pm = regular_wave_power(solve_motion(farm, geom, p, env), p);
    return lifetime_average_power(table.sea_state_power(pm.total), site, {}).lifetime;
  };
  const double farm = average(layout, pto);
  std::vector<double> iso;
  for (std::size_t i = 0; i < 3; ++i) iso.push_back(average(Layout({{0, 0}}), pto.isolated(i)));
  CHECK(std::fabs(q_factor(farm, iso) - 1) < 1e-2);
}

TEST_CASE("record csv") {
  CHECK(parse_sea_records("hs_m,tp_s\n1.5,8\n2,9.5\n").size() == 2);
  const auto with_year = parse_sea_records("hs_m, tp_s ,year\n1,8,2001\n");
  REQUIRE(with_year.size() == 1);
  CHECK(*with_year[0].year == 2001);

  auto kind_of = [](const std::string& text) {
    try {
      parse_sea_records(text);
    } catch (const Error& e) {
      return std::make_pair(e.kind(), std::string(e.what()));
    }
    return std::make_pair(ErrorKind::validation, std::string("no error"));
  };
  auto [k1, m1] = kind_of("hs,tp\n1,2\n");
  CHECK(k1 == ErrorKind::parse);
  CHECK(m1.find("line 1") != std::string::npos);
  auto [k2, m2] = kind_of("hs_m,tp_s\n1,2\n1,x\n");
  CHECK(k2 == ErrorKind::parse);
  CHECK(m2.find("line 3") != std::string::npos);
  auto [k3, m3] = kind_of("hs_m,tp_s\n1,2,3\n");
  CHECK(k3 == ErrorKind::parse);
  CHECK(m3.find("line 2") != std::string::npos);

  const auto recs = synthetic_records("bimodal", 100, 5);
  const std::string path = temp_path("wecfarm_records.csv");
  write_sea_records(path, recs);
  const auto back = read_sea_records(path);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].hs == recs[i].hs);
    CHECK(back[i].tp == recs[i].tp);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_sea_records(temp_path("wecfarm_missing.csv")), Error);
}

TEST_CASE("synthetic profiles") {
  for (const auto& name : synthetic_profiles()) {
    const auto a = synthetic_records(name, 400, 7);
    const auto b = synthetic_records(name, 400, 7);
    REQUIRE(a.size() == 400);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].hs == b[i].hs);
      CHECK(SeaStateBounds{}.contains(a[i].hs, a[i].tp));
    }
  }
  CHECK_THROWS_AS(synthetic_records("atlantis", 10, 1), Error);
}

TEST_CASE("site json round trip") {
  ClimateOptions opt;
  opt.n_gq = 5;
  opt.years = 4;
  const auto site = build_site_climate(synthetic_records("alaska", 300, 8), opt, "ak");
  const auto back = site_from_json(site_to_json(site));
  CHECK(back.site_id == "ak");
  CHECK(back.years() == 4);
  CHECK(back.grid.hs_nodes == site.grid.hs_nodes);
  CHECK(back.grid.weights == site.grid.weights);
  for (int y = 0; y < 4; ++y) CHECK(back.probability[y] == site.probability[y]);
  CHECK(back.hs_bandwidth == site.hs_bandwidth);

  const std::string path = temp_path("wecfarm_site.json");
  save_site(site, path);
  CHECK(load_site(path).probability[3] == site.probability[3]);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(site_from_json("{\"schema\": \"other\"}"), Error);
  CHECK_THROWS_AS(site_from_json("not json"), Error);
}
