#include <doctest.h>

#include <cmath>
#include <numbers>

#include "unit/oracles.hpp"
#include "wecfarm/dynamics.hpp"
#include "wecfarm/error.hpp"
#include "wecfarm/rng.hpp"

using namespace wecfarm;

namespace {

using CMat = std::vector<std::vector<std::complex<double>>>;

// Gauss-Jordan inverse with full row pivoting, no Eigen.
CMat invert(CMat a) {
  const std::size_t n = a.size();
  CMat inv(n, std::vector<std::complex<double>>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const auto d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const auto f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

// Matched PTO for one device: cancels the reactance and equals B(w).
PtoSettings matched(const SingleBodyCoefficients& s, std::size_t i,
                    const WecGeometry& geom, const Environment& env) {
  const double w = s.grid[i];
  const double k = w * w * (body_mass(geom, env) + s.added_mass[i]) -
                   hydrostatic_coefficient(geom, env);
  return PtoSettings{{k}, {s.damping[i]}, PtoSettings::Mode::per_device};
}

FarmCoefficients as_farm(const SingleBodyCoefficients& s, std::size_t i) {
  FarmCoefficients f;
  f.grid = FrequencyGrid({s.grid[i]});
  f.added_mass = {Eigen::MatrixXd::Constant(1, 1, s.added_mass[i])};
  f.damping = {Eigen::MatrixXd::Constant(1, 1, s.damping[i])};
  f.excitation = {Eigen::VectorXcd::Constant(1, s.excitation[i])};
  return f;
}

}  // namespace

TEST_CASE("mass and hydrostatic stiffness") {
  const Environment env;
  CHECK(body_mass(WecGeometry::from_draft(3, 0.5), env) == doctest::Approx(14490.0).epsilon(1e-4));
  CHECK(body_mass(WecGeometry::from_draft(1, 1), env) == doctest::Approx(3220.13).epsilon(1e-5));
  CHECK(body_mass(WecGeometry::from_draft(3, 0.5), env) ==
        doctest::Approx(1025 * std::numbers::pi * 9 * 0.5).epsilon(1e-15));
  CHECK(body_mass(WecGeometry::from_draft(6, 1), env) ==
        doctest::Approx(4 * body_mass(WecGeometry::from_draft(3, 1), env)));
  CHECK(hydrostatic_coefficient(WecGeometry::from_draft(3, 1), env) ==
        doctest::Approx(1025 * 9.81 * std::numbers::pi * 9).epsilon(1e-15));
  CHECK(hydrostatic_coefficient(WecGeometry::from_draft(3, 1), env) ==
        doctest::Approx(284292).epsilon(1e-4));
  CHECK(hydrostatic_coefficient(WecGeometry::from_draft(0.5, 1), env) ==
        doctest::Approx(7897.0).epsilon(1e-4));
  CHECK(hydrostatic_coefficient(WecGeometry::from_draft(2, 1), env) ==
        doctest::Approx(4 * hydrostatic_coefficient(WecGeometry::from_draft(1, 1), env)));
}

TEST_CASE("pto settings validation") {
  CHECK_NOTHROW(PtoSettings::uniform(3, -5e5, 5e5));
  CHECK_THROWS_AS(PtoSettings::uniform(3, -6e5, 1e5), Error);
  CHECK_THROWS_AS(PtoSettings::uniform(3, 0, -1), Error);
  CHECK_THROWS_AS(PtoSettings::uniform(0, 0, 0), Error);
  PtoSettings bad{{1, 2}, {3, 3}, PtoSettings::Mode::farm_uniform};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_NOTHROW(PtoSettings::per_device({1, 2}, {3, 4}));
  const auto iso = PtoSettings::per_device({1, 2}, {3, 4}).isolated(1);
  CHECK(iso.size() == 1);
  CHECK(iso.stiffness[0] == 2);
  CHECK(iso.damping[0] == 4);
}

TEST_CASE("single device limits") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(3.0, 0.5);

  SUBCASE("static limit") {
    const FrequencyGrid grid({1e-4});
    const auto farm = compose_farm(provider, geom, Layout({{0, 0}}), grid, env);
    const auto r = solve_motion(farm, geom, PtoSettings::uniform(1, 0, 0), env);
    const double g = hydrostatic_coefficient(geom, env);
    CHECK(std::abs(r.motion[0](0) - farm.excitation[0](0) / g) < 1e-6);
    CHECK(std::abs(r.motion[0](0) - 1.0) < 1e-3);
  }

  SUBCASE("matched impedance at every grid frequency") {
    const FrequencyGrid grid = FrequencyGrid::uniform();
    const auto s = provider.single(geom, grid, env);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const PtoSettings pto = matched(s, i, geom, env);
      const auto r = solve_motion(as_farm(s, i), geom, pto, env);
      const double w = grid[i];
      CHECK(oracle::rel(std::abs(r.motion[0](0)),
                        std::abs(s.excitation[i]) / (2 * w * s.damping[i])) < 1e-9);
      const auto p = regular_wave_power(r, pto);
      CHECK(p.total[0] * 8 * s.damping[i] / std::norm(s.excitation[i]) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("no pto damping gives no power") {
    const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 30);
    const auto farm = compose_farm(provider, geom, Layout({{0, 0}, {20, 5}}), grid, env);
    const auto pto = PtoSettings::uniform(2, 1e4, 0);
    const auto p = regular_wave_power(solve_motion(farm, geom, pto, env), pto);
    for (double v : p.total) CHECK(v == 0.0);
  }
}

TEST_CASE("singular system is reported") {
  FarmCoefficients f;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(1, 1);
  const double w = 1.0;
  f.grid = FrequencyGrid({w});
  const double a = 1000.0;
  f.added_mass = {Eigen::MatrixXd::Constant(1, 1, a)};
  f.damping = {Eigen::MatrixXd::Zero(1, 1)};
  f.excitation = {Eigen::VectorXcd::Constant(1, 1.0)};
  const double k = w * w * (body_mass(geom, env) + a) - hydrostatic_coefficient(geom, env);
  const PtoSettings pto{{k}, {0.0}, PtoSettings::Mode::per_device};
  try {
    solve_motion(f, geom, pto, env);
    FAIL("expected singular error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular);
    CHECK(std::string(e.what()).find("omega=1") != std::string::npos);
  }
}

TEST_CASE("five devices against explicit inverse") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(2.0, 1.0);
  const Layout layout({{0, 0}, {25, 12}, {-14, 30}, {40, -22}, {8, -35}});
  const FrequencyGrid grid({1.0});
  const auto farm = compose_farm(provider, geom, layout, grid, env);
  const auto pto = PtoSettings::per_device({1e4, -2e4, 0, 5e4, 3e3},
                                           {1e5, 2e4, 3e5, 5e3, 7e4});
  const auto r = solve_motion(farm, geom, pto, env);

  const double m = body_mass(geom, env), g = hydrostatic_coefficient(geom, env);
  CMat z(5, std::vector<std::complex<double>>(5));
  for (int p = 0; p < 5; ++p)
    for (int q = 0; q < 5; ++q) {
      z[p][q] = {-farm.added_mass[0](p, q), farm.damping[0](p, q)};
      if (p == q) z[p][q] += std::complex<double>(-m + g + pto.stiffness[p], pto.damping[p]);
    }
  const CMat inv = invert(z);
  for (int p = 0; p < 5; ++p) {
    std::complex<double> xi = 0.0;
    for (int q = 0; q < 5; ++q) xi += inv[p][q] * farm.excitation[0](q);
    CHECK(std::abs(r.motion[0](p) - xi) < 1e-10 * std::abs(xi));
  }
}

TEST_CASE("two devices against a 2x2 closed form") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(3.0, 0.5);
  const Layout layout({{0, 0}, {30, 0}});
  const FrequencyGrid grid({1.0});
  const auto farm = compose_farm(provider, geom, layout, grid, env);
  const auto pto = PtoSettings::uniform(2, -1e4, 4e4);
  const auto r = solve_motion(farm, geom, pto, env);
  const auto p = regular_wave_power(r, pto);

  const double m = body_mass(geom, env), g = hydrostatic_coefficient(geom, env);
  using C = std::complex<double>;
  const C z11 = C(-(m + farm.added_mass[0](0, 0)) + g - 1e4, farm.damping[0](0, 0) + 4e4);
  const C z22 = C(-(m + farm.added_mass[0](1, 1)) + g - 1e4, farm.damping[0](1, 1) + 4e4);
  const C z12 = C(-farm.added_mass[0](0, 1), farm.damping[0](0, 1));
  const C det = z11 * z22 - z12 * z12;
  const C f1 = farm.excitation[0](0), f2 = farm.excitation[0](1);
  const C x1 = (z22 * f1 - z12 * f2) / det;
  const C x2 = (z11 * f2 - z12 * f1) / det;
  const double expected = 0.5 * 4e4 * (std::norm(x1) + std::norm(x2));
  CHECK(oracle::rel(p.total[0], expected) < 1e-12);
}

TEST_CASE("power properties over random designs") {
  const ReferenceProvider provider;
  const Environment env;
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 12);
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double radius = rng.uniform(0.5, 10.0), ar = rng.uniform(0.2, 10.0);
    if (radius / ar < 0.5 || radius / ar > 20.0) continue;
    const WecGeometry geom(radius, ar);
    const double gap = 2 * geom.radius() + 10.0;
    std::vector<Point> pts{{0, 0}};
    for (int i = 1; i < 3; ++i)
      pts.push_back({rng.uniform(0.0, 200.0), rng.uniform(-200.0, 200.0)});
    bool ok = true;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        ok &= std::hypot(pts[a].x - pts[b].x, pts[a].y - pts[b].y) >= gap;
    if (!ok) continue;
    const Layout layout(pts);
    const auto pto = PtoSettings::per_device(
        {rng.uniform(-5e5, 5e5), rng.uniform(-5e5, 5e5), rng.uniform(-5e5, 5e5)},
        {rng.uniform(0, 5e5), rng.uniform(0, 5e5), rng.uniform(0, 5e5)});
    const auto farm = compose_farm(provider, geom, layout, grid, env);
    const auto base = regular_wave_power(solve_motion(farm, geom, pto, env), pto);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int d = 0; d < 3; ++d)
        CHECK(base.per_device[i](d) >= -1e-12 * base.total[i]);

    if (trial % 10 == 0) {
      const double dx = rng.uniform(-100, 100), dy = rng.uniform(-100, 100);
      const auto moved = compose_farm(provider, geom, layout.translated(dx, dy), grid, env);
      const auto pm = regular_wave_power(solve_motion(moved, geom, pto, env), pto);
      const auto mirror = compose_farm(provider, geom, layout.reflected(), grid, env);
      const auto pr = regular_wave_power(solve_motion(mirror, geom, pto, env), pto);
      for (std::size_t i = 0; i < grid.size(); ++i)
        for (int d = 0; d < 3; ++d) {
          const double scale = std::max(base.per_device[i](d), 1e-300);
          CHECK(std::fabs(pm.per_device[i](d) - base.per_device[i](d)) <= 1e-12 * scale);
          CHECK(std::fabs(pr.per_device[i](d) - base.per_device[i](d)) <= 1e-12 * scale);
        }
    }
    ++checked;
  }
  CHECK(checked > 200);
}
