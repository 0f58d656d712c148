#include <doctest.h>

#include <cmath>
#include <numbers>

#include "unit/oracles.hpp"
#include "wecfarm/error.hpp"
#include "wecfarm/mbe.hpp"
#include "wecfarm/rng.hpp"

using namespace wecfarm;

namespace {

const double kPi = std::numbers::pi;

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

Layout random_layout(Rng& rng, std::size_t n, double min_gap) {
  for (;;) {
    std::vector<Point> pts{{0.0, 0.0}};
    bool ok = true;
    for (std::size_t i = 1; i < n && ok; ++i) {
      Point p{rng.uniform(0.0, 150.0), rng.uniform(-150.0, 150.0)};
      for (const auto& q : pts) ok &= std::hypot(p.x - q.x, p.y - q.y) > min_gap;
      pts.push_back(p);
    }
    if (ok) return Layout(pts);
  }
}

}  // namespace

TEST_CASE("pair geometry") {
  const Layout a({{0, 0}, {10, 0}});
  CHECK(pair_geometry(a, 0, 1).separation == 10.0);
  CHECK(pair_geometry(a, 0, 1).heading == 0.0);

  const Layout b({{0, 0}, {0, 10}});
  CHECK(pair_geometry(b, 0, 1).separation == 10.0);
  CHECK(pair_geometry(b, 0, 1).heading == doctest::Approx(kPi / 2));

  const Layout c({{3, 4}, {0, 0}});
  CHECK(pair_geometry(c, 0, 1).separation == 5.0);
  CHECK(pair_geometry(c, 0, 1).heading == std::atan2(-4.0, -3.0));

  // swap symmetry
  const auto pq = pair_geometry(c, 0, 1);
  const auto qp = pair_geometry(c, 1, 0);
  CHECK(pq.separation == qp.separation);
  CHECK(std::remainder(qp.heading - pq.heading - kPi, 2 * kPi) ==
        doctest::Approx(0.0).epsilon(1e-15));

  CHECK_THROWS_AS(pair_geometry(a, 1, 1), Error);
  CHECK_THROWS_AS(pair_geometry(a, 0, 2), Error);
  CHECK_THROWS_AS(Layout({{1, 1}, {1, 1}}), Error);
}

TEST_CASE("composition of farm coefficients") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(3.0, 0.5);
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 40);

  SUBCASE("one device reproduces the single body") {
    const auto farm = compose_farm(provider, geom, Layout({{0, 0}}), grid, env);
    const auto s = provider.single(geom, grid, env);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(farm.added_mass[i](0, 0) == s.added_mass[i]);
      CHECK(farm.damping[i](0, 0) == s.damping[i]);
      CHECK(farm.excitation[i](0) == s.excitation[i]);
    }
  }

  SUBCASE("two devices reproduce the pair bit for bit") {
    const Layout layout({{0, 0}, {17.0, 11.0}});
    const auto pg = pair_geometry(layout, 0, 1);
    const auto farm = compose_farm(provider, geom, layout, grid, env);
    const auto pc = provider.pair(geom, pg.separation, pg.heading, grid, env);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(farm.added_mass[i] == pc.added_mass[i]);
      CHECK(farm.damping[i] == pc.damping[i]);
      CHECK(farm.excitation[i] == pc.excitation[i]);
    }
  }

  SUBCASE("three devices match term-by-term summation") {
    const double side = 30.0;
    const Layout layout({{0, 0}, {side, 0}, {side / 2, side * std::sqrt(3.0) / 2}});
    const FrequencyGrid one({1.0});
    const auto farm = compose_farm(provider, geom, layout, one, env);

    // oracle 1: closed forms with boost Bessel functions
    const auto s = oracle::single(3.0, 0.5, 1.0);
    const double k = oracle::wavenumber(1.0, 50.0);
    const double decay = std::exp(-side / 60.0);
    const double kl = k * side;
    const double da = -s.damping * 0.25 * oracle::y0(2 * kl) * decay;
    const double db = s.damping * 0.25 * oracle::j0(2 * kl) * decay;
    const std::complex<double> corr =
        0.25 * std::sqrt(2 / (kPi * kl)) * std::polar(1.0, kl + kPi / 4);
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(oracle::rel(farm.added_mass[0](p, p), s.added_mass + 2 * da) < 1e-11);
      CHECK(oracle::rel(farm.damping[0](p, p), s.damping + 2 * db) < 1e-11);
      const std::complex<double> plane = std::polar(1.0, -k * layout[p].x);
      const std::complex<double> fe = s.force * plane * (1.0 + 2.0 * corr);
      CHECK(std::abs(farm.excitation[0](p) - fe) < 1e-11 * std::abs(fe));
      for (std::size_t q = 0; q < 3; ++q) {
        if (q == p) continue;
        CHECK(oracle::rel(farm.added_mass[0](p, q), -s.damping * oracle::y0(kl)) < 1e-11);
        CHECK(oracle::rel(farm.damping[0](p, q), s.damping * oracle::j0(kl)) < 1e-11);
      }
    }

    // oracle 2: explicit summation of provider pair terms
    const auto single = provider.single(geom, one, env);
    for (std::size_t p = 0; p < 3; ++p) {
      double a = single.added_mass[0];
      double b = single.damping[0];
      const Complex plane = std::polar(1.0, -k * layout[p].x);
      Complex f = single.excitation[0] * plane;
      for (std::size_t q = 0; q < 3; ++q) {
        if (q == p) continue;
        const std::size_t lead = std::min(p, q);
        const auto g = pair_geometry(layout, lead, std::max(p, q));
        const auto pc = provider.pair(geom, g.separation, g.heading, one, env);
        const int local = p < q ? 0 : 1;
        a += pc.added_mass[0](local, local) - single.added_mass[0];
        b += pc.damping[0](local, local) - single.damping[0];
        f += pc.excitation[0](local) * std::polar(1.0, -k * layout[lead].x) -
             single.excitation[0] * plane;
      }
      CHECK(oracle::rel(farm.added_mass[0](p, p), a) < 1e-12);
      CHECK(oracle::rel(farm.damping[0](p, p), b) < 1e-12);
      CHECK(std::abs(farm.excitation[0](p) - f) < 1e-12 * std::abs(f));
    }
  }

  SUBCASE("overlap is a geometry error") {
    CHECK_THROWS_AS(compose_farm(provider, geom, Layout({{0, 0}, {5.9, 0}}), grid, env),
                    Error);
  }
}

TEST_CASE("composition invariants") {
  const ReferenceProvider provider;
  const Environment env;
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 25);
  const auto waves = solve_dispersion(grid, env);
  Rng rng(5);

  for (int trial = 0; trial < 20; ++trial) {
    const WecGeometry geom = WecGeometry::from_draft(rng.uniform(0.5, 6.0),
                                                    rng.uniform(0.5, 3.0));
    const Layout layout = random_layout(rng, 4, 2 * geom.radius() + 10.0);
    const auto base = compose_farm(provider, geom, layout, grid, env);

    SUBCASE("symmetric matrices") {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK((base.added_mass[i] - base.added_mass[i].transpose()).norm() <=
              1e-12 * base.added_mass[i].norm());
        CHECK((base.damping[i] - base.damping[i].transpose()).norm() <=
              1e-12 * base.damping[i].norm());
      }
    }

    SUBCASE("rigid translation") {
      const double dx = rng.uniform(-50, 50), dy = rng.uniform(-50, 50);
      const auto moved =
          compose_farm(provider, geom, layout.translated(dx, dy), grid, env);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(max_rel_diff(moved.added_mass[i], base.added_mass[i]) < 1e-12);
        CHECK(max_rel_diff(moved.damping[i], base.damping[i]) < 1e-12);
        const Complex common = std::polar(1.0, -waves[i].k * dx);
        for (std::size_t p = 0; p < layout.size(); ++p) {
          CHECK(std::abs(moved.excitation[i](p) - base.excitation[i](p) * common) <
                1e-11 * std::abs(base.excitation[i](p)));
        }
      }
    }

    SUBCASE("reflection across the wave axis") {
      const auto mirror = compose_farm(provider, geom, layout.reflected(), grid, env);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(max_rel_diff(mirror.added_mass[i], base.added_mass[i]) < 1e-12);
        CHECK(max_rel_diff(mirror.damping[i], base.damping[i]) < 1e-12);
        CHECK((mirror.excitation[i] - base.excitation[i]).norm() <
              1e-12 * base.excitation[i].norm());
      }
    }

    SUBCASE("permuting devices permutes rows and columns") {
      const std::vector<std::size_t> order{2, 0, 3, 1};
      const auto perm = compose_farm(provider, geom, layout.permuted(order), grid, env);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t p = 0; p < 4; ++p) {
          CHECK(std::abs(perm.excitation[i](p) - base.excitation[i](order[p])) <
                1e-12 * std::abs(base.excitation[i](order[p])));
          for (std::size_t q = 0; q < 4; ++q) {
            CHECK(oracle::rel(perm.damping[i](p, q),
                              base.damping[i](order[p], order[q])) < 1e-12);
            CHECK(oracle::rel(perm.added_mass[i](p, q),
                              base.added_mass[i](order[p], order[q])) < 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("composition decouples at large spacing") {
  const ReferenceProvider provider;
  const Environment env;
  const WecGeometry geom = WecGeometry::from_draft(2.0, 1.0);
  const FrequencyGrid grid = FrequencyGrid::uniform(0.3, 2.0, 20);
  const double k_min = solve_dispersion(0.3, env).k;
  const double l = 500.0 / k_min;  // k l >= 500 at every frequency
  const Layout layout({{0, 0}, {l, 0}, {0.5 * l, 0.9 * l}});
  const auto farm = compose_farm(provider, geom, layout, grid, env);
  const auto s = provider.single(geom, grid, env);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double k = solve_dispersion(grid[i], env).k;
    const double envelope = std::sqrt(2.0 / (kPi * k * l * 0.9));
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(oracle::rel(farm.damping[i](p, p), s.damping[i]) < 1e-6);
      CHECK(oracle::rel(farm.added_mass[i](p, p), s.added_mass[i]) < 1e-6);
      for (std::size_t q = 0; q < 3; ++q) {
        if (p == q) continue;
        CHECK(std::fabs(farm.damping[i](p, q)) <= 1.001 * envelope * s.damping[i]);
      }
    }
  }
}
