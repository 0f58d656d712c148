#include <doctest.h>

#include <cmath>

#include "unit/oracles.hpp"
#include "wecfarm/bessel.hpp"
#include "wecfarm/error.hpp"

using namespace wecfarm;

TEST_CASE("bessel functions match boost on [0.01, 500]") {
  double worst_j0 = 0.0, worst_j1 = 0.0, worst_y0 = 0.0;
  for (int i = 0; i <= 50000; ++i) {
    const double x = 0.01 + (500.0 - 0.01) * i / 50000.0;
    worst_j0 = std::max(worst_j0, std::fabs(bessel::j0(x) - oracle::j0(x)));
    worst_j1 = std::max(worst_j1, std::fabs(bessel::j1(x) - oracle::j1(x)));
    worst_y0 = std::max(worst_y0, std::fabs(bessel::y0(x) - oracle::y0(x)));
  }
  CHECK(worst_j0 < 1e-10);
  CHECK(worst_j1 < 1e-10);
  CHECK(worst_y0 < 1e-10);
}

TEST_CASE("bessel accuracy across the series/asymptotic switch") {
  for (double x = bessel::kSeriesLimit - 1.0; x < bessel::kSeriesLimit + 1.0;
       x += 1e-3) {
    CHECK(std::fabs(bessel::j0(x) - oracle::j0(x)) < 1e-10);
    CHECK(std::fabs(bessel::j1(x) - oracle::j1(x)) < 1e-10);
    CHECK(std::fabs(bessel::y0(x) - oracle::y0(x)) < 1e-10);
  }
}

TEST_CASE("bessel small arguments and parity") {
  CHECK(bessel::j0(0.0) == 1.0);
  CHECK(bessel::j1(0.0) == 0.0);
  CHECK(bessel::j0(-3.7) == bessel::j0(3.7));
  CHECK(bessel::j1(-3.7) == -bessel::j1(3.7));
  CHECK(std::fabs(bessel::y0(1e-4) - oracle::y0(1e-4)) < 1e-10);
  CHECK_THROWS_AS(bessel::y0(0.0), Error);
  CHECK_THROWS_AS(bessel::y0(-1.0), Error);
}
