#pragma once

// Bessel functions of the first and second kind for real arguments.
//
// Power series below |x| = kSeriesLimit, Hankel asymptotic expansion above.
// Absolute accuracy is better than 1e-10 on [0.01, 500].

namespace wecfarm::bessel {

inline constexpr double kSeriesLimit = 13.0;

double j0(double x);
double j1(double x);
// Requires x > 0.
double y0(double x);

}  // namespace wecfarm::bessel
