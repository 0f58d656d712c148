#include "wecfarm/bessel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "wecfarm/error.hpp"

namespace wecfarm::bessel {
namespace {

constexpr long double kEulerGamma = 0.577215664901532860606512090082402431L;

// sum_m (-1)^m q^m / (m! (m+nu)!), q = x^2/4
long double series_j(long double x, int nu) {
  const long double q = x * x / 4.0L;
  long double term = 1.0L;
  for (int i = 1; i <= nu; ++i) term /= i;
  long double sum = term;
  for (int m = 1; m < 200; ++m) {
    term *= -q / (static_cast<long double>(m) * (m + nu));
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
  }
  return sum;
}

double series_y0(double xd) {
  const long double x = xd;
  const long double q = x * x / 4.0L;
  long double term = 1.0L;
  long double harmonic = 0.0L;
  long double tail = 0.0L;
  for (int m = 1; m < 200; ++m) {
    term *= -q / (static_cast<long double>(m) * m);
    harmonic += 1.0L / m;
    const long double t = -term * harmonic;  // (-1)^(m+1) H_m q^m / (m!)^2
    tail += t;
    if (std::fabs(t) < 1e-22L * std::fabs(tail) && m > 2) break;
  }
  const long double two_over_pi = 2.0L / std::numbers::pi_v<long double>;
  return static_cast<double>(two_over_pi * (std::log(x / 2.0L) + kEulerGamma) *
                                 series_j(x, 0) +
                             two_over_pi * tail);
}

struct Asymptotic {
  double p;
  double q;
};

// Hankel expansion P_nu, Q_nu, summed until the terms stop decreasing.
Asymptotic hankel_pq(double x, int nu) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double a = 1.0;  // a_k(nu) / x^k
  double previous = 1.0;
  for (int k = 1; k < 100; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::fabs(a) > previous) break;
    previous = std::fabs(a);
    // k odd feeds Q with sign (-1)^((k-1)/2), k even feeds P with (-1)^(k/2)
    if (k % 2 == 1) {
      q += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * a;
    } else {
      p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * a;
    }
    if (std::fabs(a) < 1e-18) break;
  }
  return {p, q};
}

}  // namespace

double j0(double x) {
  x = std::fabs(x);
  if (x < kSeriesLimit) return static_cast<double>(series_j(x, 0));
  const auto [p, q] = hankel_pq(x, 0);
  const double chi = x - std::numbers::pi / 4.0;
  return std::sqrt(2.0 / (std::numbers::pi * x)) *
         (p * std::cos(chi) - q * std::sin(chi));
}

double j1(double x) {
  const double sign = x < 0.0 ? -1.0 : 1.0;
  x = std::fabs(x);
  if (x < kSeriesLimit) {
    return sign * static_cast<double>(x / 2.0L * series_j(x, 1));
  }
  const auto [p, q] = hankel_pq(x, 1);
  const double chi = x - 3.0 * std::numbers::pi / 4.0;
  return sign * std::sqrt(2.0 / (std::numbers::pi * x)) *
         (p * std::cos(chi) - q * std::sin(chi));
}

double y0(double x) {
  require(x > 0.0, ErrorKind::validation,
          "y0 requires a positive argument, got " + std::to_string(x));
  if (x < kSeriesLimit) return series_y0(x);
  const auto [p, q] = hankel_pq(x, 0);
  const double chi = x - std::numbers::pi / 4.0;
  return std::sqrt(2.0 / (std::numbers::pi * x)) *
         (p * std::sin(chi) + q * std::cos(chi));
}

}  // namespace wecfarm::bessel
