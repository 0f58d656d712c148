#include "wecfarm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/LU>

#include "wecfarm/error.hpp"

namespace wecfarm {

PtoSettings PtoSettings::uniform(std::size_t devices, double stiffness,
                                 double damping) {
  PtoSettings pto{std::vector<double>(devices, stiffness),
                  std::vector<double>(devices, damping), Mode::farm_uniform};
  pto.validate();
  return pto;
}

PtoSettings PtoSettings::per_device(std::vector<double> stiffness,
                                    std::vector<double> damping) {
  PtoSettings pto{std::move(stiffness), std::move(damping), Mode::per_device};
  pto.validate();
  return pto;
}

PtoSettings PtoSettings::isolated(std::size_t i) const {
  require(i < size(), ErrorKind::validation, "device index out of range");
  return PtoSettings{{stiffness[i]}, {damping[i]}, mode};
}

void PtoSettings::validate() const {
  require(!stiffness.empty() && stiffness.size() == damping.size(),
          ErrorKind::dimension,
          "PTO stiffness and damping must be non-empty and equal length");
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(stiffness[i] >= kMinStiffness && stiffness[i] <= kMaxStiffness)) {
      std::ostringstream msg;
      msg << "PTO stiffness " << stiffness[i] << " outside [" << kMinStiffness
          << ", " << kMaxStiffness << "]";
      fail(ErrorKind::validation, msg.str());
    }
    if (!(damping[i] >= kMinDamping && damping[i] <= kMaxDamping)) {
      std::ostringstream msg;
      msg << "PTO damping " << damping[i] << " outside [" << kMinDamping
          << ", " << kMaxDamping << "]";
      fail(ErrorKind::validation, msg.str());
    }
    if (mode == Mode::farm_uniform) {
      require(stiffness[i] == stiffness[0] && damping[i] == damping[0],
              ErrorKind::validation,
              "farm-uniform PTO requires identical settings on every device");
    }
  }
}

double body_mass(const WecGeometry& geom, const Environment& env) {
  return env.water_density * geom.volume();
}

double hydrostatic_coefficient(const WecGeometry& geom,
                               const Environment& env) {
  return env.water_density * env.gravity * std::numbers::pi * geom.radius() *
         geom.radius();
}

FarmResponse solve_motion(const FarmCoefficients& coeffs,
                          const WecGeometry& geom, const PtoSettings& pto,
                          const Environment& env) {
  const std::size_t n = coeffs.bodies();
  require(n > 0 && pto.size() == n, ErrorKind::dimension,
          "PTO settings and farm coefficients disagree on device count");
  const std::size_t nw = coeffs.grid.size();
  require(coeffs.added_mass.size() == nw && coeffs.damping.size() == nw &&
              coeffs.excitation.size() == nw,
          ErrorKind::dimension, "farm coefficients do not match their grid");

  const double mass = body_mass(geom, env);
  const double stiffness = hydrostatic_coefficient(geom, env);

  FarmResponse out{coeffs.grid, {}};
  out.motion.reserve(nw);
  Eigen::MatrixXcd system(n, n);
  for (std::size_t iw = 0; iw < nw; ++iw) {
    const double w = coeffs.grid[iw];
    const auto& am = coeffs.added_mass[iw];
    const auto& dm = coeffs.damping[iw];
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        double re = -w * w * am(r, c);
        double im = w * dm(r, c);
        if (r == c) {
          re += -w * w * mass + stiffness + pto.stiffness[r];
          im += w * pto.damping[r];
        }
        system(r, c) = Complex(re, im);
      }
    }
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
    const auto& factors = lu.matrixLU();
    double max_pivot = 0.0;
    double min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      max_pivot = std::max(max_pivot, std::abs(factors(i, i)));
      min_pivot = std::min(min_pivot, std::abs(factors(i, i)));
    }
    if (!(min_pivot > 1e-13 * max_pivot)) {
      std::ostringstream msg;
      msg << "singular equation of motion at omega=" << w;
      fail(ErrorKind::singular, msg.str());
    }
    Eigen::VectorXcd xi = lu.solve(coeffs.excitation[iw]);
    const double residual = (system * xi - coeffs.excitation[iw]).norm();
    const double scale = coeffs.excitation[iw].norm();
    if (!(residual <= 1e-9 * scale) && scale > 0.0) {
      std::ostringstream msg;
      msg << "motion solve residual " << residual << " exceeds bound at omega="
          << w;
      fail(ErrorKind::numerical, msg.str());
    }
    out.motion.push_back(std::move(xi));
  }
  return out;
}

RegularWavePower regular_wave_power(const FarmResponse& response,
                                    const PtoSettings& pto) {
  const std::size_t nw = response.grid.size();
  require(response.motion.size() == nw, ErrorKind::dimension,
          "response does not match its grid");
  RegularWavePower out;
  out.per_device.reserve(nw);
  out.total.reserve(nw);
  for (std::size_t iw = 0; iw < nw; ++iw) {
    const auto& xi = response.motion[iw];
    require(static_cast<std::size_t>(xi.size()) == pto.size(),
            ErrorKind::dimension, "PTO settings do not match response");
    const double w = response.grid[iw];
    Eigen::VectorXd p(xi.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      p(i) = 0.5 * w * w * pto.damping[i] * std::norm(xi(i));
      total += p(i);
    }
    out.per_device.push_back(std::move(p));
    out.total.push_back(total);
  }
  return out;
}

}  // namespace wecfarm
