#pragma once

#include <vector>

#include <Eigen/Core>

#include "wecfarm/hydro.hpp"
#include "wecfarm/mbe.hpp"

namespace wecfarm {

// Linear spring-damper power take-off, one entry per device.
struct PtoSettings {
  enum class Mode { farm_uniform, per_device };

  static constexpr double kMinStiffness = -5e5;
  static constexpr double kMaxStiffness = 5e5;
  static constexpr double kMinDamping = 0.0;
  static constexpr double kMaxDamping = 5e5;

  std::vector<double> stiffness;  // N/m
  std::vector<double> damping;    // Ns/m
  Mode mode = Mode::farm_uniform;

  static PtoSettings uniform(std::size_t devices, double stiffness,
                             double damping);
  static PtoSettings per_device(std::vector<double> stiffness,
                                std::vector<double> damping);

  std::size_t size() const { return stiffness.size(); }
  // Single-device settings for device i, used for isolated evaluations.
  PtoSettings isolated(std::size_t i) const;
  void validate() const;
};

struct FarmResponse {
  FrequencyGrid grid;
  std::vector<Eigen::VectorXcd> motion;  // m per m of wave amplitude
};

struct RegularWavePower {
  std::vector<Eigen::VectorXd> per_device;  // W per m^2 of amplitude
  std::vector<double> total;
};

double body_mass(const WecGeometry& geom, const Environment& env);
double hydrostatic_coefficient(const WecGeometry& geom, const Environment& env);

// Solves [-w^2 (M + A) + G + K_pto + i w (B + B_pto)] xi = Fe at every
// frequency with partial-pivot LU.
FarmResponse solve_motion(const FarmCoefficients& coeffs,
                          const WecGeometry& geom, const PtoSettings& pto,
                          const Environment& env);

// p_i(w) = 1/2 w^2 B_pto,i |xi_i(w)|^2
RegularWavePower regular_wave_power(const FarmResponse& response,
                                    const PtoSettings& pto);

}  // namespace wecfarm
