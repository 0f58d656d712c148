#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wecfarm {

using Complex = std::complex<double>;

struct Environment {
  double water_depth = 50.0;      // m
  double gravity = 9.81;          // m/s^2
  double water_density = 1025.0;  // kg/m^3

  void validate() const;
  bool operator==(const Environment&) const = default;
};

// Homogeneous heaving cylinder: radius and radius-to-draft ratio.
class WecGeometry {
 public:
  static constexpr double kMinRadius = 0.5;
  static constexpr double kMaxRadius = 10.0;
  static constexpr double kMinSlenderness = 0.2;
  static constexpr double kMaxSlenderness = 10.0;
  static constexpr double kMinDraft = 0.5;
  static constexpr double kMaxDraft = 20.0;

  WecGeometry(double radius, double slenderness);

  static WecGeometry from_draft(double radius, double draft);

  double radius() const { return radius_; }
  double slenderness() const { return slenderness_; }
  double draft() const { return radius_ / slenderness_; }
  double volume() const;

  bool operator==(const WecGeometry&) const = default;

 private:
  double radius_;
  double slenderness_;
};

// Angular frequencies with trapezoid quadrature weights.
class FrequencyGrid {
 public:
  static constexpr double kDefaultMin = 0.3;
  static constexpr double kDefaultMax = 2.0;
  static constexpr int kDefaultCount = 200;

  FrequencyGrid() = default;
  explicit FrequencyGrid(std::vector<double> values);
  static FrequencyGrid uniform(double lo = kDefaultMin, double hi = kDefaultMax,
                               int count = kDefaultCount);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const FrequencyGrid& other) const {
    return values_ == other.values_;
  }

 private:
  std::vector<double> values_;
  std::vector<double> spacing_;
};

struct WaveNumber {
  double k;               // 1/m
  double group_velocity;  // m/s
};

// Finite-depth dispersion relation omega^2 = g k tanh(k h).
WaveNumber solve_dispersion(double omega, const Environment& env);
std::vector<WaveNumber> solve_dispersion(const FrequencyGrid& grid,
                                         const Environment& env);

struct SingleBodyCoefficients {
  FrequencyGrid grid;
  std::vector<double> added_mass;   // kg
  std::vector<double> damping;      // Ns/m
  std::vector<Complex> excitation;  // N per m wave amplitude, body at origin
};

// Two identical bodies: body 1 at the pair origin, body 2 at
// separation * (cos heading, sin heading). Excitation is phase referenced to
// body 1.
struct PairCoefficients {
  FrequencyGrid grid;
  double separation = 0.0;
  double heading = 0.0;
  std::vector<Eigen::Matrix2d> added_mass;
  std::vector<Eigen::Matrix2d> damping;
  std::vector<Eigen::Vector2cd> excitation;
};

class CoefficientProvider {
 public:
  virtual ~CoefficientProvider() = default;

  virtual std::string name() const = 0;

  virtual SingleBodyCoefficients single(const WecGeometry& geom,
                                        const FrequencyGrid& grid,
                                        const Environment& env) const = 0;

  virtual PairCoefficients pair(const WecGeometry& geom, double separation,
                                double heading, const FrequencyGrid& grid,
                                const Environment& env) const = 0;
};

// Constants of the semi-analytic reference model.
struct ReferenceModel {
  double interaction_strength = 0.25;  // epsilon
  double decay_radii = 20.0;           // l0 = decay_radii * R
  double added_mass_base = 0.5;
  double added_mass_swing = 0.3;
};

// Closed-form provider that stands in for a multiple-scattering solver.
//
//   |Fe|   = rho g pi R^2 exp(-k D) cosh(k(h-D))/cosh(k h) * 2 J1(kR)/(kR)
//   B      = k |Fe|^2 / (4 rho g vg)                      (Haskind)
//   A      = rho pi R^2 D (0.5 + 0.3 exp(-k R))
//   B12    = B J0(k l),          omega A12 = -B Y0(k l)
//   dB11   = B eps J0(2kl) e^{-l/l0},  omega dA11 = -B eps Y0(2kl) e^{-l/l0}
//   Fe_j   = Fe exp(-i k x_j) (1 + eps sqrt(2/(pi k l)) exp(i(k l + pi/4)))
class ReferenceProvider final : public CoefficientProvider {
 public:
  explicit ReferenceProvider(ReferenceModel model = {}) : model_(model) {}

  std::string name() const override { return "reference"; }

  SingleBodyCoefficients single(const WecGeometry& geom,
                                const FrequencyGrid& grid,
                                const Environment& env) const override;

  PairCoefficients pair(const WecGeometry& geom, double separation,
                        double heading, const FrequencyGrid& grid,
                        const Environment& env) const override;

  const ReferenceModel& model() const { return model_; }

 private:
  ReferenceModel model_;
};

// Human-readable record of every constant used by the reference model.
std::string model_ledger(const ReferenceModel& model, const Environment& env,
                         const FrequencyGrid& grid);

}  // namespace wecfarm
