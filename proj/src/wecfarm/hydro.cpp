#include "wecfarm/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wecfarm/bessel.hpp"
#include "wecfarm/error.hpp"

namespace wecfarm {

void Environment::validate() const {
  require(water_depth > 0.0 && gravity > 0.0 && water_density > 0.0,
          ErrorKind::validation,
          "environment depth, gravity and density must be positive");
}

WecGeometry::WecGeometry(double radius, double slenderness)
    : radius_(radius), slenderness_(slenderness) {
  std::ostringstream msg;
  if (!(radius >= kMinRadius && radius <= kMaxRadius)) {
    msg << "radius " << radius << " outside [" << kMinRadius << ", "
        << kMaxRadius << "]";
    fail(ErrorKind::geometry, msg.str());
  }
  if (!(slenderness >= kMinSlenderness && slenderness <= kMaxSlenderness)) {
    msg << "slenderness " << slenderness << " outside [" << kMinSlenderness
        << ", " << kMaxSlenderness << "]";
    fail(ErrorKind::geometry, msg.str());
  }
  const double d = draft();
  // relative slack so radius/(radius/draft) round trips at the bounds
  if (!(d >= kMinDraft * (1 - 1e-12) && d <= kMaxDraft * (1 + 1e-12))) {
    msg << "draft " << d << " outside [" << kMinDraft << ", " << kMaxDraft
        << "]";
    fail(ErrorKind::geometry, msg.str());
  }
}

WecGeometry WecGeometry::from_draft(double radius, double draft) {
  require(draft > 0.0, ErrorKind::geometry, "draft must be positive");
  return WecGeometry(radius, radius / draft);
}

double WecGeometry::volume() const {
  return std::numbers::pi * radius_ * radius_ * draft();
}

FrequencyGrid::FrequencyGrid(std::vector<double> values)
    : values_(std::move(values)) {
  require(!values_.empty(), ErrorKind::validation, "empty frequency grid");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    require(values_[i] > 0.0 && std::isfinite(values_[i]),
            ErrorKind::validation, "frequencies must be positive and finite");
    if (i > 0) {
      require(values_[i] > values_[i - 1], ErrorKind::validation,
              "frequency grid must be strictly increasing");
    }
  }
  const std::size_t n = values_.size();
  spacing_.assign(n, 0.0);
  if (n == 1) {
    spacing_[0] = 0.0;
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? values_[i] - values_[i - 1] : 0.0;
    const double right = i + 1 < n ? values_[i + 1] - values_[i] : 0.0;
    spacing_[i] = 0.5 * (left + right);
  }
}

FrequencyGrid FrequencyGrid::uniform(double lo, double hi, int count) {
  require(count >= 2 && hi > lo && lo > 0.0, ErrorKind::validation,
          "uniform grid needs count >= 2 and 0 < lo < hi");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  }
  return FrequencyGrid(std::move(v));
}

WaveNumber solve_dispersion(double omega, const Environment& env) {
  require(omega > 0.0 && std::isfinite(omega), ErrorKind::validation,
          "dispersion requires a positive frequency");
  env.validate();
  const double g = env.gravity;
  const double h = env.water_depth;
  const double w2 = omega * omega;
  auto residual = [&](double k) { return g * k * std::tanh(k * h) - w2; };

  // tanh(kh) <= min(1, kh) gives both lower bounds
  double lo = std::max(w2 / g, omega / std::sqrt(g * h));
  double hi = 2.0 * lo;
  while (residual(hi) < 0.0) hi *= 2.0;

  double k = std::clamp(w2 / g, lo, hi);
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    const double f = residual(k);
    if (std::fabs(f) <= 1e-14 * w2) {
      converged = true;
      break;
    }
    if (f < 0.0) {
      lo = k;
    } else {
      hi = k;
    }
    const double t = std::tanh(k * h);
    const double df = g * t + g * k * h * (1.0 - t * t);
    double next = k - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      k = next;
      converged = true;
      break;
    }
    k = next;
  }
  if (!converged || std::fabs(residual(k)) >= 1e-10 * w2) {
    std::ostringstream msg;
    msg << "dispersion solve did not converge at omega=" << omega;
    fail(ErrorKind::numerical, msg.str());
  }
  const double kh2 = 2.0 * k * h;
  const double depth_term = kh2 > 700.0 ? 0.0 : kh2 / std::sinh(kh2);
  return {k, 0.5 * omega / k * (1.0 + depth_term)};
}

std::vector<WaveNumber> solve_dispersion(const FrequencyGrid& grid,
                                         const Environment& env) {
  std::vector<WaveNumber> out;
  out.reserve(grid.size());
  for (double w : grid.values()) out.push_back(solve_dispersion(w, env));
  return out;
}

SingleBodyCoefficients ReferenceProvider::single(const WecGeometry& geom,
                                                 const FrequencyGrid& grid,
                                                 const Environment& env) const {
  env.validate();
  const double r = geom.radius();
  const double d = geom.draft();
  const double h = env.water_depth;
  const double rho = env.water_density;
  const double g = env.gravity;
  require(d < h, ErrorKind::geometry, "draft must be smaller than water depth");

  const double area = std::numbers::pi * r * r;
  const auto waves = solve_dispersion(grid, env);

  SingleBodyCoefficients out{grid, {}, {}, {}};
  out.added_mass.resize(grid.size());
  out.damping.resize(grid.size());
  out.excitation.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double k = waves[i].k;
    const double kr = k * r;
    const double chi = kr < 1e-8 ? 1.0 : 2.0 * bessel::j1(kr) / kr;
    const double depth_ratio =
        (std::exp(-k * d) + std::exp(-k * (2.0 * h - d))) /
        (1.0 + std::exp(-2.0 * k * h));
    const double force = rho * g * area * std::exp(-k * d) * depth_ratio * chi;
    out.excitation[i] = Complex(force, 0.0);
    out.damping[i] =
        k * force * force / (4.0 * rho * g * waves[i].group_velocity);
    out.added_mass[i] = rho * area * d *
                        (model_.added_mass_base +
                         model_.added_mass_swing * std::exp(-kr));
  }
  return out;
}

PairCoefficients ReferenceProvider::pair(const WecGeometry& geom,
                                         double separation, double heading,
                                         const FrequencyGrid& grid,
                                         const Environment& env) const {
  if (!(separation > 2.0 * geom.radius()) || !std::isfinite(separation)) {
    std::ostringstream msg;
    msg << "bodies overlap: separation " << separation << " <= 2R = "
        << 2.0 * geom.radius();
    fail(ErrorKind::geometry, msg.str());
  }
  require(std::isfinite(heading), ErrorKind::validation,
          "pair heading must be finite");

  const SingleBodyCoefficients s = single(geom, grid, env);
  const auto waves = solve_dispersion(grid, env);
  const double eps = model_.interaction_strength;
  const double decay =
      std::exp(-separation / (model_.decay_radii * geom.radius()));
  const double x2 = separation * std::cos(heading);

  PairCoefficients out;
  out.grid = grid;
  out.separation = separation;
  out.heading = heading;
  out.added_mass.resize(grid.size());
  out.damping.resize(grid.size());
  out.excitation.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid[i];
    const double k = waves[i].k;
    const double kl = k * separation;
    const double b = s.damping[i];

    const double b12 = b * bessel::j0(kl);
    const double a12 = -b * bessel::y0(kl) / w;
    const double b11 = s.damping[i] + b * eps * bessel::j0(2.0 * kl) * decay;
    const double a11 =
        s.added_mass[i] - b * eps * bessel::y0(2.0 * kl) * decay / w;
    out.damping[i] << b11, b12, b12, b11;
    out.added_mass[i] << a11, a12, a12, a11;

    const Complex scatter =
        1.0 + eps * std::sqrt(2.0 / (std::numbers::pi * kl)) *
                  std::polar(1.0, kl + std::numbers::pi / 4.0);
    const Complex f = s.excitation[i] * scatter;
    out.excitation[i] << f, f * std::polar(1.0, -k * x2);
  }
  return out;
}

std::string model_ledger(const ReferenceModel& model, const Environment& env,
                         const FrequencyGrid& grid) {
  std::ostringstream out;
  out.precision(17);
  out << "# wecfarm reference hydrodynamic model\n"
      << "schema: wecfarm.model-ledger.v1\n"
      << "water_depth_m: " << env.water_depth << "\n"
      << "gravity_m_s2: " << env.gravity << "\n"
      << "water_density_kg_m3: " << env.water_density << "\n"
      << "frequency_min_rad_s: " << grid.values().front() << "\n"
      << "frequency_max_rad_s: " << grid.values().back() << "\n"
      << "frequency_count: " << grid.size() << "\n"
      << "excitation: rho*g*pi*R^2*exp(-k*D)*cosh(k*(h-D))/cosh(k*h)"
         "*2*J1(kR)/(kR), phase 0 at body centre\n"
      << "damping: k*|Fe|^2/(4*rho*g*vg)\n"
      << "added_mass: rho*pi*R^2*D*(" << model.added_mass_base << " + "
      << model.added_mass_swing << "*exp(-k*R))\n"
      << "pair_cross_damping: B*J0(k*l)\n"
      << "pair_cross_added_mass: -B*Y0(k*l)/omega\n"
      << "pair_self_damping_delta: B*eps*J0(2*k*l)*exp(-l/l0)\n"
      << "pair_self_added_mass_delta: -B*eps*Y0(2*k*l)*exp(-l/l0)/omega\n"
      << "pair_excitation: Fe*exp(-i*k*x_j)*(1 + eps*sqrt(2/(pi*k*l))"
         "*exp(i*(k*l + pi/4)))\n"
      << "eps: " << model.interaction_strength << "\n"
      << "l0_over_R: " << model.decay_radii << "\n"
      << "dispersion: safeguarded Newton, initial guess omega^2/g, "
         "residual < 1e-10*omega^2\n"
      << "bessel_series_limit: " << bessel::kSeriesLimit << "\n";
  return out.str();
}

}  // namespace wecfarm
