#include "wecfarm/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "wecfarm/error.hpp"
#include "wecfarm/parallel.hpp"

namespace wecfarm {

namespace {

const double kPi = std::numbers::pi;

constexpr std::array<const char*, 10> kMapNames{"A",   "B",   "ReF", "ImF",  "A11",
                                                "B11", "A12", "B12", "ReF1", "ImF1"};

std::size_t map_index(MapId id) { return static_cast<std::size_t>(id); }

// sqrt(pi x / 2) exp(-i (x - pi/4)): removes the Hankel far-field factor.
Complex demodulation(double x) {
  return std::sqrt(kPi * x / 2.0) * std::polar(1.0, -(x - kPi / 4.0));
}

// Froude-Krylov attenuation of the wave field at the keel.
double depth_decay(const WaveNumber& wave, const WecGeometry& geom) {
  return std::exp(-wave.k * geom.draft());
}

double wrap_heading(double theta) {
  while (theta > kPi) theta -= 2.0 * kPi;
  while (theta < -kPi) theta += 2.0 * kPi;
  return theta;
}

bool lexicographic_less(const Eigen::MatrixXd& pool, std::size_t a, std::size_t b) {
  for (Eigen::Index c = 0; c < pool.cols(); ++c) {
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    if (pool(ia, c) != pool(ib, c)) return pool(ia, c) < pool(ib, c);
  }
  return false;
}

}  // namespace

Eigen::VectorXd network_features(const Eigen::VectorXd& x) {
  Eigen::VectorXd f = x;
  f(0) = std::log(x(0));
  f(1) = std::log(x(1));
  return f;
}

const char* map_name(MapId id) { return kMapNames[map_index(id)]; }

MapId map_from_name(const std::string& name) {
  for (MapId id : kAllMaps)
    if (name == map_name(id)) return id;
  fail(ErrorKind::config, "unknown surrogate map '" + name + "'");
}

bool is_pair_map(MapId id) { return map_index(id) >= 4; }

Eigen::VectorXd DesignSpace::lower(bool pair) const {
  Eigen::VectorXd lo(pair ? 4 : 2);
  lo(0) = radius_min;
  lo(1) = slenderness_min;
  if (pair) {
    lo(2) = 2.0 * radius_min + clearance;
    lo(3) = -kPi;
  }
  return lo;
}

Eigen::VectorXd DesignSpace::upper(bool pair) const {
  Eigen::VectorXd hi(pair ? 4 : 2);
  hi(0) = radius_max;
  hi(1) = slenderness_max;
  if (pair) {
    hi(2) = separation_max;
    hi(3) = kPi;
  }
  return hi;
}

bool DesignSpace::inside(const Eigen::VectorXd& x) const {
  const bool pair = x.size() == 4;
  const Eigen::VectorXd lo = lower(pair), hi = upper(pair);
  return ((x.array() >= lo.array()) && (x.array() <= hi.array())).all();
}

bool DesignSpace::feasible(const Eigen::VectorXd& x) const {
  if (!inside(x)) return false;
  const double draft = x(0) / x(1);
  if (draft < draft_min || draft > draft_max) return false;
  if (x.size() == 4 && x(2) < 2.0 * x(0) + clearance) return false;
  return true;
}

void DesignSpace::validate() const {
  require(radius_min > 0 && radius_max > radius_min && slenderness_min > 0 &&
              slenderness_max > slenderness_min && draft_min > 0 &&
              draft_max > draft_min && clearance >= 0 &&
              separation_max > 2.0 * radius_min + clearance,
          ErrorKind::config, "surrogate design space bounds are inconsistent");
}

TargetCodec::TargetCodec(const FrequencyGrid& grid, const Environment& env)
    : grid_(grid), env_(env), waves_(solve_dispersion(grid, env)) {}

std::array<Eigen::VectorXd, 4> TargetCodec::encode_single(
    const WecGeometry& geom, const SingleBodyCoefficients& s) const {
  const std::size_t nw = grid_.size();
  require(s.added_mass.size() == nw, ErrorKind::dimension,
          "single-body coefficients do not match the codec grid");
  const double r = geom.radius();
  const double rho = env_.water_density;
  const double mass_scale = rho * kPi * r * r * geom.draft();
  const double force_scale = rho * env_.gravity * kPi * r * r;
  std::array<Eigen::VectorXd, 4> t;
  for (auto& v : t) v.resize(nw);
  for (std::size_t i = 0; i < nw; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t[0](k) = s.added_mass[i] / mass_scale;
    const double fk = depth_decay(waves_[i], geom);
    t[1](k) = s.damping[i] / (rho * kPi * r * r * r * grid_[i] * fk * fk);
    t[2](k) = s.excitation[i].real() / (force_scale * fk);
    t[3](k) = s.excitation[i].imag() / (force_scale * fk);
  }
  return t;
}

std::array<Eigen::VectorXd, 6> TargetCodec::encode_pair(
    const WecGeometry& geom, const SingleBodyCoefficients& s,
    const PairCoefficients& p) const {
  const std::size_t nw = grid_.size();
  require(s.added_mass.size() == nw && p.added_mass.size() == nw,
          ErrorKind::dimension, "pair coefficients do not match the codec grid");
  const double r = geom.radius();
  const double rho = env_.water_density;
  const double force_scale = rho * env_.gravity * kPi * r * r;
  std::array<Eigen::VectorXd, 6> t;
  for (auto& v : t) v.resize(nw);
  for (std::size_t i = 0; i < nw; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double w = grid_[i];
    const double kl = waves_[i].k * p.separation;
    const double fk = depth_decay(waves_[i], geom);
    const double z_scale = rho * kPi * r * r * r * w * fk * fk;
    const Complex dz11((p.damping[i](0, 0) - s.damping[i]),
                       -w * (p.added_mass[i](0, 0) - s.added_mass[i]));
    const Complex z12(p.damping[i](0, 1), -w * p.added_mass[i](0, 1));
    const Complex self = dz11 / z_scale * demodulation(2.0 * kl);
    const Complex cross = z12 / z_scale * demodulation(kl);
    const Complex f = (p.excitation[i](0) - s.excitation[i]) / (force_scale * fk) *
                      std::sqrt(kPi * kl / 2.0) * std::polar(1.0, -(kl + kPi / 4.0));
    t[0](k) = self.imag();
    t[1](k) = self.real();
    t[2](k) = cross.imag();
    t[3](k) = cross.real();
    t[4](k) = f.real();
    t[5](k) = f.imag();
  }
  return t;
}

SingleBodyCoefficients TargetCodec::decode_single(
    const WecGeometry& geom, const std::array<Eigen::VectorXd, 4>& t) const {
  const std::size_t nw = grid_.size();
  for (const auto& v : t)
    require(static_cast<std::size_t>(v.size()) == nw, ErrorKind::dimension,
            "single-body targets do not match the codec grid");
  const double r = geom.radius();
  const double rho = env_.water_density;
  const double mass_scale = rho * kPi * r * r * geom.draft();
  const double force_scale = rho * env_.gravity * kPi * r * r;
  SingleBodyCoefficients s;
  s.grid = grid_;
  for (std::size_t i = 0; i < nw; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    s.added_mass.push_back(t[0](k) * mass_scale);
    const double fk = depth_decay(waves_[i], geom);
    s.damping.push_back(t[1](k) * rho * kPi * r * r * r * grid_[i] * fk * fk);
    s.excitation.emplace_back(t[2](k) * force_scale * fk, t[3](k) * force_scale * fk);
  }
  return s;
}

TargetCodec::PairBody1 TargetCodec::decode_pair(
    const WecGeometry& geom, const SingleBodyCoefficients& s, double separation,
    const std::array<Eigen::VectorXd, 6>& t) const {
  const std::size_t nw = grid_.size();
  const double r = geom.radius();
  const double rho = env_.water_density;
  const double force_scale = rho * env_.gravity * kPi * r * r;
  PairBody1 out;
  for (std::size_t i = 0; i < nw; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double w = grid_[i];
    const double kl = waves_[i].k * separation;
    const double fk = depth_decay(waves_[i], geom);
    const double z_scale = rho * kPi * r * r * r * w * fk * fk;
    const Complex dz11 = Complex(t[1](k), t[0](k)) / demodulation(2.0 * kl) * z_scale;
    const Complex z12 = Complex(t[3](k), t[2](k)) / demodulation(kl) * z_scale;
    const Complex df = Complex(t[4](k), t[5](k)) * force_scale * fk /
                       (std::sqrt(kPi * kl / 2.0) * std::polar(1.0, -(kl + kPi / 4.0)));
    out.self_damping.push_back(s.damping[i] + dz11.real());
    out.self_added_mass.push_back(s.added_mass[i] - dz11.imag() / w);
    out.cross_damping.push_back(z12.real());
    out.cross_added_mass.push_back(-z12.imag() / w);
    out.excitation.push_back(s.excitation[i] + df);
  }
  return out;
}

Labeler::Labeler(const CoefficientProvider& oracle, const FrequencyGrid& grid,
                 const Environment& env)
    : oracle_(oracle), codec_(grid, env) {}

std::vector<Eigen::VectorXd> Labeler::label_all(const Eigen::VectorXd& x) const {
  require(x.size() == 2 || x.size() == 4, ErrorKind::dimension,
          "design-space points have 2 (single) or 4 (pair) coordinates");
  const WecGeometry geom(x(0), x(1));
  const auto s = oracle_.single(geom, codec_.grid(), codec_.env());
  if (x.size() == 2) {
    const auto t = codec_.encode_single(geom, s);
    return {t.begin(), t.end()};
  }
  const auto p = oracle_.pair(geom, x(2), x(3), codec_.grid(), codec_.env());
  const auto t = codec_.encode_pair(geom, s, p);
  return {t.begin(), t.end()};
}

Eigen::VectorXd Labeler::label(MapId id, const Eigen::VectorXd& x) const {
  require(x.size() == map_input_dim(id), ErrorKind::dimension,
          std::string("wrong input dimension for map ") + map_name(id));
  const auto all = label_all(x);
  return all[map_index(id) - (is_pair_map(id) ? 4 : 0)];
}

void Dataset::append(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (inputs.rows() == 0) {
    inputs.resize(0, x.size());
    outputs.resize(0, y.size());
  }
  require(x.size() == inputs.cols() && y.size() == outputs.cols(),
          ErrorKind::dimension, "sample does not match dataset dimensions");
  inputs.conservativeResize(inputs.rows() + 1, Eigen::NoChange);
  outputs.conservativeResize(outputs.rows() + 1, Eigen::NoChange);
  inputs.row(inputs.rows() - 1) = x.transpose();
  outputs.row(outputs.rows() - 1) = y.transpose();
}

bool Dataset::contains(const Eigen::VectorXd& x) const {
  if (inputs.cols() != x.size()) return false;
  for (Eigen::Index r = 0; r < inputs.rows(); ++r)
    if (inputs.row(r) == x.transpose()) return true;
  return false;
}

Dataset make_dataset(MapId id, const Eigen::MatrixXd& inputs, const Labeler& labeler,
                     unsigned threads) {
  require(inputs.cols() == map_input_dim(id), ErrorKind::dimension,
          std::string("wrong input dimension for map ") + map_name(id));
  std::vector<Eigen::VectorXd> labels(static_cast<std::size_t>(inputs.rows()));
  parallel_for(labels.size(), threads, [&](std::size_t i) {
    labels[i] = labeler.label(id, inputs.row(static_cast<Eigen::Index>(i)).transpose());
  });
  Dataset d;
  d.target = id;
  d.inputs = inputs;
  d.outputs.resize(inputs.rows(), labels.empty() ? 0 : labels.front().size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    d.outputs.row(static_cast<Eigen::Index>(i)) = labels[i].transpose();
  return d;
}

Eigen::VectorXd AffineScaler::apply(const Eigen::VectorXd& x) const {
  return ((x - offset).array() / scale.array()).matrix();
}

Eigen::VectorXd AffineScaler::invert(const Eigen::VectorXd& z) const {
  return (z.array() * scale.array()).matrix() + offset;
}

void CommitteeConfig::validate() const {
  require(members >= 3, ErrorKind::config, "committee needs at least 3 members");
  require(bootstrap > 0.0 && bootstrap <= 1.0, ErrorKind::config,
          "bootstrap fraction must lie in (0, 1]");
  require(!hidden.empty(), ErrorKind::config, "network needs a hidden layer");
  for (int h : hidden) require(h > 0, ErrorKind::config, "hidden layer width must be positive");
  require(sgd.epochs >= 1 && sgd.batch >= 1 && sgd.learning_rate > 0.0 &&
              sgd.momentum >= 0.0 && sgd.momentum < 1.0,
          ErrorKind::config, "invalid SGD settings");
  require(min_samples >= 1, ErrorKind::config, "minimum sample count must be positive");
}

namespace {

Eigen::MatrixXd scaled_inputs(const AffineScaler& s, const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd out(rows.cols(), rows.rows());
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    out.col(r) = s.apply(network_features(rows.row(r).transpose()));
  return out;
}

// Trains member m on its subsample for the given round.
double fit_member(Mlp& net, const Committee& c, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& y, std::size_t m, int round, int epochs) {
  Rng rng(derive_seed(c.config.seed, 100 + m, static_cast<std::uint64_t>(round)));
  const auto n = static_cast<std::size_t>(x.cols());
  const std::size_t take =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(c.config.bootstrap * n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  Eigen::MatrixXd xs(x.rows(), take), ys(y.rows(), take);
  for (std::size_t j = 0; j < take; ++j) {
    xs.col(j) = x.col(idx[j]);
    ys.col(j) = y.col(idx[j]);
  }
  SgdConfig sgd = c.config.sgd;
  sgd.epochs = epochs;
  return train_mlp(net, xs, ys, sgd, rng);
}

void fit_all(Committee& c, const Dataset& data, int round, int epochs, unsigned threads) {
  const Eigen::MatrixXd x = scaled_inputs(c.input_scaler, data.inputs);
  Eigen::MatrixXd y(data.outputs.cols(), data.outputs.rows());
  for (Eigen::Index r = 0; r < data.outputs.rows(); ++r)
    y.col(r) = c.output_scaler.apply(data.outputs.row(r).transpose());
  c.member_mse.assign(c.members.size(), 0.0);
  parallel_for(c.members.size(), threads, [&](std::size_t m) {
    c.member_mse[m] = fit_member(c.members[m], c, x, y, m, round, epochs);
  });
  c.samples = data.size();
}

}  // namespace

Committee train_committee(const Dataset& data, const CommitteeConfig& config,
                          const DesignSpace& space, const FrequencyGrid& grid,
                          const Environment& env, unsigned threads) {
  config.validate();
  const bool pair = is_pair_map(data.target);
  require(data.inputs.cols() == map_input_dim(data.target), ErrorKind::dimension,
          std::string("dataset inputs do not match map ") + map_name(data.target));
  require(static_cast<std::size_t>(data.outputs.cols()) == grid.size() &&
              data.outputs.rows() == data.inputs.rows(),
          ErrorKind::dimension, "dataset outputs must have one value per frequency");
  if (data.size() < config.min_samples) {
    std::ostringstream msg;
    msg << "map " << map_name(data.target) << " has " << data.size()
        << " samples, need at least " << config.min_samples;
    fail(ErrorKind::validation, msg.str());
  }
  require(data.outputs.allFinite() && data.inputs.allFinite(), ErrorKind::numerical,
          "dataset contains non-finite values");

  Committee c;
  c.target = data.target;
  c.config = config;
  c.space = space;
  c.grid = grid;
  c.env = env;
  const Eigen::VectorXd lo = space.lower(pair), hi = space.upper(pair);
  const Eigen::VectorXd flo = network_features(lo), fhi = network_features(hi);
  c.input_scaler = {0.5 * (flo + fhi), 0.5 * (fhi - flo)};

  const Eigen::VectorXd mean = data.outputs.colwise().mean().transpose();
  Eigen::VectorXd sd(mean.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    const double var = (data.outputs.col(j).array() - mean(j)).square().mean();
    sd(j) = std::sqrt(var);
    if (!(sd(j) > 1e-12 * std::max(1.0, std::fabs(mean(j))))) {
      sd(j) = 1.0;
      ++c.zero_variance_outputs;
    }
  }
  c.output_scaler = {mean, sd};

  for (int m = 0; m < config.members; ++m) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(m), 0xc0ffee));
    c.members.emplace_back(map_input_dim(data.target), config.hidden,
                           static_cast<int>(grid.size()), rng);
  }
  fit_all(c, data, 0, config.sgd.epochs, threads);
  return c;
}

void retrain_committee(Committee& committee, const Dataset& data, int epochs,
                       unsigned threads) {
  require(data.target == committee.target, ErrorKind::validation,
          "dataset target does not match the committee");
  require(epochs >= 1, ErrorKind::validation, "retraining needs at least one epoch");
  committee.rounds += 1;
  fit_all(committee, data, committee.rounds, epochs, threads);
}

void Committee::predict_batch(const Eigen::MatrixXd& xs, Eigen::MatrixXd* mean,
                              Eigen::VectorXd* disagreement) const {
  require(xs.cols() == map_input_dim(target), ErrorKind::dimension,
          std::string("wrong input dimension for map ") + map_name(target));
  const Eigen::MatrixXd z = scaled_inputs(input_scaler, xs);
  std::vector<Eigen::MatrixXd> outs;
  outs.reserve(members.size());
  for (const auto& m : members) outs.push_back(m.forward(z));
  Eigen::MatrixXd avg = outs.front();
  for (std::size_t m = 1; m < outs.size(); ++m) avg += outs[m];
  avg /= static_cast<double>(outs.size());
  if (disagreement) {
    // shifted by the first member so identical members give exactly zero
    const double m = static_cast<double>(outs.size());
    Eigen::ArrayXXd s1 = Eigen::ArrayXXd::Zero(avg.rows(), avg.cols());
    Eigen::ArrayXXd s2 = s1;
    for (const auto& o : outs) {
      const Eigen::ArrayXXd d = o.array() - outs.front().array();
      s1 += d;
      s2 += d.square();
    }
    const Eigen::ArrayXXd var = (s2 / m - (s1 / m).square()).max(0.0);
    *disagreement = var.colwise().mean().transpose().matrix();
  }
  if (mean) {
    mean->resize(xs.rows(), avg.rows());
    for (Eigen::Index r = 0; r < xs.rows(); ++r)
      mean->row(r) = output_scaler.invert(avg.col(r)).transpose();
  }
}

Prediction Committee::predict(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd mean;
  Eigen::VectorXd dis;
  predict_batch(x.transpose(), &mean, &dis);
  Prediction p;
  p.mean = mean.row(0).transpose();
  p.disagreement = dis(0);
  p.extrapolated = !space.feasible(x);
  return p;
}

Eigen::VectorXd Committee::predict_mean(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd mean;
  predict_batch(x.transpose(), &mean, nullptr);
  return mean.row(0).transpose();
}

Eigen::MatrixXd latin_hypercube(const DesignSpace& space, bool pair, std::size_t n,
                                Rng& rng) {
  const Eigen::VectorXd lo = space.lower(pair), hi = space.upper(pair);
  const auto d = lo.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  std::size_t filled = 0;
  for (int attempt = 0; filled < n; ++attempt) {
    require(attempt < 1000, ErrorKind::numerical,
            "could not fill the sample pool with feasible points");
    const std::size_t batch = std::max<std::size_t>(n - filled, 16);
    std::vector<std::vector<std::size_t>> perm(static_cast<std::size_t>(d));
    for (auto& p : perm) {
      p.resize(batch);
      std::iota(p.begin(), p.end(), 0);
      for (std::size_t i = batch - 1; i > 0; --i) std::swap(p[i], p[rng.index(i + 1)]);
    }
    for (std::size_t i = 0; i < batch && filled < n; ++i) {
      Eigen::VectorXd x(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double u = (static_cast<double>(perm[j][i]) + rng.uniform()) /
                         static_cast<double>(batch);
        x(j) = lo(j) + u * (hi(j) - lo(j));
      }
      if (!space.feasible(x)) continue;
      out.row(static_cast<Eigen::Index>(filled++)) = x.transpose();
    }
  }
  return out;
}

void pin_to_faces(const DesignSpace& space, Eigen::MatrixXd& pts, double fraction, Rng& rng) {
  const bool pair = pts.cols() == 4;
  const Eigen::VectorXd lo = space.lower(pair), hi = space.upper(pair);
  const auto n = static_cast<std::size_t>(pts.rows());
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < count && i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rng.index(n));
    // one extra choice for the draft limits, which cut the (R, R/D) box diagonally
    const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pts.cols()) + 1));
    const bool low = rng.uniform() < 0.5;
    Eigen::VectorXd x = pts.row(r).transpose();
    if (j == pts.cols()) {
      x(1) = x(0) / (low ? space.draft_max : space.draft_min);
    } else {
      x(j) = low ? lo(j) : hi(j);
    }
    if (space.feasible(x)) pts.row(r) = x.transpose();
  }
}

Eigen::MatrixXd feasible_vertices(const DesignSpace& space, bool pair) {
  // corners of the (R, R/D) polygon: box corners plus the draft limits
  // meeting the box edges
  std::vector<Eigen::Vector2d> cand;
  for (double r : {space.radius_min, space.radius_max})
    for (double a : {space.slenderness_min, space.slenderness_max}) cand.emplace_back(r, a);
  for (double d : {space.draft_min, space.draft_max}) {
    for (double r : {space.radius_min, space.radius_max}) cand.emplace_back(r, r / d);
    for (double a : {space.slenderness_min, space.slenderness_max}) cand.emplace_back(a * d, a);
  }
  std::vector<Eigen::VectorXd> out;
  const double tol = 1e-12;
  for (const auto& c : cand) {
    Eigen::VectorXd x = c;
    const double draft = x(0) / x(1);
    if (x(0) < space.radius_min - tol || x(0) > space.radius_max + tol ||
        x(1) < space.slenderness_min - tol || x(1) > space.slenderness_max + tol ||
        draft < space.draft_min * (1 - tol) || draft > space.draft_max * (1 + tol))
      continue;
    x(0) = std::clamp(x(0), space.radius_min, space.radius_max);
    x(1) = std::clamp(x(1), space.slenderness_min, space.slenderness_max);
    // nudge inside the draft limits against rounding in R / (R/D)
    if (!space.feasible(x)) x(1) = std::nextafter(x(1), x(0) / x(1) > space.draft_max ? 1e9 : 0.0);
    if (!space.feasible(x)) continue;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Eigen::VectorXd& y) {
      return (y.head<2>() - x).cwiseAbs().maxCoeff() < 1e-9;
    });
    if (!seen) out.push_back(x);
  }
  std::vector<Eigen::VectorXd> rows;
  for (const auto& v : out) {
    if (!pair) {
      rows.push_back(v);
      continue;
    }
    for (double l : {2.0 * v(0) + space.clearance, space.separation_max})
      for (double th : {-kPi, kPi}) {
        Eigen::VectorXd x(4);
        x << v(0), v(1), l, th;
        rows.push_back(x);
      }
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), pair ? 4 : 2);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

std::vector<std::size_t> select_queries(const Eigen::VectorXd& disagreement,
                                        const Eigen::MatrixXd& pool, std::size_t k,
                                        const Dataset* exclude) {
  const auto n = static_cast<std::size_t>(pool.rows());
  require(n > 0, ErrorKind::validation, "query pool is empty");
  require(static_cast<std::size_t>(disagreement.size()) == n, ErrorKind::dimension,
          "disagreement and pool sizes differ");
  require(k <= n, ErrorKind::validation, "query batch larger than the pool");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = disagreement(static_cast<Eigen::Index>(a));
    const double db = disagreement(static_cast<Eigen::Index>(b));
    if (da != db) return da > db;
    if (lexicographic_less(pool, a, b)) return true;
    if (lexicographic_less(pool, b, a)) return false;
    return a < b;
  });
  std::vector<std::size_t> chosen;
  for (std::size_t i : order) {
    if (chosen.size() == k) break;
    const Eigen::VectorXd x = pool.row(static_cast<Eigen::Index>(i)).transpose();
    if (exclude && exclude->contains(x)) continue;
    bool dup = false;
    for (std::size_t c : chosen)
      dup |= pool.row(static_cast<Eigen::Index>(c)) == pool.row(static_cast<Eigen::Index>(i));
    if (!dup) chosen.push_back(i);
  }
  return chosen;
}

QbcRoundReport qbc_round(Committee& committee, Dataset& data, const Eigen::MatrixXd& pool,
                         std::size_t k, const Labeler& labeler, int epochs,
                         unsigned threads) {
  Eigen::VectorXd dis;
  committee.predict_batch(pool, nullptr, &dis);
  const auto chosen = select_queries(dis, pool, k, &data);
  std::vector<Eigen::VectorXd> labels(chosen.size());
  parallel_for(chosen.size(), threads, [&](std::size_t i) {
    labels[i] = labeler.label(committee.target,
                              pool.row(static_cast<Eigen::Index>(chosen[i])).transpose());
  });
  for (std::size_t i = 0; i < chosen.size(); ++i)
    data.append(pool.row(static_cast<Eigen::Index>(chosen[i])).transpose(), labels[i]);
  retrain_committee(committee, data, epochs, threads);
  QbcRoundReport rep;
  rep.round = committee.rounds;
  rep.dataset_size = data.size();
  rep.max_disagreement = dis.maxCoeff();
  rep.mean_disagreement = dis.mean();
  return rep;
}

Eigen::MatrixXd tensor_grid(const DesignSpace& space, bool pair, int per_axis) {
  require(per_axis >= 2, ErrorKind::validation, "validation grid needs >= 2 points per axis");
  const Eigen::VectorXd lo = space.lower(pair), hi = space.upper(pair);
  const auto d = lo.size();
  std::size_t total = 1;
  for (Eigen::Index j = 0; j < d; ++j) total *= static_cast<std::size_t>(per_axis);
  std::vector<Eigen::VectorXd> pts;
  for (std::size_t flat = 0; flat < total; ++flat) {
    Eigen::VectorXd x(d);
    std::size_t rem = flat;
    for (Eigen::Index j = d - 1; j >= 0; --j) {
      const auto i = static_cast<int>(rem % static_cast<std::size_t>(per_axis));
      rem /= static_cast<std::size_t>(per_axis);
      x(j) = i == per_axis - 1 ? hi(j) : lo(j) + (hi(j) - lo(j)) * i / (per_axis - 1);
    }
    if (space.feasible(x)) pts.push_back(x);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return out;
}

MseMap validate_on_grid(const MapModel& model, MapId id, const Eigen::MatrixXd& points,
                        const Eigen::MatrixXd& labels, const Eigen::VectorXd& scale) {
  require(labels.rows() == points.rows() && labels.cols() == scale.size(),
          ErrorKind::dimension, "validation labels do not match the grid");
  MseMap out;
  out.target = id;
  out.points = points;
  out.mse.resize(points.rows());
  const auto* committee = dynamic_cast<const Committee*>(&model);
  Eigen::MatrixXd pred;
  if (committee) committee->predict_batch(points, &pred, nullptr);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const Eigen::VectorXd p =
        committee ? Eigen::VectorXd(pred.row(r).transpose())
                  : model.predict_mean(points.row(r).transpose());
    out.mse(r) = ((p - labels.row(r).transpose()).array() / scale.array()).square().mean();
  }
  if (out.mse.size() > 0) {
    out.max = out.mse.maxCoeff();
    out.mean = out.mse.mean();
    std::vector<double> v(out.mse.data(), out.mse.data() + out.mse.size());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    out.median = v[v.size() / 2];
  }
  return out;
}

MseMap validate_on_grid(const MapModel& model, MapId id, const Labeler& labeler,
                        const Eigen::MatrixXd& points, const Eigen::VectorXd& scale,
                        unsigned threads) {
  const Dataset d = make_dataset(id, points, labeler, threads);
  return validate_on_grid(model, id, points, d.outputs, scale);
}

SurrogateProvider::SurrogateProvider(CommitteeSet committees, bool haskind_projection)
    : committees_(std::move(committees)), haskind_(haskind_projection) {
  std::string missing;
  for (MapId id : kAllMaps) {
    auto it = committees_.find(id);
    if (it == committees_.end() || !it->second) {
      missing += std::string(missing.empty() ? "" : ", ") + map_name(id);
    } else {
      require(it->second->target == id, ErrorKind::config,
              std::string("committee stored under ") + map_name(id) + " targets " +
                  map_name(it->second->target));
    }
  }
  require(missing.empty(), ErrorKind::config, "surrogate is missing committees: " + missing);
  const Committee& first = at(MapId::A);
  grid_ = first.grid;
  env_ = first.env;
  for (MapId id : kAllMaps) {
    require(at(id).grid == grid_ && at(id).env == env_, ErrorKind::config,
            std::string("committee ") + map_name(id) +
                " was trained on a different frequency grid or environment");
  }
  codec_ = std::make_unique<TargetCodec>(grid_, env_);
}

void SurrogateProvider::check_grid(const FrequencyGrid& grid, const Environment& env) const {
  require(grid == grid_, ErrorKind::config,
          "surrogate queried on a frequency grid it was not trained on");
  require(env == env_, ErrorKind::config,
          "surrogate queried in an environment it was not trained on");
}

Eigen::VectorXd SurrogateProvider::eval(MapId id, const Eigen::VectorXd& x) const {
  if (!at(id).space.feasible(x)) ++extrapolations_;
  return at(id).predict_mean(x);
}

SingleBodyCoefficients SurrogateProvider::single(const WecGeometry& geom,
                                                 const FrequencyGrid& grid,
                                                 const Environment& env) const {
  check_grid(grid, env);
  Eigen::VectorXd x(2);
  x << geom.radius(), geom.slenderness();
  std::array<Eigen::VectorXd, 4> t{eval(MapId::A, x), eval(MapId::B, x),
                                   eval(MapId::ReF, x), eval(MapId::ImF, x)};
  SingleBodyCoefficients s = codec_->decode_single(geom, t);
  // radiation damping cannot be negative
  for (double& b : s.damping) b = std::max(b, 0.0);
  if (haskind_) {
    const auto waves = solve_dispersion(grid, env);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      s.damping[i] = waves[i].k * std::norm(s.excitation[i]) /
                     (4.0 * env.water_density * env.gravity * waves[i].group_velocity);
    }
  }
  return s;
}

PairCoefficients SurrogateProvider::pair(const WecGeometry& geom, double separation,
                                         double heading, const FrequencyGrid& grid,
                                         const Environment& env) const {
  check_grid(grid, env);
  require(separation > 2.0 * geom.radius(), ErrorKind::geometry,
          "pair bodies overlap");
  const SingleBodyCoefficients s = single(geom, grid, env);
  auto body = [&](double theta) {
    Eigen::VectorXd x(4);
    x << geom.radius(), geom.slenderness(), separation, wrap_heading(theta);
    std::array<Eigen::VectorXd, 6> t{eval(MapId::A11, x),  eval(MapId::B11, x),
                                     eval(MapId::A12, x),  eval(MapId::B12, x),
                                     eval(MapId::ReF1, x), eval(MapId::ImF1, x)};
    return codec_->decode_pair(geom, s, separation, t);
  };
  const auto b1 = body(heading);
  const auto b2 = body(heading + kPi);
  const auto waves = solve_dispersion(grid, env);

  PairCoefficients p;
  p.grid = grid;
  p.separation = separation;
  p.heading = heading;
  const double ct = std::cos(heading);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Eigen::Matrix2d a, b;
    const double a12 = 0.5 * (b1.cross_added_mass[i] + b2.cross_added_mass[i]);
    const double b12 = 0.5 * (b1.cross_damping[i] + b2.cross_damping[i]);
    a << b1.self_added_mass[i], a12, a12, b2.self_added_mass[i];
    b << b1.self_damping[i], b12, b12, b2.self_damping[i];
    p.added_mass.push_back(a);
    p.damping.push_back(b);
    Eigen::Vector2cd f;
    f << b1.excitation[i],
        b2.excitation[i] * std::polar(1.0, -waves[i].k * separation * ct);
    p.excitation.push_back(f);
  }
  return p;
}

void TrainPlan::validate() const {
  space.validate();
  committee.validate();
  require(!maps.empty(), ErrorKind::config, "no surrogate maps selected");
  require(rounds >= 0, ErrorKind::config, "QBC rounds must be >= 0");
  require(initial_single >= committee.min_samples && initial_pair >= committee.min_samples,
          ErrorKind::config, "initial sample counts below the committee minimum");
  require(pool >= std::max(batch_single, batch_pair) && batch_single >= 1 && batch_pair >= 1,
          ErrorKind::config, "QBC batch must be positive and no larger than the pool");
  require(face_fraction >= 0 && face_fraction <= 1, ErrorKind::config,
          "face fraction must lie in [0, 1]");
  require(epochs_single >= 1 && epochs_pair >= 1 && retrain_single >= 1 && retrain_pair >= 1,
          ErrorKind::config, "training and retraining need at least one epoch");
  require(grid_single >= 2 && grid_pair >= 2, ErrorKind::config,
          "validation grids need at least 2 points per axis");
}

CommitteeSet train_surrogates(const TrainPlan& plan, const CoefficientProvider& oracle,
                              const FrequencyGrid& grid, const Environment& env,
                              std::vector<MapTrainingReport>* reports, unsigned threads,
                              const ProgressFn& progress) {
  plan.validate();
  const Labeler labeler(oracle, grid, env);
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };

  // Initial designs and validation grids are shared by maps of one kind, so
  // each is labelled once for all of its maps.
  struct KindData {
    Eigen::MatrixXd initial, grid_points;
    std::vector<Eigen::MatrixXd> initial_labels, grid_labels;
  };
  std::map<bool, KindData> kinds;
  auto labels_for = [&](const Eigen::MatrixXd& pts, std::size_t maps) {
    std::vector<std::vector<Eigen::VectorXd>> per_point(static_cast<std::size_t>(pts.rows()));
    parallel_for(per_point.size(), threads, [&](std::size_t i) {
      per_point[i] = labeler.label_all(pts.row(static_cast<Eigen::Index>(i)).transpose());
    });
    std::vector<Eigen::MatrixXd> out(maps, Eigen::MatrixXd(pts.rows(), grid.size()));
    for (std::size_t i = 0; i < per_point.size(); ++i)
      for (std::size_t m = 0; m < maps; ++m)
        out[m].row(static_cast<Eigen::Index>(i)) = per_point[i][m].transpose();
    return out;
  };
  for (MapId id : plan.maps) {
    const bool pair = is_pair_map(id);
    if (kinds.count(pair)) continue;
    KindData kd;
    Rng rng(derive_seed(plan.seed, 1, pair ? 1 : 0));
    kd.initial = latin_hypercube(plan.space, pair, pair ? plan.initial_pair : plan.initial_single, rng);
    pin_to_faces(plan.space, kd.initial, plan.face_fraction, rng);
    const Eigen::MatrixXd corners = feasible_vertices(plan.space, pair);
    kd.initial.conservativeResize(kd.initial.rows() + corners.rows(), Eigen::NoChange);
    kd.initial.bottomRows(corners.rows()) = corners;
    kd.grid_points = tensor_grid(plan.space, pair, pair ? plan.grid_pair : plan.grid_single);
    say(std::string("labelling ") + (pair ? "pair" : "single-body") + " samples");
    kd.initial_labels = labels_for(kd.initial, pair ? 6 : 4);
    kd.grid_labels = labels_for(kd.grid_points, pair ? 6 : 4);
    kinds.emplace(pair, std::move(kd));
  }

  CommitteeSet out;
  for (MapId id : plan.maps) {
    const bool pair = is_pair_map(id);
    const KindData& kd = kinds.at(pair);
    const std::size_t slot = map_index(id) - (pair ? 4 : 0);
    Dataset data;
    data.target = id;
    data.inputs = kd.initial;
    data.outputs = kd.initial_labels[slot];

    CommitteeConfig cfg = plan.committee;
    cfg.seed = derive_seed(plan.seed, 10 + map_index(id));
    cfg.sgd.epochs = pair ? plan.epochs_pair : plan.epochs_single;
    Committee c = train_committee(data, cfg, plan.space, grid, env, threads);

    MapTrainingReport rep;
    rep.target = id;
    rep.zero_variance = c.zero_variance();
    auto grid_mse = [&] {
      return validate_on_grid(c, id, kd.grid_points, kd.grid_labels[slot], c.output_scaler.scale);
    };
    QbcRoundReport r0;
    r0.round = 0;
    r0.dataset_size = data.size();
    r0.grid_mse = grid_mse().mean;
    rep.rounds.push_back(r0);
    {
      std::ostringstream msg;
      msg << map_name(id) << " round 0: n=" << data.size() << " grid MSE=" << *r0.grid_mse
          << (c.zero_variance() ? " (zero-variance outputs)" : "");
      say(msg.str());
    }
    for (int round = 1; round <= plan.rounds; ++round) {
      Rng rng(derive_seed(plan.seed, 20 + map_index(id), static_cast<std::uint64_t>(round)));
      Eigen::MatrixXd pool = latin_hypercube(plan.space, pair, plan.pool, rng);
      pin_to_faces(plan.space, pool, plan.face_fraction, rng);
      QbcRoundReport r = qbc_round(c, data, pool, pair ? plan.batch_pair : plan.batch_single,
                                   labeler, pair ? plan.retrain_pair : plan.retrain_single, threads);
      r.grid_mse = grid_mse().mean;
      std::ostringstream msg;
      msg << map_name(id) << " round " << round << ": n=" << r.dataset_size
          << " max disagreement=" << r.max_disagreement << " grid MSE=" << *r.grid_mse;
      say(msg.str());
      rep.rounds.push_back(r);
    }
    rep.validation = grid_mse();
    if (reports) reports->push_back(std::move(rep));
    out.emplace(id, std::make_shared<const Committee>(std::move(c)));
  }
  return out;
}

}  // namespace wecfarm
