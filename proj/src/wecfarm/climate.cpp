#include "wecfarm/climate.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wecfarm/error.hpp"
#include "wecfarm/rng.hpp"

namespace wecfarm {

void EfficiencyChain::validate() const {
  for (double e : {pcc, operational_availability, transmission}) {
    require(e > 0.0 && e <= 1.0, ErrorKind::validation,
            "efficiencies must lie in (0, 1]");
  }
}

namespace {

double jonswap_shape(double omega, double peak) {
  const double sigma = omega <= peak ? 0.07 : 0.09;
  const double d = (omega - peak) / (sigma * peak);
  const double r = std::exp(-0.5 * d * d);
  const double ratio = peak / omega;
  const double ratio4 = ratio * ratio * ratio * ratio;
  return std::exp(-5.0 * std::log(omega) - 1.25 * ratio4 +
                  r * std::log(kPeakEnhancement));
}

double integrate_panels(double lo, double hi, double peak, int panels,
                        const GaussLegendre& rule) {
  if (!(hi > lo)) return 0.0;
  const double width = (hi - lo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    const double mid = a + 0.5 * width;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      sum += rule.weights[i] * jonswap_shape(mid + 0.5 * width * rule.nodes[i],
                                             peak);
    }
  }
  return 0.5 * width * sum;
}

// Zeroth moment of the unscaled shape over [kSpectrumMin, kSpectrumMax].
double shape_moment(double peak) {
  static const GaussLegendre rule = gauss_legendre(10);
  const double split = std::clamp(peak, kSpectrumMin, kSpectrumMax);
  return integrate_panels(kSpectrumMin, split, peak, 400, rule) +
         integrate_panels(split, kSpectrumMax, peak, 400, rule);
}

void check_sea_state(double hs, double tp) {
  require(hs > 0.0 && tp > 0.0 && std::isfinite(hs) && std::isfinite(tp),
          ErrorKind::validation, "sea state needs hs > 0 and tp > 0");
}

}  // namespace

double jonswap_density(double omega, double hs, double tp) {
  require(omega > 0.0, ErrorKind::validation, "spectrum needs omega > 0");
  check_sea_state(hs, tp);
  const double peak = 2.0 * std::numbers::pi / tp;
  return hs * hs / 16.0 / shape_moment(peak) * jonswap_shape(omega, peak);
}

GaussLegendre gauss_legendre(int n) {
  require(n >= 1, ErrorKind::validation, "Gauss-Legendre order must be >= 1");
  GaussLegendre out;
  out.nodes.resize(n);
  out.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = n == 1 ? x : p1;
      const double pn1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    out.nodes[i] = -x;
    out.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out.weights[i] = w;
    out.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) out.nodes[n / 2] = 0.0;
  return out;
}

void SeaStateBounds::validate() const {
  require(hs_max > hs_min && hs_min >= 0.0 && tp_max > tp_min && tp_min > 0.0,
          ErrorKind::validation, "sea-state bounds must be ordered and positive");
}

SeaStateGrid SeaStateGrid::gauss(const SeaStateBounds& bounds, int n_gq) {
  bounds.validate();
  require(n_gq >= 2, ErrorKind::validation, "n_gq must be >= 2");
  const GaussLegendre rule = gauss_legendre(n_gq);
  SeaStateGrid g;
  g.bounds = bounds;
  const double hs_half = 0.5 * (bounds.hs_max - bounds.hs_min);
  const double tp_half = 0.5 * (bounds.tp_max - bounds.tp_min);
  for (int i = 0; i < n_gq; ++i) {
    g.hs_nodes.push_back(bounds.hs_min + hs_half * (rule.nodes[i] + 1.0));
    g.tp_nodes.push_back(bounds.tp_min + tp_half * (rule.nodes[i] + 1.0));
  }
  g.weights.resize(n_gq, n_gq);
  for (int i = 0; i < n_gq; ++i) {
    for (int j = 0; j < n_gq; ++j) {
      g.weights(i, j) = rule.weights[i] * hs_half * rule.weights[j] * tp_half;
    }
  }
  return g;
}

namespace {

struct Bandwidth {
  double hs;
  double tp;
};

Bandwidth silverman(const std::vector<const SeaRecord*>& recs, double scale) {
  const double n = static_cast<double>(recs.size());
  double mh = 0.0, mt = 0.0;
  for (const auto* r : recs) {
    mh += r->hs;
    mt += r->tp;
  }
  mh /= n;
  mt /= n;
  double vh = 0.0, vt = 0.0;
  for (const auto* r : recs) {
    vh += (r->hs - mh) * (r->hs - mh);
    vt += (r->tp - mt) * (r->tp - mt);
  }
  const double sh = std::sqrt(vh / (n - 1.0));
  const double st = std::sqrt(vt / (n - 1.0));
  if (!(sh > 1e-12 * std::max(1.0, std::fabs(mh))) ||
      !(st > 1e-12 * std::max(1.0, std::fabs(mt)))) {
    fail(ErrorKind::degenerate,
         "records have zero spread; kernel bandwidth would be zero");
  }
  // d = 2: (4 / (d + 2))^(1/(d+4)) n^(-1/(d+4)) sigma
  const double factor = scale * std::pow(n, -1.0 / 6.0);
  return {factor * sh, factor * st};
}

Eigen::MatrixXd kde_probability(const std::vector<const SeaRecord*>& recs,
                                const SeaStateGrid& grid, Bandwidth bw) {
  const std::size_t n = grid.size();
  // separable kernel: density(i, j) = sum_r kh(i, r) kt(j, r)
  Eigen::MatrixXd kh(n, recs.size());
  Eigen::MatrixXd kt(n, recs.size());
  for (std::size_t r = 0; r < recs.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double uh = (grid.hs_nodes[i] - recs[r]->hs) / bw.hs;
      const double ut = (grid.tp_nodes[i] - recs[r]->tp) / bw.tp;
      kh(i, r) = std::exp(-0.5 * uh * uh);
      kt(i, r) = std::exp(-0.5 * ut * ut);
    }
  }
  const double norm = 1.0 / (2.0 * std::numbers::pi * bw.hs * bw.tp *
                             static_cast<double>(recs.size()));
  Eigen::MatrixXd density = norm * kh * kt.transpose();
  Eigen::MatrixXd p = density.cwiseProduct(grid.weights);
  const double total = p.sum();
  require(total > 0.0, ErrorKind::degenerate,
          "kernel density vanishes on every quadrature node");
  return p / total;
}

}  // namespace

SiteClimate build_site_climate(const std::vector<SeaRecord>& records,
                               const ClimateOptions& options,
                               std::string site_id) {
  options.bounds.validate();
  require(options.n_gq >= 2, ErrorKind::validation, "n_gq must be >= 2");
  require(options.years >= 1, ErrorKind::validation, "years must be >= 1");
  require(options.bandwidth_scale > 0.0, ErrorKind::validation,
          "bandwidth scale must be positive");
  if (records.size() < options.min_records) {
    std::ostringstream msg;
    msg << "need at least " << options.min_records << " records, got "
        << records.size();
    fail(ErrorKind::validation, msg.str());
  }
  std::ostringstream outside;
  int n_outside = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!options.bounds.contains(records[i].hs, records[i].tp)) {
      if (n_outside < 10) {
        outside << " record " << i + 1 << " (" << records[i].hs << ", "
                << records[i].tp << ")";
      }
      ++n_outside;
    }
  }
  if (n_outside > 0) {
    std::ostringstream msg;
    msg << n_outside << " records outside the (Hs, Tp) bounds:"
        << outside.str();
    fail(ErrorKind::validation, msg.str());
  }

  SiteClimate site;
  site.site_id = std::move(site_id);
  site.grid = SeaStateGrid::gauss(options.bounds, options.n_gq);
  site.record_count = records.size();

  const bool with_years = records.front().year.has_value();
  std::map<int, std::vector<const SeaRecord*>> by_year;
  std::vector<const SeaRecord*> all;
  for (const auto& r : records) {
    require(r.year.has_value() == with_years, ErrorKind::validation,
            "either every record or no record carries a year");
    all.push_back(&r);
    if (with_years) by_year[*r.year].push_back(&r);
  }

  const Bandwidth pooled = silverman(all, options.bandwidth_scale);
  site.hs_bandwidth = pooled.hs;
  site.tp_bandwidth = pooled.tp;
  if (!with_years) {
    const Eigen::MatrixXd p = kde_probability(all, site.grid, pooled);
    site.probability.assign(options.years, p);
    return site;
  }
  if (static_cast<int>(by_year.size()) != options.years) {
    std::ostringstream msg;
    msg << "records cover " << by_year.size() << " distinct years but "
        << options.years << " were configured";
    fail(ErrorKind::config, msg.str());
  }
  for (const auto& [year, recs] : by_year) {
    if (recs.size() < options.min_records) {
      std::ostringstream msg;
      msg << "year " << year << " has " << recs.size() << " records, need "
          << options.min_records;
      fail(ErrorKind::validation, msg.str());
    }
    site.probability.push_back(kde_probability(
        recs, site.grid, silverman(recs, options.bandwidth_scale)));
  }
  return site;
}

SpectrumTable::SpectrumTable(const SeaStateGrid& states,
                             const FrequencyGrid& grid)
    : grid_(grid), n_(states.size()) {
  const std::size_t nw = grid.size();
  table_.resize(n_ * n_, nw);
  for (std::size_t j = 0; j < n_; ++j) {
    const double tp = states.tp_nodes[j];
    const double peak = 2.0 * std::numbers::pi / tp;
    const double moment = shape_moment(peak);
    std::vector<double> shape(nw);
    for (std::size_t k = 0; k < nw; ++k) {
      shape[k] = 2.0 * grid.spacing()[k] * jonswap_shape(grid[k], peak);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double hs = states.hs_nodes[i];
      const double scale = hs * hs / 16.0 / moment;
      for (std::size_t k = 0; k < nw; ++k) {
        table_(i * n_ + j, k) = scale * shape[k];
      }
    }
  }
}

Eigen::MatrixXd SpectrumTable::sea_state_power(
    const std::vector<double>& regular_power) const {
  require(regular_power.size() == grid_.size(), ErrorKind::dimension,
          "regular-wave power does not match the spectrum grid");
  const Eigen::Map<const Eigen::VectorXd> pm(regular_power.data(),
                                             regular_power.size());
  const Eigen::VectorXd flat = table_ * pm;
  Eigen::MatrixXd out(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) out(i, j) = flat(i * n_ + j);
  }
  return out;
}

double irregular_power(const std::vector<double>& regular_power,
                       const FrequencyGrid& grid, double hs, double tp) {
  require(regular_power.size() == grid.size(), ErrorKind::dimension,
          "regular-wave power does not match the frequency grid");
  check_sea_state(hs, tp);
  const double peak = 2.0 * std::numbers::pi / tp;
  const double scale = hs * hs / 16.0 / shape_moment(peak);
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    sum += 2.0 * grid.spacing()[k] * scale * jonswap_shape(grid[k], peak) *
           regular_power[k];
  }
  return sum;
}

LifetimePower lifetime_average_power(const Eigen::MatrixXd& sea_state_power,
                                     const SiteClimate& climate,
                                     const EfficiencyChain& eff) {
  eff.validate();
  const auto n = static_cast<Eigen::Index>(climate.grid.size());
  require(sea_state_power.rows() == n && sea_state_power.cols() == n,
          ErrorKind::dimension,
          "sea-state power matrix does not match the climate grid");
  require(climate.years() >= 1, ErrorKind::validation, "climate has no years");
  double sum = 0.0;
  for (const auto& p : climate.probability) {
    sum += sea_state_power.cwiseProduct(p).sum();
  }
  LifetimePower out;
  out.lifetime = eff.product() * sum;
  out.per_year = out.lifetime / climate.years();
  return out;
}

double objective_pv(double average_power, const WecGeometry& geom,
                    std::size_t devices) {
  require(devices >= 1, ErrorKind::validation, "need at least one device");
  return average_power / (static_cast<double>(devices) * geom.volume());
}

double q_factor(double farm_power, const std::vector<double>& isolated_power) {
  require(!isolated_power.empty(), ErrorKind::validation,
          "q-factor needs isolated powers");
  double sum = 0.0;
  for (double p : isolated_power) {
    require(p > 0.0, ErrorKind::validation,
            "q-factor needs positive isolated power");
    sum += p;
  }
  return farm_power / sum;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "line " << line_no << ": '" << cell << "' is not a number";
    fail(ErrorKind::parse, msg.str());
  }
  return v;
}

}  // namespace

std::vector<SeaRecord> parse_sea_records(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool with_year = false;
  std::vector<SeaRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      if (cells.size() == 2 && cells[0] == "hs_m" && cells[1] == "tp_s") {
        with_year = false;
      } else if (cells.size() == 3 && cells[0] == "hs_m" &&
                 cells[1] == "tp_s" && cells[2] == "year") {
        with_year = true;
      } else {
        std::ostringstream msg;
        msg << "line " << line_no
            << ": expected header 'hs_m,tp_s' (optionally ',year'), got '"
            << line << "'";
        fail(ErrorKind::parse, msg.str());
      }
      header_seen = true;
      continue;
    }
    const std::size_t expected = with_year ? 3 : 2;
    if (cells.size() != expected) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected " << expected
          << " columns, got " << cells.size();
      fail(ErrorKind::parse, msg.str());
    }
    SeaRecord r{parse_number(cells[0], line_no), parse_number(cells[1], line_no),
                std::nullopt};
    if (!(r.hs > 0.0 && r.tp > 0.0)) {
      std::ostringstream msg;
      msg << "line " << line_no << ": hs and tp must be positive";
      fail(ErrorKind::parse, msg.str());
    }
    if (with_year) {
      const double y = parse_number(cells[2], line_no);
      if (y != std::floor(y)) {
        std::ostringstream msg;
        msg << "line " << line_no << ": year must be an integer";
        fail(ErrorKind::parse, msg.str());
      }
      r.year = static_cast<int>(y);
    }
    out.push_back(r);
  }
  if (!header_seen) {
    fail(ErrorKind::parse, "line 1: missing header 'hs_m,tp_s'");
  }
  return out;
}

std::vector<SeaRecord> read_sea_records(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_sea_records(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_sea_records(const std::string& path,
                       const std::vector<SeaRecord>& records) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  const bool with_year = !records.empty() && records.front().year.has_value();
  out << (with_year ? "hs_m,tp_s,year\n" : "hs_m,tp_s\n");
  out.precision(17);
  for (const auto& r : records) {
    out << r.hs << ',' << r.tp;
    if (with_year) out << ',' << r.year.value_or(0);
    out << '\n';
  }
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, std::size_t n) {
  require(j.is_array() && j.size() == n, ErrorKind::parse,
          "site matrix has the wrong number of rows");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    require(j[i].is_array() && j[i].size() == n, ErrorKind::parse,
            "site matrix has the wrong number of columns");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

}  // namespace

std::string site_to_json(const SiteClimate& site) {
  nlohmann::json j;
  j["schema"] = "wecfarm.site.v1";
  j["site_id"] = site.site_id;
  j["years"] = site.years();
  j["record_count"] = site.record_count;
  j["bandwidth"] = {{"hs_m", site.hs_bandwidth}, {"tp_s", site.tp_bandwidth}};
  j["bounds"] = {{"hs_min", site.grid.bounds.hs_min},
                 {"hs_max", site.grid.bounds.hs_max},
                 {"tp_min", site.grid.bounds.tp_min},
                 {"tp_max", site.grid.bounds.tp_max}};
  j["hs_nodes"] = site.grid.hs_nodes;
  j["tp_nodes"] = site.grid.tp_nodes;
  j["weights"] = matrix_json(site.grid.weights);
  nlohmann::json probs = nlohmann::json::array();
  for (const auto& p : site.probability) probs.push_back(matrix_json(p));
  j["probability"] = std::move(probs);
  return j.dump(1);
}

SiteClimate site_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("site JSON: ") + e.what());
  }
  try {
    require(j.value("schema", "") == "wecfarm.site.v1", ErrorKind::parse,
            "site JSON: unsupported schema");
    SiteClimate site;
    site.site_id = j.at("site_id").get<std::string>();
    site.record_count = j.value("record_count", std::size_t{0});
    site.hs_bandwidth = j.at("bandwidth").at("hs_m").get<double>();
    site.tp_bandwidth = j.at("bandwidth").at("tp_s").get<double>();
    const auto& b = j.at("bounds");
    site.grid.bounds = {b.at("hs_min").get<double>(), b.at("hs_max").get<double>(),
                        b.at("tp_min").get<double>(), b.at("tp_max").get<double>()};
    site.grid.hs_nodes = j.at("hs_nodes").get<std::vector<double>>();
    site.grid.tp_nodes = j.at("tp_nodes").get<std::vector<double>>();
    const std::size_t n = site.grid.hs_nodes.size();
    require(n >= 2 && site.grid.tp_nodes.size() == n, ErrorKind::parse,
            "site JSON: node vectors must have equal length >= 2");
    site.grid.weights = matrix_from_json(j.at("weights"), n);
    for (const auto& p : j.at("probability")) {
      site.probability.push_back(matrix_from_json(p, n));
    }
    require(static_cast<int>(site.probability.size()) ==
                j.at("years").get<int>(),
            ErrorKind::parse, "site JSON: years does not match probability");
    return site;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("site JSON: ") + e.what());
  }
}

void save_site(const SiteClimate& site, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out << site_to_json(site) << '\n';
}

SiteClimate load_site(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return site_from_json(buf.str());
}

namespace {

struct Mode {
  double weight;
  double log_hs_mean;
  double log_hs_sd;
  double tp_mean;
  double tp_sd;
  double correlation;
};

std::vector<Mode> profile_modes(const std::string& profile) {
  if (profile == "alaska") return {{1.0, std::log(2.8), 0.35, 11.5, 2.0, 0.55}};
  if (profile == "east_coast") return {{1.0, std::log(1.1), 0.40, 7.5, 1.8, 0.4}};
  if (profile == "pacific_islands") {
    return {{0.7, std::log(1.9), 0.25, 9.5, 1.6, 0.3},
            {0.3, std::log(1.6), 0.25, 14.0, 1.5, 0.2}};
  }
  if (profile == "west_coast") return {{1.0, std::log(2.3), 0.35, 12.5, 2.4, 0.45}};
  if (profile == "bimodal") {
    return {{0.5, std::log(1.0), 0.15, 6.0, 0.7, 0.0},
            {0.5, std::log(3.5), 0.12, 14.0, 0.8, 0.0}};
  }
  fail(ErrorKind::validation, "unknown synthetic site profile '" + profile + "'");
}

}  // namespace

std::vector<std::string> synthetic_profiles() {
  return {"alaska", "east_coast", "pacific_islands", "west_coast", "bimodal"};
}

std::vector<SeaRecord> synthetic_records(const std::string& profile,
                                         std::size_t count, std::uint64_t seed,
                                         const SeaStateBounds& bounds) {
  const auto modes = profile_modes(profile);
  Rng rng(seed);
  std::vector<SeaRecord> out;
  out.reserve(count);
  while (out.size() < count) {
    double u = rng.uniform();
    std::size_t m = 0;
    while (m + 1 < modes.size() && u >= modes[m].weight) {
      u -= modes[m].weight;
      ++m;
    }
    const Mode& md = modes[m];
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double hs = std::exp(md.log_hs_mean + md.log_hs_sd * z1);
    const double tp =
        md.tp_mean + md.tp_sd * (md.correlation * z1 +
                                 std::sqrt(1.0 - md.correlation * md.correlation) * z2);
    if (bounds.contains(hs, tp)) out.push_back({hs, tp, std::nullopt});
  }
  return out;
}

}  // namespace wecfarm
