#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wecfarm/hydro.hpp"

namespace wecfarm {

struct EfficiencyChain {
  double pcc = 0.8;                       // power conversion chain
  double operational_availability = 0.95;
  double transmission = 0.98;

  double product() const { return pcc * operational_availability * transmission; }
  void validate() const;
};

// JONSWAP spectrum, gamma = 3.3, sigma = 0.07 / 0.09, scaled so that its
// zeroth moment over [kSpectrumMin, kSpectrumMax] equals hs^2 / 16.
inline constexpr double kSpectrumMin = 0.01;
inline constexpr double kSpectrumMax = 6.0;
inline constexpr double kPeakEnhancement = 3.3;

double jonswap_density(double omega, double hs, double tp);

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

struct SeaStateBounds {
  double hs_min = 0.25;
  double hs_max = 8.0;
  double tp_min = 3.0;
  double tp_max = 18.0;

  void validate() const;
  bool contains(double hs, double tp) const {
    return hs >= hs_min && hs <= hs_max && tp >= tp_min && tp <= tp_max;
  }
};

// Tensor Gauss-Legendre nodes over the (Hs, Tp) box; weights(i, j) belongs
// to (hs_nodes[i], tp_nodes[j]).
struct SeaStateGrid {
  SeaStateBounds bounds;
  std::vector<double> hs_nodes;
  std::vector<double> tp_nodes;
  Eigen::MatrixXd weights;

  static SeaStateGrid gauss(const SeaStateBounds& bounds, int n_gq);
  std::size_t size() const { return hs_nodes.size(); }
};

struct SeaRecord {
  double hs;
  double tp;
  std::optional<int> year;
};

struct SiteClimate {
  std::string site_id;
  SeaStateGrid grid;
  std::vector<Eigen::MatrixXd> probability;  // one matrix per year
  double hs_bandwidth = 0.0;
  double tp_bandwidth = 0.0;
  std::size_t record_count = 0;

  int years() const { return static_cast<int>(probability.size()); }
};

struct ClimateOptions {
  int n_gq = 20;
  SeaStateBounds bounds;
  int years = 30;
  // Multiplies the Silverman bandwidths; 1 keeps the rule as is.
  double bandwidth_scale = 1.0;
  std::size_t min_records = 30;
};

// Gaussian product-kernel density (Silverman bandwidth per marginal)
// evaluated at the Gauss-Legendre nodes; probability = density * weight,
// normalised to one per year. Records without a year are replicated across
// all years; records with years get one estimate per distinct year.
SiteClimate build_site_climate(const std::vector<SeaRecord>& records,
                               const ClimateOptions& options,
                               std::string site_id);

// Precomputed 2 * dw_k * S(w_k | hs, tp) for every node of a sea-state grid.
class SpectrumTable {
 public:
  SpectrumTable(const SeaStateGrid& states, const FrequencyGrid& grid);

  // n_gq x n_gq matrix of p_i(hs, tp) for a per-frequency power curve.
  Eigen::MatrixXd sea_state_power(const std::vector<double>& regular_power) const;
  const FrequencyGrid& grid() const { return grid_; }
  std::size_t states() const { return n_; }

 private:
  FrequencyGrid grid_;
  std::size_t n_;
  Eigen::MatrixXd table_;  // (n_gq * n_gq) x n_w, row = i * n + j
};

// p_i = sum_k 2 dw_k S(w_k | hs, tp) p_m(w_k)
double irregular_power(const std::vector<double>& regular_power,
                       const FrequencyGrid& grid, double hs, double tp);

struct LifetimePower {
  double lifetime = 0.0;  // summed over every year
  double per_year = 0.0;  // lifetime / years
};

LifetimePower lifetime_average_power(const Eigen::MatrixXd& sea_state_power,
                                     const SiteClimate& climate,
                                     const EfficiencyChain& eff);

// p_a / (N pi R^2 D)
double objective_pv(double average_power, const WecGeometry& geom,
                    std::size_t devices);

double q_factor(double farm_power, const std::vector<double>& isolated_power);

// CSV with header "hs_m,tp_s" and an optional third "year" column.
std::vector<SeaRecord> read_sea_records(const std::string& path);
std::vector<SeaRecord> parse_sea_records(const std::string& text);
void write_sea_records(const std::string& path,
                       const std::vector<SeaRecord>& records);

std::string site_to_json(const SiteClimate& site);
SiteClimate site_from_json(const std::string& text);
void save_site(const SiteClimate& site, const std::string& path);
SiteClimate load_site(const std::string& path);

// Synthetic record streams with site-like character; profiles are
// "alaska", "east_coast", "pacific_islands", "west_coast", "bimodal".
std::vector<std::string> synthetic_profiles();
std::vector<SeaRecord> synthetic_records(const std::string& profile,
                                         std::size_t count, std::uint64_t seed,
                                         const SeaStateBounds& bounds = {});

}  // namespace wecfarm
