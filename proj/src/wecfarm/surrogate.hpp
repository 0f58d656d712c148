#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wecfarm/hydro.hpp"
#include "wecfarm/mlp.hpp"

namespace wecfarm {

// The ten learned maps: four single-body, six pair.
enum class MapId { A, B, ReF, ImF, A11, B11, A12, B12, ReF1, ImF1 };

inline constexpr std::array<MapId, 10> kAllMaps{
    MapId::A,   MapId::B,   MapId::ReF, MapId::ImF,  MapId::A11,
    MapId::B11, MapId::A12, MapId::B12, MapId::ReF1, MapId::ImF1};

const char* map_name(MapId id);
MapId map_from_name(const std::string& name);
bool is_pair_map(MapId id);
inline int map_input_dim(MapId id) { return is_pair_map(id) ? 4 : 2; }

// Training box. Single inputs are (R, R/D); pair inputs add (l, heading).
struct DesignSpace {
  double radius_min = WecGeometry::kMinRadius;
  double radius_max = WecGeometry::kMaxRadius;
  double slenderness_min = WecGeometry::kMinSlenderness;
  double slenderness_max = WecGeometry::kMaxSlenderness;
  double draft_min = WecGeometry::kMinDraft;
  double draft_max = WecGeometry::kMaxDraft;
  double clearance = 10.0;       // s_d
  double separation_max = 360.0;

  Eigen::VectorXd lower(bool pair) const;
  Eigen::VectorXd upper(bool pair) const;
  bool feasible(const Eigen::VectorXd& x) const;
  bool inside(const Eigen::VectorXd& x) const;  // box only
  void validate() const;
};

// Regression targets. Hydrodynamic coefficients are made dimensionless, the
// depth attenuation a = e^{-kD} is divided out of everything driven by waves
// and, for the pair maps, so is the oscillating far-field factor:
//   single:  A / (rho pi R^2 D),  B / (rho pi R^3 w a^2),  F / (rho g pi R^2 a)
//   pair:    (B - i w A) / (rho pi R^3 w a^2) times sqrt(pi x / 2) e^{-i(x - pi/4)}
//            with x = 2kl for the self terms (minus the single body) and
//            x = kl for the cross terms; (F1 - F) / (rho g pi R^2 a) times
//            sqrt(pi k l / 2) e^{-i(k l + pi/4)}.
// The "A" maps carry the imaginary part, the "B" maps the real part.
class TargetCodec {
 public:
  TargetCodec(const FrequencyGrid& grid, const Environment& env);

  const FrequencyGrid& grid() const { return grid_; }
  const Environment& env() const { return env_; }

  std::array<Eigen::VectorXd, 4> encode_single(const WecGeometry& geom,
                                               const SingleBodyCoefficients& s) const;
  std::array<Eigen::VectorXd, 6> encode_pair(const WecGeometry& geom,
                                             const SingleBodyCoefficients& s,
                                             const PairCoefficients& p) const;

  // Maps ordered A, B, ReF, ImF.
  SingleBodyCoefficients decode_single(const WecGeometry& geom,
                                       const std::array<Eigen::VectorXd, 4>& t) const;

  struct PairBody1 {
    std::vector<double> self_added_mass, self_damping;
    std::vector<double> cross_added_mass, cross_damping;
    std::vector<Complex> excitation;
  };
  // Maps ordered A11, B11, A12, B12, ReF1, ImF1.
  PairBody1 decode_pair(const WecGeometry& geom, const SingleBodyCoefficients& s,
                        double separation,
                        const std::array<Eigen::VectorXd, 6>& t) const;

 private:
  FrequencyGrid grid_;
  Environment env_;
  std::vector<WaveNumber> waves_;
};

// Labels design-space points with an oracle provider.
class Labeler {
 public:
  Labeler(const CoefficientProvider& oracle, const FrequencyGrid& grid,
          const Environment& env);

  Eigen::VectorXd label(MapId id, const Eigen::VectorXd& x) const;
  // All maps of the input's kind: 4 (single) or 6 (pair), in enum order.
  std::vector<Eigen::VectorXd> label_all(const Eigen::VectorXd& x) const;

  const TargetCodec& codec() const { return codec_; }

 private:
  const CoefficientProvider& oracle_;
  TargetCodec codec_;
};

struct Dataset {
  MapId target = MapId::A;
  Eigen::MatrixXd inputs;   // samples x input dim
  Eigen::MatrixXd outputs;  // samples x n_w

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  void append(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
  bool contains(const Eigen::VectorXd& x) const;
};

Dataset make_dataset(MapId id, const Eigen::MatrixXd& inputs, const Labeler& labeler,
                     unsigned threads = 1);

// Network features: (log R, log R/D) followed by the pair coordinates as
// they are. The committee's input scaler maps the box onto [-1, 1] in these
// features.
Eigen::VectorXd network_features(const Eigen::VectorXd& x);

// z = (x - offset) / scale
struct AffineScaler {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& z) const;
  bool operator==(const AffineScaler&) const = default;
};

struct CommitteeConfig {
  std::vector<int> hidden{32, 32};
  SgdConfig sgd;
  int members = 5;
  double bootstrap = 0.8;
  std::size_t min_samples = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Prediction {
  Eigen::VectorXd mean;
  double disagreement = 0.0;  // member variance, normalised units, averaged
  bool extrapolated = false;
};

// Anything that maps a design-space point to a target vector.
class MapModel {
 public:
  virtual ~MapModel() = default;
  virtual Eigen::VectorXd predict_mean(const Eigen::VectorXd& x) const = 0;
};

class Committee final : public MapModel {
 public:
  MapId target = MapId::A;
  std::vector<Mlp> members;
  AffineScaler input_scaler;
  AffineScaler output_scaler;
  CommitteeConfig config;
  DesignSpace space;
  FrequencyGrid grid;
  Environment env;
  std::vector<double> member_mse;  // final training MSE, normalised units
  int zero_variance_outputs = 0;
  std::size_t samples = 0;
  int rounds = 0;

  Prediction predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict_mean(const Eigen::VectorXd& x) const override;
  // Rows of xs are points. Fills per-row means and disagreements.
  void predict_batch(const Eigen::MatrixXd& xs, Eigen::MatrixXd* mean,
                     Eigen::VectorXd* disagreement) const;
  bool zero_variance() const { return zero_variance_outputs > 0; }
};

Committee train_committee(const Dataset& data, const CommitteeConfig& config,
                          const DesignSpace& space, const FrequencyGrid& grid,
                          const Environment& env, unsigned threads = 1);

// Continues training every member from its current weights on the enlarged
// dataset; scalers are kept. Member subsamples depend on (seed, round).
void retrain_committee(Committee& committee, const Dataset& data, int epochs,
                       unsigned threads = 1);

// Latin-hypercube style pool over the box, rejecting infeasible points.
Eigen::MatrixXd latin_hypercube(const DesignSpace& space, bool pair, std::size_t n,
                                Rng& rng);

// Moves about `fraction` of the rows onto a random face of the box (one
// coordinate set to its bound, or the draft at a limit) where that stays
// feasible. Plain LHS almost never samples the faces, which is where the
// fitted maps are worst.
void pin_to_faces(const DesignSpace& space, Eigen::MatrixXd& pts, double fraction, Rng& rng);

// Vertices of the feasible (R, R/D) region; for pairs each is combined with
// the separation and heading extremes. Added to every initial design.
Eigen::MatrixXd feasible_vertices(const DesignSpace& space, bool pair);

// Indices of the k highest disagreements; ties go to the lexicographically
// smaller input. Points already in `exclude` and duplicates are skipped.
std::vector<std::size_t> select_queries(const Eigen::VectorXd& disagreement,
                                        const Eigen::MatrixXd& pool, std::size_t k,
                                        const Dataset* exclude = nullptr);

struct QbcRoundReport {
  int round = 0;
  std::size_t dataset_size = 0;
  double max_disagreement = 0.0;
  double mean_disagreement = 0.0;
  std::optional<double> grid_mse;
};

QbcRoundReport qbc_round(Committee& committee, Dataset& data,
                         const Eigen::MatrixXd& pool, std::size_t k,
                         const Labeler& labeler, int epochs, unsigned threads = 1);

// Tensor grid with `per_axis` points per input including the box faces;
// infeasible points are dropped.
Eigen::MatrixXd tensor_grid(const DesignSpace& space, bool pair, int per_axis);

struct MseMap {
  MapId target = MapId::A;
  Eigen::MatrixXd points;
  Eigen::VectorXd mse;  // per point, averaged over frequencies
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
};

// MSE in units of `scale` (the committee's output standard deviations).
MseMap validate_on_grid(const MapModel& model, MapId id, const Labeler& labeler,
                        const Eigen::MatrixXd& points, const Eigen::VectorXd& scale,
                        unsigned threads = 1);
// Same, with labels already computed (rows of `labels` match `points`).
MseMap validate_on_grid(const MapModel& model, MapId id, const Eigen::MatrixXd& points,
                        const Eigen::MatrixXd& labels, const Eigen::VectorXd& scale);

// Wraps the oracle as a model; validating it gives an all-zero map.
class OracleModel final : public MapModel {
 public:
  OracleModel(const Labeler& labeler, MapId id) : labeler_(labeler), id_(id) {}
  Eigen::VectorXd predict_mean(const Eigen::VectorXd& x) const override {
    return labeler_.label(id_, x);
  }

 private:
  const Labeler& labeler_;
  MapId id_;
};

using CommitteeSet = std::map<MapId, std::shared_ptr<const Committee>>;

// Drop-in provider backed by the ten committees. Body-2 quantities come from
// the same maps evaluated at heading + pi.
class SurrogateProvider final : public CoefficientProvider {
 public:
  explicit SurrogateProvider(CommitteeSet committees, bool haskind_projection = false);

  std::string name() const override { return "surrogate"; }
  SingleBodyCoefficients single(const WecGeometry& geom, const FrequencyGrid& grid,
                                const Environment& env) const override;
  PairCoefficients pair(const WecGeometry& geom, double separation, double heading,
                        const FrequencyGrid& grid, const Environment& env) const override;

  bool haskind_projection() const { return haskind_; }
  std::size_t extrapolations() const { return extrapolations_.load(); }
  const FrequencyGrid& grid() const { return grid_; }

 private:
  void check_grid(const FrequencyGrid& grid, const Environment& env) const;
  const Committee& at(MapId id) const { return *committees_.at(id); }
  Eigen::VectorXd eval(MapId id, const Eigen::VectorXd& x) const;

  CommitteeSet committees_;
  bool haskind_;
  FrequencyGrid grid_;
  Environment env_;
  std::unique_ptr<TargetCodec> codec_;
  mutable std::atomic<std::size_t> extrapolations_{0};
};

struct TrainPlan {
  DesignSpace space;
  CommitteeConfig committee;
  std::vector<MapId> maps{kAllMaps.begin(), kAllMaps.end()};
  std::size_t initial_single = 300;
  std::size_t initial_pair = 600;
  int rounds = 5;
  std::size_t batch_single = 50;
  std::size_t batch_pair = 200;
  std::size_t pool = 1000;
  double face_fraction = 0.3;  // share of initial and pool points pinned to box faces
  // Epoch budgets per kind; committee.sgd.epochs is overridden by these.
  int epochs_single = 500;
  int epochs_pair = 300;
  int retrain_single = 200;
  int retrain_pair = 100;
  int grid_single = 15;
  int grid_pair = 6;
  std::uint64_t seed = 1;

  void validate() const;
};

struct MapTrainingReport {
  MapId target = MapId::A;
  std::vector<QbcRoundReport> rounds;  // round 0 is the initial fit
  MseMap validation;
  bool zero_variance = false;
};

using ProgressFn = std::function<void(const std::string&)>;

// Initial Latin-hypercube design, then `rounds` query-by-committee rounds per
// map, validating on the tensor grid after every round.
CommitteeSet train_surrogates(const TrainPlan& plan, const CoefficientProvider& oracle,
                              const FrequencyGrid& grid, const Environment& env,
                              std::vector<MapTrainingReport>* reports = nullptr,
                              unsigned threads = 1, const ProgressFn& progress = {});

// Persistence: one JSON document per committee (schema wecfarm.committee.v1),
// datasets as CSV with a leading schema comment.
std::string committee_to_json(const Committee& c);
Committee committee_from_json(const std::string& text);
void save_committee(const Committee& c, const std::string& path);
Committee load_committee(const std::string& path);
void save_committee_set(const CommitteeSet& set, const std::string& dir);
CommitteeSet load_committee_set(const std::string& dir);

void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace wecfarm
