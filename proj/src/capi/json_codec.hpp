#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wecfarm/climate.hpp"
#include "wecfarm/optimize.hpp"
#include "wecfarm/surrogate.hpp"

namespace wecfarm::capi {

using nlohmann::json;

// Parses text (empty or null means {}) and requires an object.
json parse_object(const char* text, const std::string& what);

// Reads keys out of one JSON object and remembers every problem so a config
// error can list all of them at once.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>* problems);

  bool has(const char* key) const;
  double number(const char* key, double fallback);
  long long integer(const char* key, long long fallback);
  bool boolean(const char* key, bool fallback);
  std::string string(const char* key, const std::string& fallback);
  const json* object(const char* key);
  const json* get(const char* key);
  void problem(const std::string& msg) { problems_->push_back(path_ + msg); }
  std::string path(const char* key) const { return path_ + key + "."; }
  std::vector<std::string>* problems() const { return problems_; }
  // Flags keys that were never read.
  void finish();

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>* problems_;
  std::vector<std::string> seen_;
};

// Throws a config error listing every problem, if any.
void raise_problems(const std::vector<std::string>& problems, const std::string& what);

FrequencyGrid read_frequency(const json* j, std::vector<std::string>* problems);
Environment read_environment(const json* j, std::vector<std::string>* problems);
EfficiencyChain read_efficiency(const json* j, std::vector<std::string>* problems);
DesignBounds read_bounds(const json* j, std::vector<std::string>* problems);
ClimateOptions read_climate_options(const json* j, std::vector<std::string>* problems);
GaConfig read_ga(const json* j, std::vector<std::string>* problems);
TrainPlan read_train_plan(const json& j, FrequencyGrid* grid, Environment* env,
                          std::vector<std::string>* problems);

DesignPoint design_from_json(const json& j, const std::string& where);
json design_to_json(const DesignPoint& d);
StudySpec study_from_json(const json& j);
json study_to_json(const StudySpec& s);

json result_to_json(const EvaluationResult& r);
json ga_result_to_json(const GaResult& r, const StudySpec& spec);
json generation_to_json(const GenerationRecord& g);
json benchmark_to_json(const BenchmarkReport& r);
json random_layouts_to_json(const RandomLayoutReport& r);
json sensitivity_to_json(const SensitivityMap& m);
json mse_map_to_json(const MseMap& m);
json training_report_to_json(const MapTrainingReport& r);

json frequency_to_json(const FrequencyGrid& g);
json environment_to_json(const Environment& e);
json matrix_to_json(const Eigen::MatrixXd& m);

}  // namespace wecfarm::capi
