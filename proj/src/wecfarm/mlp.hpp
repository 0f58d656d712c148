#pragma once

#include <vector>

#include <Eigen/Core>

#include "wecfarm/rng.hpp"

namespace wecfarm {

// Fully connected regressor: tanh hidden layers, linear output.
class Mlp {
 public:
  Mlp() = default;
  // Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng);
  Mlp(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases);

  int inputs() const { return static_cast<int>(weights_.front().cols()); }
  int outputs() const { return static_cast<int>(weights_.back().rows()); }
  std::vector<int> hidden() const;

  // x is inputs x batch; returns outputs x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  bool operator==(const Mlp&) const = default;

  friend struct MlpTrainer;

 private:
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct SgdConfig {
  int epochs = 300;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch = 32;
};

// Mini-batch SGD with heavy-ball momentum on the mean squared error.
// Columns of x and y are samples. Returns the final full-set MSE.
double train_mlp(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                 const SgdConfig& config, Rng& rng);

}  // namespace wecfarm
