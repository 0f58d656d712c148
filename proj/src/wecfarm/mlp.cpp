#include "wecfarm/mlp.hpp"

#include <cmath>
#include <numeric>

#include "wecfarm/error.hpp"

namespace wecfarm {

Mlp::Mlp(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng) {
  require(inputs > 0 && outputs > 0, ErrorKind::validation,
          "network needs positive input and output sizes");
  std::vector<int> sizes{inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(outputs);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    require(sizes[l + 1] > 0, ErrorKind::validation, "empty hidden layer");
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-bound, bound);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

Mlp::Mlp(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases)
    : weights_(std::move(weights)), biases_(std::move(biases)) {
  require(!weights_.empty() && weights_.size() == biases_.size(),
          ErrorKind::dimension, "network layers and biases disagree");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    require(weights_[l].rows() == biases_[l].size(), ErrorKind::dimension,
            "bias length does not match layer width");
    if (l > 0)
      require(weights_[l].cols() == weights_[l - 1].rows(), ErrorKind::dimension,
              "consecutive layer sizes do not chain");
  }
}

std::vector<int> Mlp::hidden() const {
  std::vector<int> out;
  for (std::size_t l = 0; l + 1 < weights_.size(); ++l)
    out.push_back(static_cast<int>(weights_[l].rows()));
  return out;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  require(x.rows() == inputs(), ErrorKind::dimension,
          "network input has the wrong dimension");
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * h;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh().matrix();
    h = std::move(z);
  }
  return h;
}

struct MlpTrainer {
  static double run(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                    const SgdConfig& cfg, Rng& rng) {
    const std::size_t layers = net.weights_.size();
    const Eigen::Index n = x.cols();
    std::vector<Eigen::MatrixXd> vw(layers), grad_w(layers);
    std::vector<Eigen::VectorXd> vb(layers), grad_b(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      vw[l] = Eigen::MatrixXd::Zero(net.weights_[l].rows(), net.weights_[l].cols());
      vb[l] = Eigen::VectorXd::Zero(net.biases_[l].size());
    }
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Eigen::MatrixXd> act(layers + 1);
    Eigen::MatrixXd xb, yb;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.index(static_cast<std::size_t>(i) + 1)]);
      for (Eigen::Index start = 0; start < n; start += cfg.batch) {
        const Eigen::Index m = std::min<Eigen::Index>(cfg.batch, n - start);
        xb.resize(x.rows(), m);
        yb.resize(y.rows(), m);
        for (Eigen::Index j = 0; j < m; ++j) {
          xb.col(j) = x.col(order[start + j]);
          yb.col(j) = y.col(order[start + j]);
        }
        act[0] = xb;
        for (std::size_t l = 0; l < layers; ++l) {
          act[l + 1] = net.weights_[l] * act[l];
          act[l + 1].colwise() += net.biases_[l];
          if (l + 1 < layers) act[l + 1] = act[l + 1].array().tanh().matrix();
        }
        Eigen::MatrixXd delta =
            (2.0 / static_cast<double>(m * y.rows())) * (act[layers] - yb);
        for (std::size_t l = layers; l-- > 0;) {
          grad_w[l].noalias() = delta * act[l].transpose();
          grad_b[l] = delta.rowwise().sum();
          if (l > 0) {
            Eigen::MatrixXd back = net.weights_[l].transpose() * delta;
            delta = back.array() * (1.0 - act[l].array().square());
          }
        }
        for (std::size_t l = 0; l < layers; ++l) {
          vw[l] = cfg.momentum * vw[l] + grad_w[l];
          vb[l] = cfg.momentum * vb[l] + grad_b[l];
          net.weights_[l] -= cfg.learning_rate * vw[l];
          net.biases_[l] -= cfg.learning_rate * vb[l];
        }
      }
    }
    return (net.forward(x) - y).squaredNorm() / static_cast<double>(y.size());
  }
};

double train_mlp(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                 const SgdConfig& config, Rng& rng) {
  require(x.cols() == y.cols() && x.cols() > 0, ErrorKind::dimension,
          "training inputs and targets disagree on sample count");
  require(x.rows() == net.inputs() && y.rows() == net.outputs(),
          ErrorKind::dimension, "training data does not match network shape");
  require(config.epochs >= 0 && config.batch >= 1 && config.learning_rate > 0.0 &&
              config.momentum >= 0.0 && config.momentum < 1.0,
          ErrorKind::validation, "invalid SGD settings");
  return MlpTrainer::run(net, x, y, config, rng);
}

}  // namespace wecfarm
