#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "adp/mlp.hpp"
#include "adp/random.hpp"

namespace adp {

inline const std::vector<int> kHiddenSizes = {64, 128};
inline constexpr double kPolicyStd = 0.4;

// Diagonal Gaussian over actions: the network outputs the mean, the
// standard deviation is a constant shared by every action dimension.
struct GaussianPolicy {
  MlpParams net;
  double std = kPolicyStd;

  int obs_dim() const { return net.input_dim(); }
  int act_dim() const { return net.output_dim(); }
};

inline void init_uniform(MlpParams& net, Rng& rng) {
  for (auto& layer : net.layers) {
    const double k = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = uniform(rng, -k, k);
    layer.bias.setZero();
  }
}

// Orthogonal matrix of the requested shape: orthonormal rows when
// rows <= cols, orthonormal columns otherwise.
inline Eigen::MatrixXd orthogonal_matrix(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng) {
  const bool wide = rows <= cols;
  const Eigen::Index tall_rows = wide ? cols : rows;
  const Eigen::Index tall_cols = wide ? rows : cols;
  Eigen::MatrixXd a(tall_rows, tall_cols);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall_rows, tall_cols);
  // Sign convention that makes the decomposition unique.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(tall_cols).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < tall_cols; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  q *= gain;
  return wide ? Eigen::MatrixXd(q.transpose()) : q;
}

inline GaussianPolicy init_policy(int obs_dim, int act_dim, std::uint64_t seed,
                                  const std::vector<int>& hidden = kHiddenSizes) {
  GaussianPolicy p{make_mlp(obs_dim, hidden, act_dim), kPolicyStd};
  Rng rng(seed);
  init_uniform(p.net, rng);
  return p;
}

inline MlpParams init_value(int obs_dim, std::uint64_t seed, const std::vector<int>& hidden = kHiddenSizes) {
  MlpParams v = make_mlp(obs_dim, hidden, 1);
  Rng rng(seed);
  for (std::size_t i = 0; i < v.layers.size(); ++i) {
    auto& layer = v.layers[i];
    const double gain = i + 1 == v.layers.size() ? 0.01 : 1.0;
    layer.weight = orthogonal_matrix(layer.weight.rows(), layer.weight.cols(), gain, rng);
    layer.bias.setZero();
  }
  return v;
}

inline Eigen::VectorXd to_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline std::vector<double> policy_forward(const GaussianPolicy& p, std::span<const double> obs) {
  const Eigen::MatrixXd out = mlp_forward(p.net, to_vector(obs));
  return {out.data(), out.data() + out.size()};
}

inline double value_forward(const MlpParams& v, std::span<const double> obs) {
  return mlp_forward(v, to_vector(obs))(0, 0);
}

inline double log_prob(const GaussianPolicy& p, std::span<const double> mean, std::span<const double> action) {
  const double var = p.std * p.std;
  const double norm = std::log(p.std) + 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double d = action[i] - mean[i];
    lp -= d * d / (2.0 * var) + norm;
  }
  return lp;
}

inline std::vector<double> sample_action(const GaussianPolicy& p, std::span<const double> mean, Rng& rng) {
  std::vector<double> a(mean.begin(), mean.end());
  for (auto& v : a) v += p.std * standard_normal(rng);
  return a;
}

// Differential entropy; independent of the network parameters.
inline double entropy(const GaussianPolicy& p) {
  return p.act_dim() * (0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + std::log(p.std));
}

}  // namespace adp
