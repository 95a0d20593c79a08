#include "lipcert/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lipcert/error.hpp"
#include "lipcert/statespace.hpp"

namespace lipcert {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double quotient(const ValidatedNetwork& net, const MatrixXd& a, const MatrixXd& b) {
  const double den = (a - b).norm();
  if (den == 0.0) return 0.0;
  return (forward(net, a) - forward(net, b)).norm() / den;
}

MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = normal(rng);
  return m;
}

MatrixXd numerical_jacobian(const ValidatedNetwork& net, const MatrixXd& x, double h) {
  const Eigen::Index n = x.size();
  MatrixXd jac;
  for (Eigen::Index k = 0; k < n; ++k) {
    MatrixXd xp = x;
    MatrixXd xm = x;
    xp(k) += h;
    xm(k) -= h;
    const VectorXd col = (forward(net, xp) - forward(net, xm)) / (2.0 * h);
    if (k == 0) jac.resize(col.size(), n);
    jac.col(k) = col;
  }
  return jac;
}

}  // namespace

double spectral_product(const ValidatedNetwork& net, int n0) {
  const DimTrace dims = infer_dims(net, n0);
  double product = 1.0;
  SignalShape shape = dims.input;
  for (int i = 0; i < net.num_layers(); ++i) {
    const LayerSpec& layer = net.layer(i);
    if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) {
      product *= spectral_norm(toeplitz_matrix(*conv, shape.length));
    } else if (const auto* pool = std::get_if<PoolLayerSpec>(&layer)) {
      if (pool->kind == PoolKind::kAverage) product /= std::sqrt(static_cast<double>(pool->window));
    } else if (const auto* dense = std::get_if<DenseLayerSpec>(&layer)) {
      product *= spectral_norm(dense->weight);
    }
    shape = dims.layers[static_cast<std::size_t>(i)];
  }
  return product;
}

double empirical_lower_bound(const ValidatedNetwork& net, int n0, int trials, std::uint64_t seed,
                             const EmpiricalOptions& options) {
  if (trials < 1) throw Error(ErrorCode::kInvalidValue, "trials must be >= 1");
  infer_dims(net, n0);
  const int c0 = net.spec().input_channels;
  double best = 0.0;

  for (int t = 0; t < trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);

    const MatrixXd a = gaussian(rng, c0, n0);
    const MatrixXd b = gaussian(rng, c0, n0);
    best = std::max(best, quotient(net, a, b));

    const MatrixXd x = gaussian(rng, c0, n0);
    const double h = options.fd_step * std::max(1.0, x.norm());
    const MatrixXd jac = numerical_jacobian(net, x, h);
    VectorXd v = flatten_signal(gaussian(rng, c0, n0));
    for (int k = 0; k < options.power_iterations; ++k) {
      const VectorXd next = jac.transpose() * (jac * v);
      const double norm = next.norm();
      if (norm == 0.0) break;
      v = next / norm;
    }
    v.normalize();
    const MatrixXd dv = unflatten_signal(v, c0);
    best = std::max(best, quotient(net, x + h * dv, x - h * dv));
  }
  return best;
}

}  // namespace lipcert
