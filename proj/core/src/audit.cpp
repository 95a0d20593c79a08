#include "lipcert/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lipcert/error.hpp"
#include "lipcert/lmi.hpp"
#include "lipcert/statespace.hpp"

namespace lipcert {

namespace {

using Eigen::MatrixXd;

class MultiplierSource {
 public:
  explicit MultiplierSource(const Certificate& cert) : cert_(cert) {}

  const MatrixXd& get(const std::string& name, Eigen::Index dim) const {
    auto it = cert_.multipliers.find(name);
    if (it == cert_.multipliers.end()) {
      throw Error(ErrorCode::kDimensionMismatch, "certificate has no multiplier '" + name + "'");
    }
    if (it->second.rows() != dim || it->second.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "multiplier '" + name + "' should be " + std::to_string(dim) +
                                                     "x" + std::to_string(dim));
    }
    return it->second;
  }

 private:
  const Certificate& cert_;
};

double min_eigenvalue(const MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double off_diagonal_max(const MatrixXd& m) {
  MatrixXd off = m;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff();
}

// Block-diagonal matrix with `copies` copies of q.
MatrixXd repeat_diagonal(const MatrixXd& q, int copies) {
  const auto d = q.rows();
  MatrixXd out = MatrixXd::Zero(d * copies, d * copies);
  for (int k = 0; k < copies; ++k) out.block(k * d, k * d, d, d) = q;
  return out;
}

struct Checks {
  AuditReport& report;
  double tol;
  int multiplier_failures = 0;

  void fail(const std::string& message) {
    report.failures.push_back(message);
    ++multiplier_failures;
  }

  void block(const std::string& label, const MatrixXd& m) {
    const double e = min_eigenvalue(m);
    report.blocks.push_back({label, e});
    if (e < -tol) report.failures.push_back(label + ": minimum eigenvalue " + std::to_string(e));
  }

  void lambda(const std::string& name, const MatrixXd& l) {
    if (off_diagonal_max(l) > 0.0) fail(name + " is not diagonal");
    if (l.diagonal().minCoeff() < 0.0) fail(name + " has a negative diagonal entry");
  }

  void psd(const std::string& name, const MatrixXd& p) {
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol) fail(name + " is not symmetric");
    if (min_eigenvalue(p) < -tol) fail(name + " is not positive semidefinite");
  }

  void symmetric(const std::string& name, const MatrixXd& q, bool diagonal) {
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > tol) fail(name + " is not symmetric");
    if (diagonal && off_diagonal_max(q) > 0.0) fail(name + " must be diagonal");
  }
};

void audit_state_space(const ValidatedNetwork& net, const Certificate& cert, Checks& checks) {
  const MultiplierSource src(cert);
  const PoolingPlan plan = pooling_plan(net);
  const double g2 = cert.gamma_tilde * cert.gamma_tilde;
  const int terminal = net.terminal_layer();
  std::optional<MatrixXd> q_prev;  // Q of the previous layer; nullopt means -gamma_tilde^2 I

  for (int i : net.conv_layers()) {
    const auto& conv = std::get<ConvLayerSpec>(net.layer(i));
    const StateSpaceRealization ss = realize_fir(conv);
    const int nx = ss.state_dim();
    const int cin = ss.input_dim();
    const int cout = ss.output_dim();

    MatrixXd lambda = MatrixXd::Identity(cout, cout);
    MatrixXd q = -MatrixXd::Identity(cout, cout);
    if (i != terminal) {
      lambda = src.get(lambda_name(i), cout);
      q = src.get(q_name(i), cout);
      checks.lambda(lambda_name(i), lambda);
      checks.symmetric(q_name(i), q, plan.diagonal_q[static_cast<std::size_t>(i)]);
    }
    MatrixXd p = MatrixXd::Zero(nx, nx);
    if (nx > 0) {
      p = src.get(p_name(i), nx);
      checks.psd(p_name(i), p);
    }

    const int u = nx;
    const int y = nx + cin;
    MatrixXd m = MatrixXd::Zero(nx + cin + cout, nx + cin + cout);
    m.block(0, 0, nx, nx) = p - ss.A.transpose() * p * ss.A;
    m.block(0, u, nx, cin) = -ss.A.transpose() * p * ss.B;
    m.block(0, y, nx, cout) = -ss.C.transpose() * lambda;
    m.block(u, u, cin, cin) = (q_prev ? MatrixXd(-*q_prev) : MatrixXd(g2 * MatrixXd::Identity(cin, cin))) -
                              ss.B.transpose() * p * ss.B;
    m.block(u, y, cin, cout) = -ss.D.transpose() * lambda;
    m.block(y, y, cout, cout) = 2.0 * lambda + q;
    m.block(u, 0, cin, nx) = m.block(0, u, nx, cin).transpose();
    m.block(y, 0, cout, nx) = m.block(0, y, nx, cout).transpose();
    m.block(y, u, cout, cin) = m.block(u, y, cin, cout).transpose();
    checks.block("conv_" + std::to_string(i), m);
    q_prev = q;
  }

  const auto& dense = net.dense_layers();
  for (std::size_t k = 0; k < dense.size(); ++k) {
    const int i = dense[k];
    const MatrixXd& w = std::get<DenseLayerSpec>(net.layer(i)).weight;
    const auto nin = w.cols();
    const auto nout = w.rows();
    MatrixXd supply;  // -Q_prev
    if (!q_prev) {
      supply = g2 * MatrixXd::Identity(nin, nin);
    } else if (k == 0) {
      supply = -repeat_diagonal(*q_prev, static_cast<int>(nin / q_prev->rows()));
    } else {
      supply = -*q_prev;
    }
    MatrixXd m = MatrixXd::Zero(nin + nout, nin + nout);
    m.topLeftCorner(nin, nin) = supply;
    if (i == terminal) {
      m.topRightCorner(nin, nout) = -w.transpose();
      m.bottomRightCorner(nout, nout) = MatrixXd::Identity(nout, nout);
      m.bottomLeftCorner(nout, nin) = -w;
      checks.block("final_" + std::to_string(i), m);
      break;
    }
    const MatrixXd& lambda = src.get(lambda_name(i), nout);
    const MatrixXd& q = src.get(q_name(i), nout);
    checks.lambda(lambda_name(i), lambda);
    checks.symmetric(q_name(i), q, false);
    m.topRightCorner(nin, nout) = -w.transpose() * lambda;
    m.bottomLeftCorner(nout, nin) = -lambda * w;
    m.bottomRightCorner(nout, nout) = 2.0 * lambda + q;
    checks.block("dense_" + std::to_string(i), m);
    q_prev = q;
  }
}

void audit_dense(const ValidatedNetwork& net, const Certificate& cert, Checks& checks) {
  if (!cert.n0) throw Error(ErrorCode::kDimensionMismatch, "dense-sdp certificate has no n0");
  const MultiplierSource src(cert);
  const std::vector<UnrolledLayer> layers = unroll_network(net, *cert.n0);
  std::vector<Eigen::Index> offsets;
  Eigen::Index size = 0;
  for (const auto& l : layers) {
    offsets.push_back(size);
    size += l.weight.cols();
  }
  MatrixXd m = MatrixXd::Zero(size, size);
  const auto n_in = layers.front().weight.cols();
  m.topLeftCorner(n_in, n_in) = cert.gamma * cert.gamma * MatrixXd::Identity(n_in, n_in);
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const MatrixXd& w = layers[k].weight;
    const std::string name = lambda_name(layers[k].source_layer);
    const MatrixXd& lambda = src.get(name, w.rows());
    checks.lambda(name, lambda);
    m.block(offsets[k + 1], offsets[k + 1], w.rows(), w.rows()) += 2.0 * lambda;
    m.block(offsets[k + 1], offsets[k], w.rows(), w.cols()) = -lambda * w;
    m.block(offsets[k], offsets[k + 1], w.cols(), w.rows()) = -w.transpose() * lambda;
  }
  const MatrixXd& last = layers.back().weight;
  m.block(offsets.back(), offsets.back(), last.cols(), last.cols()) -= last.transpose() * last;
  checks.block("unrolled", m);
}

int telescoping_length(const ValidatedNetwork& net, const Certificate& cert, const AuditOptions& options) {
  if (auto implied = net.implied_input_length()) return *implied;
  if (options.n0) return *options.n0;
  if (cert.n0) return *cert.n0;
  const int factor = net.total_pool_factor();
  return (16 + factor - 1) / factor * factor;
}

}  // namespace

AuditReport audit_certificate(const ValidatedNetwork& net, const Certificate& cert, const AuditOptions& options) {
  AuditReport report;
  Checks checks{report, options.tolerance};

  if (cert.method == Method::kSsSdp) {
    audit_state_space(net, cert, checks);
  } else if (cert.method == Method::kDenseSdp) {
    audit_dense(net, cert, checks);
  } else {
    throw Error(ErrorCode::kDimensionMismatch, "only SDP certificates can be audited");
  }
  report.blocks_ok = std::all_of(report.blocks.begin(), report.blocks.end(),
                                 [&](const BlockCheck& b) { return b.min_eigenvalue >= -options.tolerance; });
  report.multipliers_ok = checks.multiplier_failures == 0;

  const double mu = cert.method == Method::kSsSdp ? pooling_plan(net).mu_product : 1.0;
  const double expected = cert.gamma_tilde * mu;
  const double rel = std::abs(cert.gamma - expected) / std::max(1.0, std::abs(expected));
  report.gamma_consistent = rel <= options.tolerance && std::abs(cert.mu_product - mu) <= options.tolerance * mu &&
                            std::isfinite(cert.gamma) && cert.gamma >= 0.0;
  if (!report.gamma_consistent) report.failures.push_back("gamma != gamma_tilde * mu");

  const int n0 = telescoping_length(net, cert, options);
  report.telescoping_input_length = n0;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  const int c0 = net.spec().input_channels;
  const double scales[] = {1.0, 1e-1, 1e-2};
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < options.telescoping_pairs; ++t) {
    MatrixXd a(c0, n0);
    MatrixXd d(c0, n0);
    for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = normal(rng);
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = normal(rng);
    const MatrixXd b = a + scales[t % 3] * d;
    const double in2 = (a - b).squaredNorm();
    if (in2 == 0.0) continue;
    const double out2 = (forward(net, a) - forward(net, b)).squaredNorm();
    worst = std::min(worst, (cert.gamma * cert.gamma * in2 - out2) / in2);
  }
  report.worst_telescoping_margin = worst;
  report.telescoping_ok = worst >= -options.tolerance;
  if (!report.telescoping_ok) report.failures.push_back("empirical pair exceeds the certified bound");
  return report;
}

}  // namespace lipcert
