#include "lipcert/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "lipcert/error.hpp"

namespace lipcert {

StateSpaceRealization realize_fir(const ConvLayerSpec& conv) {
  const int taps = conv.taps();
  const int c_in = conv.in_channels();
  const int c_out = conv.out_channels();
  const int blocks = taps - 1;
  const int n_x = blocks * c_in;

  StateSpaceRealization ss;
  ss.A = Eigen::MatrixXd::Zero(n_x, n_x);
  ss.B = Eigen::MatrixXd::Zero(n_x, c_in);
  ss.C = Eigen::MatrixXd::Zero(c_out, n_x);
  ss.D = conv.kernel.front();
  if (n_x == 0) return ss;

  ss.A.topRightCorner(n_x - c_in, n_x - c_in).setIdentity();
  ss.B.bottomRows(c_in).setIdentity();
  // Block b of the state holds u_{k-(blocks-b)}, which is weighted by K_{blocks-b}.
  for (int b = 0; b < blocks; ++b) {
    ss.C.middleCols(b * c_in, c_in) = conv.kernel[static_cast<std::size_t>(blocks - b)];
  }
  return ss;
}

std::vector<Eigen::MatrixXd> impulse_response(const StateSpaceRealization& ss, int steps) {
  std::vector<Eigen::MatrixXd> markov;
  markov.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  if (steps <= 0) return markov;
  markov.push_back(ss.D);
  Eigen::MatrixXd AkB = ss.B;
  for (int k = 1; k < steps; ++k) {
    markov.push_back(ss.C * AkB);
    AkB = ss.A * AkB;
  }
  return markov;
}

Eigen::MatrixXd simulate(const StateSpaceRealization& ss, const Eigen::MatrixXd& input) {
  if (input.rows() != ss.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "simulate: input channel count mismatch");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ss.state_dim());
  Eigen::MatrixXd y(ss.output_dim(), input.cols());
  for (Eigen::Index k = 0; k < input.cols(); ++k) {
    y.col(k) = ss.C * x + ss.D * input.col(k);
    x = ss.A * x + ss.B * input.col(k);
  }
  return y;
}

Eigen::MatrixXd toeplitz_matrix(const ConvLayerSpec& conv, int horizon) {
  if (horizon < 1) throw Error(ErrorCode::kInvalidValue, "toeplitz_matrix: horizon must be >= 1");
  const int c_in = conv.in_channels();
  const int c_out = conv.out_channels();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(c_out * horizon, c_in * horizon);
  for (int k = 0; k < horizon; ++k) {
    for (int j = 0; j <= std::min(k, conv.taps() - 1); ++j) {
      T.block(k * c_out, (k - j) * c_in, c_out, c_in) = conv.kernel[static_cast<std::size_t>(j)];
    }
  }
  return T;
}

Eigen::MatrixXd average_pool_matrix(int channels, int length, int window) {
  if (window < 1 || length % window != 0) {
    throw Error(ErrorCode::kIndivisiblePooling, "pool window does not divide the signal length");
  }
  const int out_len = length / window;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(channels * out_len, channels * length);
  const double w = 1.0 / window;
  for (int k = 0; k < out_len; ++k)
    for (int s = 0; s < window; ++s)
      for (int ch = 0; ch < channels; ++ch) P(k * channels + ch, (k * window + s) * channels + ch) = w;
  return P;
}

double frequency_gain(const ConvLayerSpec& conv, double omega) {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(conv.out_channels(), conv.in_channels());
  for (int j = 0; j < conv.taps(); ++j) {
    H += conv.kernel[static_cast<std::size_t>(j)].cast<std::complex<double>>() *
         std::polar(1.0, -omega * j);
  }
  if (H.rows() == 1 && H.cols() == 1) return std::abs(H(0, 0));
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(H).singularValues()(0);
}

double fir_l2_gain(const ConvLayerSpec& conv, int grid_points, bool refine) {
  if (grid_points < 2) throw Error(ErrorCode::kInvalidValue, "fir_l2_gain: need at least 2 grid points");
  const double pi = std::numbers::pi;
  const double step = pi / (grid_points - 1);
  double best = -1.0;
  int arg = 0;
  for (int k = 0; k < grid_points; ++k) {
    const double g = frequency_gain(conv, k * step);
    if (g > best) {
      best = g;
      arg = k;
    }
  }
  if (!refine) return best;

  // Golden-section search on the bracket around the grid maximizer.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(0.0, (arg - 1) * step);
  double b = std::min(pi, (arg + 1) * step);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = frequency_gain(conv, x1);
  double f2 = frequency_gain(conv, x2);
  for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = frequency_gain(conv, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = frequency_gain(conv, x1);
    }
  }
  return std::max({best, f1, f2});
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (std::min(m.rows(), m.cols()) <= 64) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  }
  // The top eigenvalue of the Gram matrix is well conditioned.
  const Eigen::MatrixXd gram = m.rows() < m.cols() ? Eigen::MatrixXd(m * m.transpose())
                                                   : Eigen::MatrixXd(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace lipcert
