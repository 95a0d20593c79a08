#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lipcert/model.hpp"

namespace lipcert {

/// x_{k+1} = A x_k + B u_k,  y_k = C x_k + D u_k  with x_0 = 0.
struct StateSpaceRealization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(D.cols()); }
  int output_dim() const { return static_cast<int>(D.rows()); }
};

/// Canonical shift realization of a causal FIR convolution. The state holds
/// the last l-1 inputs, oldest block first: A shifts blocks up, B writes the
/// newest input into the last block, C = [K_{l-1} ... K_1], D = K_0.
StateSpaceRealization realize_fir(const ConvLayerSpec& conv);

/// Markov parameters D, CB, CAB, ... for `steps` steps.
std::vector<Eigen::MatrixXd> impulse_response(const StateSpaceRealization& ss, int steps);

/// Output of the realization driven by `input` (channels x length) from x_0 = 0.
Eigen::MatrixXd simulate(const StateSpaceRealization& ss, const Eigen::MatrixXd& input);

/// Dense (c_out*N) x (c_in*N) matrix of the zero-padded convolution at
/// horizon N in the global flatten order. Block (k, k-j) equals K_j.
Eigen::MatrixXd toeplitz_matrix(const ConvLayerSpec& conv, int horizon);

/// Block averaging matrix of a pool layer acting on flattened
/// channels x length signals.
Eigen::MatrixXd average_pool_matrix(int channels, int length, int window);

/// Largest singular value of the frequency response sum_j K_j e^{-i w j}.
double frequency_gain(const ConvLayerSpec& conv, double omega);

/// sup over [0, pi] of the frequency gain, estimated on a uniform grid of
/// grid_points points. With refine, a golden-section pass around the grid
/// argmax tightens the estimate from below.
double fir_l2_gain(const ConvLayerSpec& conv, int grid_points = 2048, bool refine = true);

/// Largest singular value of a dense matrix.
double spectral_norm(const Eigen::MatrixXd& m);

}  // namespace lipcert
