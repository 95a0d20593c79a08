#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lipcert/model.hpp"
#include "lipcert/sdp_problem.hpp"
#include "lipcert/statespace.hpp"

namespace lipcert {

inline constexpr double kDefaultPsdFloor = 1e-8;

struct PoolTie {
  int pool_layer = -1;
  int conv_layer = -1;  // conv layer whose output the pool consumes
};

struct PoolingPlan {
  double mu_product = 1.0;
  std::vector<bool> diagonal_q;  // per layer index; true for a conv followed by a max pool
  std::vector<PoolTie> ties;
};

PoolingPlan pooling_plan(const ValidatedNetwork& net);

/// The incoming supply of a layer block: either -gamma_tilde^2 I (first
/// layer) or -blkdiag(Q, ..., Q) with `copies` copies of a previous Q.
struct IncomingSupply {
  VariableRef var;
  int copies = 1;
  bool is_gamma = false;
  int size() const { return is_gamma ? copies : var.dim * copies; }
};

IncomingSupply gamma_supply(const VariableRef& gamma_sq, int size);
IncomingSupply layer_supply(const VariableRef& q, int copies = 1);

/// Multipliers of a hidden layer. Without them the layer is terminal and the
/// block uses Lambda = I, Q = -I, which gives the bounded-real condition.
struct LayerMultipliers {
  VariableRef q;
  VariableRef lambda;
};

/// [[P - A'PA, -A'PB, -C'L], [., -Q_prev - B'PB, -D'L], [., ., 2L + Q]].
/// p is ignored when the state dimension is zero.
PsdBlock conv_layer_block(const std::string& label, const StateSpaceRealization& ss,
                          const IncomingSupply& incoming, const std::optional<LayerMultipliers>& mult,
                          const std::optional<VariableRef>& p);

/// [[-Q_prev, -W'L], [-LW, 2L + Q]].
PsdBlock fc_layer_block(const std::string& label, const Eigen::MatrixXd& w, const IncomingSupply& incoming,
                        const LayerMultipliers& mult);

/// [[-Q_prev, -W'], [-W, I]].
PsdBlock final_layer_block(const std::string& label, const Eigen::MatrixXd& w, const IncomingSupply& incoming);

enum class ProblemKind { kStateSpace, kDenseOracle };

/// An SdpProblem together with the data needed to read a bound off its solution.
struct CertificationProblem {
  ProblemKind kind = ProblemKind::kStateSpace;
  SdpProblem sdp;
  PoolingPlan plan;
  int gamma_variable = -1;  // id of the squared-bound scalar
  std::optional<int> n0;    // dense oracle only
};

/// Variable names used by the assemblers.
std::string gamma_tilde_name();   // "gamma_tilde_sq"
std::string dense_gamma_name();   // "gamma_sq"
std::string q_name(int layer);
std::string lambda_name(int layer);
std::string p_name(int layer);

/// Layer-wise problem on the state-space realizations. Independent of N_0.
CertificationProblem assemble_ss_sdp(const ValidatedNetwork& net, double psd_floor = kDefaultPsdFloor);

struct UnrolledLayer {
  int source_layer = -1;  // conv or dense layer this map came from
  Eigen::MatrixXd weight;
  bool nonlinear = false;
};

/// Conv layers become Toeplitz matrices at their horizon, average pools are
/// merged into the adjacent linear map. Throws MaxPoolUnsupported.
std::vector<UnrolledLayer> unroll_network(const ValidatedNetwork& net, int n0);

/// Layer-level problem on the unrolled network: one block-tridiagonal LMI
/// with diagonal blocks gamma^2 I, 2L_1, ..., 2L_{m-1} - W_m'W_m and
/// off-diagonal blocks -L_i W_i.
CertificationProblem assemble_dense_oracle_sdp(const ValidatedNetwork& net, int n0,
                                               double psd_floor = kDefaultPsdFloor);

}  // namespace lipcert
