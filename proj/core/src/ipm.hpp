#pragma once

// Internal interior-point machinery. Not installed.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lipcert/sdp_problem.hpp"

namespace lipcert::detail {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// One cone of the problem: F0 + sum_i y_i F_i >= 0. Diagonal blocks are
/// products of scalar cones and only use row == col entries.
struct ConeBlock {
  int size = 0;
  bool diagonal = false;
  Eigen::MatrixXd constant;  // size x size, or size x 1 when diagonal
  std::vector<int> coords;
  std::vector<std::vector<Triplet>> entries;  // full storage (both triangles)
};

/// minimize objective^T y  s.t.  F_b(y) >= 0 for every block b.
struct ConicForm {
  int num_coords = 0;
  Eigen::VectorXd objective;
  std::vector<ConeBlock> blocks;
};

/// Lowers a modeling-layer problem, adding one cone per variable floor.
ConicForm lower_problem(const SdpProblem& problem);

struct IpmOptions {
  int max_iterations = 100;
  double gap_tolerance = 1e-8;
  double feasibility_tolerance = 1e-8;
  double time_limit_seconds = 600.0;
};

enum class IpmStatus { kOptimal, kNearOptimal, kInfeasible, kTimeLimit, kNumericalFailure };

struct IpmResult {
  IpmStatus status = IpmStatus::kNumericalFailure;
  Eigen::VectorXd y;
  int iterations = 0;
  double objective = 0.0;    // objective^T y
  double lower_bound = 0.0;  // -<F0, X>
  double relative_gap = 0.0;
  double lmi_residual = 0.0;         // relative ||F(y) - Z||
  double multiplier_residual = 0.0;  // relative ||<F_i, X> - c_i||
  std::string message;
};

IpmResult solve_conic(const ConicForm& form, const IpmOptions& options);

}  // namespace lipcert::detail
