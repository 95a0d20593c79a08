#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "lipcert/sdp_problem.hpp"

namespace lipcert {

enum class Backend { kIpm, kBisection };

std::string_view backend_name(Backend b);

/// Reads LIPCERT_BACKEND ("ipm" or "bisection"); unset means ipm.
/// Throws Error{InvalidValue} for other values.
Backend backend_from_env();

struct SolverSettings {
  int max_iterations = 100;
  double gap_tolerance = 1e-8;
  double feasibility_tolerance = 1e-8;
  double psd_floor = 1e-8;
  double time_limit_seconds = 600.0;
  Backend backend = Backend::kIpm;
  double bisection_tolerance = 1e-7;  // on the square root of the objective variable
};

enum class SolveStatus { kOptimal, kNearOptimal, kInfeasible, kTimeLimit, kNumericalFailure };

std::string_view solve_status_name(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double objective = 0.0;
  Eigen::VectorXd y;
  std::map<std::string, Eigen::MatrixXd> assignments;  // empty unless optimal or near optimal
  int iterations = 0;
  double wall_ms = 0.0;
  double relative_gap = 0.0;
  double lmi_residual = 0.0;
  std::string backend;
  std::string message;

  bool ok() const { return status == SolveStatus::kOptimal || status == SolveStatus::kNearOptimal; }
};

/// Minimizes the problem's objective. The bisection backend requires the
/// objective to be a single nonnegative scalar variable with coefficient 1.
Solution solve_sdp(const SdpProblem& problem, const SolverSettings& settings = {});

struct BisectionResult {
  double value = 0.0;
  bool clamped_at_lo = false;  // every probe above lo was feasible
  int evaluations = 0;
};

/// Smallest feasible value in [lo, hi] to within tol, assuming feasibility is
/// monotone. Throws Error{BracketInvalid} if hi is infeasible or lo > hi.
BisectionResult bisect_feasibility(const std::function<bool(double)>& feasible, double lo, double hi, double tol);

struct MarginResult {
  bool solved = false;
  double margin = 0.0;  // min t with F(y) + t I >= 0; feasible iff margin <= 0
  Eigen::VectorXd y;    // full decision vector with the fixed coordinate filled in
  int iterations = 0;
};

/// Fixes coordinate `coord` to `value` and measures how far the remaining
/// constraints are from feasibility.
MarginResult feasibility_margin(const SdpProblem& problem, int coord, double value, const SolverSettings& settings);

}  // namespace lipcert
