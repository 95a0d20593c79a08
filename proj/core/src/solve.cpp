#include "lipcert/solve.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "ipm.hpp"
#include "lipcert/error.hpp"

namespace lipcert {

namespace {

using detail::ConeBlock;
using detail::ConicForm;
using detail::IpmStatus;
using detail::Triplet;

detail::IpmOptions ipm_options(const SolverSettings& s) {
  detail::IpmOptions o;
  o.max_iterations = s.max_iterations;
  o.gap_tolerance = s.gap_tolerance;
  o.feasibility_tolerance = s.feasibility_tolerance;
  o.time_limit_seconds = s.time_limit_seconds;
  return o;
}

SolveStatus convert(IpmStatus s) {
  switch (s) {
    case IpmStatus::kOptimal: return SolveStatus::kOptimal;
    case IpmStatus::kNearOptimal: return SolveStatus::kNearOptimal;
    case IpmStatus::kInfeasible: return SolveStatus::kInfeasible;
    case IpmStatus::kTimeLimit: return SolveStatus::kTimeLimit;
    case IpmStatus::kNumericalFailure: return SolveStatus::kNumericalFailure;
  }
  return SolveStatus::kNumericalFailure;
}

void fill_assignments(const SdpProblem& problem, Solution& sol) {
  for (const auto& v : problem.variables) sol.assignments[v.name] = variable_value(v, sol.y);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// min t  s.t.  F_b(y; y_coord = value) + t I >= 0,  t >= -1.
ConicForm margin_form(const ConicForm& base, int coord, double value) {
  ConicForm form;
  form.num_coords = base.num_coords;
  const int t = base.num_coords - 1;
  form.objective = Eigen::VectorXd::Zero(form.num_coords);
  form.objective(t) = 1.0;
  auto remap = [coord](int j) { return j > coord ? j - 1 : j; };

  for (const ConeBlock& b : base.blocks) {
    ConeBlock nb;
    nb.size = b.size;
    nb.diagonal = b.diagonal;
    nb.constant = b.constant;
    for (std::size_t k = 0; k < b.coords.size(); ++k) {
      if (b.coords[k] == coord) {
        for (const auto& e : b.entries[k]) {
          if (b.diagonal) nb.constant(e.row, 0) += value * e.value;
          else nb.constant(e.row, e.col) += value * e.value;
        }
        continue;
      }
      nb.coords.push_back(remap(b.coords[k]));
      nb.entries.push_back(b.entries[k]);
    }
    std::vector<Triplet> identity;
    for (int r = 0; r < b.size; ++r) identity.push_back({r, r, 1.0});
    nb.coords.push_back(t);
    nb.entries.push_back(std::move(identity));
    form.blocks.push_back(std::move(nb));
  }
  ConeBlock bound;
  bound.size = 1;
  bound.diagonal = true;
  bound.constant = Eigen::MatrixXd::Constant(1, 1, 1.0);
  bound.coords.push_back(t);
  bound.entries.push_back({{0, 0, 1.0}});
  form.blocks.push_back(std::move(bound));
  return form;
}

Solution solve_bisection(const SdpProblem& problem, const SolverSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  if (problem.objective.size() != 1 || problem.objective.front().second != 1.0) {
    throw Error(ErrorCode::kInvalidValue, "bisection needs a single objective variable with coefficient 1");
  }
  const int coord = problem.objective.front().first;

  Solution sol;
  sol.backend = std::string(backend_name(Backend::kBisection));
  MarginResult last;
  auto oracle = [&](double s) {
    MarginResult r = feasibility_margin(problem, coord, s * s, settings);
    sol.iterations += r.iterations;
    const bool ok = r.solved && r.margin <= 0.0;
    if (ok) last = std::move(r);
    return ok;
  };

  double hi = 1.0;
  while (!oracle(hi)) {
    hi *= 2.0;
    if (hi > 1e8) {
      sol.status = SolveStatus::kNumericalFailure;
      sol.message = "no feasible upper bracket found";
      sol.wall_ms = elapsed_ms(start);
      return sol;
    }
  }
  const BisectionResult b = bisect_feasibility(oracle, 0.0, hi, settings.bisection_tolerance);
  if (!oracle(b.value)) {
    sol.status = SolveStatus::kNumericalFailure;
    sol.message = "bisection endpoint lost feasibility";
    sol.wall_ms = elapsed_ms(start);
    return sol;
  }
  sol.status = SolveStatus::kOptimal;
  sol.objective = b.value * b.value;
  sol.y = last.y;
  sol.relative_gap = settings.bisection_tolerance;
  sol.lmi_residual = std::max(0.0, last.margin);
  fill_assignments(problem, sol);
  sol.wall_ms = elapsed_ms(start);
  return sol;
}

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::kIpm ? "ipm" : "bisection"; }

Backend backend_from_env() {
  const char* value = std::getenv("LIPCERT_BACKEND");
  if (value == nullptr || *value == '\0') return Backend::kIpm;
  const std::string_view v(value);
  if (v == "ipm") return Backend::kIpm;
  if (v == "bisection") return Backend::kBisection;
  throw Error(ErrorCode::kInvalidValue, "unknown LIPCERT_BACKEND '" + std::string(v) + "'");
}

std::string_view solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kNearOptimal: return "near_optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
  }
  return "numerical_failure";
}

Solution solve_sdp(const SdpProblem& problem, const SolverSettings& settings) {
  if (settings.gap_tolerance <= 0.0 || settings.feasibility_tolerance <= 0.0 || settings.max_iterations < 1) {
    throw Error(ErrorCode::kInvalidValue, "solver tolerances and iteration limit must be positive");
  }
  if (settings.backend == Backend::kBisection) return solve_bisection(problem, settings);

  const auto start = std::chrono::steady_clock::now();
  const ConicForm form = detail::lower_problem(problem);
  const detail::IpmResult r = detail::solve_conic(form, ipm_options(settings));
  Solution sol;
  sol.backend = std::string(backend_name(Backend::kIpm));
  sol.status = convert(r.status);
  sol.objective = r.objective;
  sol.iterations = r.iterations;
  sol.relative_gap = r.relative_gap;
  sol.lmi_residual = r.lmi_residual;
  sol.message = r.message;
  if (sol.ok()) {
    sol.y = r.y;
    fill_assignments(problem, sol);
  }
  sol.wall_ms = elapsed_ms(start);
  return sol;
}

BisectionResult bisect_feasibility(const std::function<bool(double)>& feasible, double lo, double hi, double tol) {
  if (!(tol > 0.0) || lo > hi) throw Error(ErrorCode::kBracketInvalid, "bracket needs lo <= hi and tol > 0");
  BisectionResult out;
  if (lo == hi) {
    out.value = hi;
    return out;
  }
  ++out.evaluations;
  if (!feasible(hi)) throw Error(ErrorCode::kBracketInvalid, "problem is infeasible at the upper bracket");
  bool moved = false;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    ++out.evaluations;
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
      moved = true;
    }
  }
  out.value = hi;
  out.clamped_at_lo = !moved;
  return out;
}

MarginResult feasibility_margin(const SdpProblem& problem, int coord, double value, const SolverSettings& settings) {
  const ConicForm base = detail::lower_problem(problem);
  if (coord < 0 || coord >= base.num_coords) throw Error(ErrorCode::kInvalidValue, "coordinate out of range");
  const ConicForm form = margin_form(base, coord, value);
  const detail::IpmResult r = detail::solve_conic(form, ipm_options(settings));
  MarginResult out;
  out.iterations = r.iterations;
  out.solved = r.status == IpmStatus::kOptimal || r.status == IpmStatus::kNearOptimal;
  out.margin = r.objective;
  out.y = Eigen::VectorXd::Zero(base.num_coords);
  for (int j = 0; j < base.num_coords; ++j) {
    if (j == coord) out.y(j) = value;
    else out.y(j) = r.y(j > coord ? j - 1 : j);
  }
  return out;
}

}  // namespace lipcert
