#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipcert/audit.hpp"
#include "lipcert/certificate.hpp"
#include "lipcert/lmi.hpp"
#include "lipcert/model.hpp"
#include "lipcert/solve.hpp"

namespace lipcert {

struct CertifyOptions {
  SolverSettings solver;
  AuditOptions audit;
};

/// Assembles, solves and audits. dense-sdp needs an input length: n0, or the
/// length implied by the dense part. ss-sdp ignores n0 for the problem; the
/// value only feeds the audit's empirical check.
/// Throws Error{MaxPoolUnsupported | SolverFailure | AuditFailure | InvalidValue}.
Certificate certify(const ValidatedNetwork& net, Method method, std::optional<int> n0 = std::nullopt,
                    const CertifyOptions& options = {});

/// Fills the certificate fields from a solved problem (no audit).
Certificate certificate_from_solution(const CertificationProblem& problem, const Solution& solution, Method method);

struct ReportRow {
  std::string method;
  std::optional<int> n0;
  std::optional<int> c1;
  std::optional<int> c2;
  std::optional<std::uint64_t> seed;
  double bound = 0.0;
  std::string kind;  // "upper" or "lower"
  double wall_ms = 0.0;
  std::string status;  // "ok" or "error:<Code>"

  bool operator==(const ReportRow&) const = default;
};

struct EstimateReport {
  std::vector<ReportRow> rows;
};

struct CompareOptions {
  CertifyOptions certify;
  int empirical_trials = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// One row per (method, n0) in method order, then ascending n0. ss-sdp is
/// solved once and replicated across the n0 rows. Per-row failures are
/// recorded in the status column.
EstimateReport compare(const ValidatedNetwork& net, const std::vector<Method>& methods,
                       const std::vector<int>& n0_values, const CompareOptions& options = {});

/// A family of random networks: either one architecture, or the two-stage
/// pooling template for each channel pair (input length from arch).
struct SweepFamily {
  ArchDescriptor arch;
  std::vector<std::pair<int, int>> channel_pairs;
  std::vector<int> n0_values;
  std::vector<std::uint64_t> seeds{0};
};

/// Rows ordered by seed, then family member, then method, then n0.
EstimateReport sweep(const SweepFamily& family, const std::vector<Method>& methods,
                     const CompareOptions& options = {});

/// Parses "a:b:step" or a single integer. Throws Error{ParseError}.
std::vector<int> parse_n0_range(const std::string& text);

inline constexpr const char* kCsvHeader = "method,n0,c1,c2,seed,bound,kind,wall_ms,status";

void write_csv(const EstimateReport& report, std::ostream& out);
/// Throws Error{ParseError} on a malformed document.
EstimateReport read_csv(std::istream& in);

/// Two panels: bound and wall time (log scale) against n0, or against the
/// channel pair when n0 does not vary.
void write_svg(const EstimateReport& report, std::ostream& out);

}  // namespace lipcert
