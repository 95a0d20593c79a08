#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lipcert/certificate.hpp"
#include "lipcert/model.hpp"

namespace lipcert {

struct AuditOptions {
  double tolerance = 1e-6;
  int telescoping_pairs = 100;
  std::uint64_t seed = 0;
  std::optional<int> n0;  // input length for the telescoping check
};

struct BlockCheck {
  std::string label;
  double min_eigenvalue = 0.0;
};

struct AuditReport {
  std::vector<BlockCheck> blocks;
  bool blocks_ok = false;
  bool multipliers_ok = false;
  bool gamma_consistent = false;
  bool telescoping_ok = false;
  double worst_telescoping_margin = 0.0;  // min of (gamma^2 |dx|^2 - |dy|^2) / |dx|^2
  int telescoping_input_length = 0;
  std::vector<std::string> failures;

  bool pass() const { return blocks_ok && multipliers_ok && gamma_consistent && telescoping_ok; }
};

/// Rebuilds every layer inequality at the certificate's multipliers and
/// checks it numerically, then runs an empirical check of the claimed bound
/// on random input pairs. Throws Error{DimensionMismatch} when the
/// certificate does not fit the network.
AuditReport audit_certificate(const ValidatedNetwork& net, const Certificate& cert,
                              const AuditOptions& options = {});

}  // namespace lipcert
