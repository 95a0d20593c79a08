#pragma once

#include <cstdint>

#include "lipcert/model.hpp"

namespace lipcert {

/// Product of per-layer operator norms: Toeplitz norms for conv layers at
/// their horizon, weight norms for dense layers, 1/sqrt(l) for average pools
/// and 1 for max pools. Throws Error{IndivisiblePooling | FlattenMismatch}.
double spectral_product(const ValidatedNetwork& net, int n0);

struct EmpiricalOptions {
  int power_iterations = 50;
  double fd_step = 1e-5;  // relative to the input norm
};

/// Largest difference quotient found over `trials` random Gaussian pairs and
/// `trials` power-iteration probes of the numerical Jacobian. Every reported
/// value is an exact pair quotient. Deterministic in seed; trial t uses its
/// own seed stream.
double empirical_lower_bound(const ValidatedNetwork& net, int n0, int trials, std::uint64_t seed,
                             const EmpiricalOptions& options = {});

}  // namespace lipcert
