#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ssep {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  // Reports a measurement without a pass/fail threshold.
  bool informational = false;
};

struct ValidationOptions {
  std::uint64_t seed = 1;
  std::size_t instances = 10;
  std::size_t d = 8;
  std::size_t n = 4;
};

/// Self-checks at small dimension: the enumeration oracle against its serial
/// reference, the two linear-algebra paths against each other, exactness of
/// both EP variants in the Gaussian limit, finite-difference coherence of the
/// inner gradient, and the PC-EP descent, bound and admissibility invariants.
/// Also reports how far the EP means and evidence are from the oracle.
std::vector<CheckResult> run_validation(const ValidationOptions& options = {});

}  // namespace ssep
