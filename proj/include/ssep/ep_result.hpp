#pragma once

#include <cstddef>
#include <vector>

#include "ssep/model.hpp"
#include "ssep/natural.hpp"

namespace ssep {

struct EPResult {
  NaturalTuple site;
  PosteriorMoments moments;
  std::vector<double> energy_trace;
  bool converged = false;
  std::size_t iterations = 0;
  // R-EP: last-sweep change of the site parameters.
  // PC-EP: last outer-iteration energy decrease.
  double max_delta = 0.0;
  // Approximate log P(y | X) = log Z(site) + sum_i log site scale.
  double log_evidence = 0.0;
};

}  // namespace ssep
