#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ssep/natural.hpp"

namespace ssep {

// Objective value, gradient and optional 2x2 curvature blocks for the
// consecutive variable pairs (0,1), (2,3), ... used as the initial inverse
// Hessian of the limited-memory update. With no blocks the usual
// s'y / y'y scaling is used.
struct BoxEvaluation {
  double value = 0.0;
  Vector gradient;
  std::vector<Eigen::Matrix2d> curvature;
};

using BoxObjective = std::function<BoxEvaluation(const Vector&)>;

struct LbfgsOptions {
  double tol = 1e-8;  // sup-norm of the projected gradient
  std::size_t max_iters = 500;
  std::size_t memory = 10;
  double armijo = 1e-4;
  std::size_t max_backtracks = 40;
  // The objective is convex: a step is also accepted when the gradient at
  // the trial point certifies sufficient decrease, which stays reliable
  // when f is too noisy to resolve it directly.
  bool convex = false;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

enum class BoundState : unsigned char { free, at_lower, at_upper };

struct LbfgsResult {
  Vector x;
  BoxEvaluation eval;
  std::vector<BoundState> bounds;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double projected_gradient = 0.0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
};

Vector project_box(const Vector& x, const Vector& lower, const Vector& upper);

double projected_gradient_sup(const Vector& x, const Vector& g,
                              const Vector& lower, const Vector& upper);

/// Minimizes f over the box lower <= x <= upper (entries may be infinite)
/// with a projected limited-memory BFGS method: the quasi-Newton direction
/// is restricted to the variables that are not held at a bound by the
/// gradient, and steps are projected back into the box during an Armijo
/// backtracking search.
LbfgsResult minimize_box(const BoxObjective& objective, const Vector& x0,
                         const Vector& lower, const Vector& upper,
                         const LbfgsOptions& options = {});

}  // namespace ssep
