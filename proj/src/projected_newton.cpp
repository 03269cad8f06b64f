#include "ssep/projected_newton.hpp"

#include <cmath>

#include "ssep/errors.hpp"

namespace ssep {

namespace {

BoxEvaluation as_box(const NewtonEvaluation& e) {
  BoxEvaluation b;
  b.value = e.value;
  b.gradient = e.gradient;
  return b;
}

// Solves H_ff d = -g_f for the free block after symmetric Jacobi scaling,
// adding a growing ridge until the factorization succeeds.
Vector newton_block(const Matrix& h, const Vector& g,
                    const std::vector<Index>& free) {
  const Index k = static_cast<Index>(free.size());
  Matrix hf(k, k);
  Vector gf(k), scale(k);
  for (Index a = 0; a < k; ++a) {
    gf[a] = g[free[a]];
    const double diag = h(free[a], free[a]);
    scale[a] = diag > 0.0 && std::isfinite(diag) ? 1.0 / std::sqrt(diag) : 1.0;
  }
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      hf(a, b) = scale[a] * h(free[a], free[b]) * scale[b];
    }
  }
  const Vector rhs = -scale.cwiseProduct(gf);
  double ridge = 0.0;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Matrix reg = hf;
    reg.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() == Eigen::Success) {
      const Vector z = llt.solve(rhs);
      if (z.allFinite()) return scale.cwiseProduct(z);
    }
    ridge = ridge == 0.0 ? 1e-12 : ridge * 10.0;
  }
  return scale.cwiseProduct(rhs);
}

}  // namespace

LbfgsResult minimize_box_newton(const NewtonObjective& objective,
                                const Vector& x0, const Vector& lower,
                                const Vector& upper,
                                const NewtonOptions& options) {
  if (x0.size() != lower.size() || x0.size() != upper.size()) {
    throw DimensionMismatch("minimize_box_newton: x0 and bounds differ in size");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("minimize_box_newton: empty box");
  }
  const Index nvar = x0.size();

  LbfgsResult res;
  res.x = project_box(x0, lower, upper);
  NewtonEvaluation cur = objective(res.x, true);
  res.evaluations = 1;
  if (!std::isfinite(cur.value)) {
    throw NumericalFailure("minimize_box_newton: objective not finite at start");
  }

  for (res.iterations = 0; res.iterations < options.max_iters;
       ++res.iterations) {
    res.projected_gradient =
        projected_gradient_sup(res.x, cur.gradient, lower, upper);
    if (res.projected_gradient < options.tol && options.gain_tol <= 0.0) {
      res.status = LbfgsStatus::converged;
      break;
    }

    const Vector gp = res.x - project_box(res.x - cur.gradient, lower, upper);
    const double width = std::min(options.binding_width, gp.norm());
    std::vector<Index> free;
    std::vector<char> held(static_cast<std::size_t>(nvar), 0);
    for (Index i = 0; i < nvar; ++i) {
      const bool near_lo = res.x[i] <= lower[i] + width && cur.gradient[i] > 0.0;
      const bool near_hi = res.x[i] >= upper[i] - width && cur.gradient[i] < 0.0;
      if (near_lo || near_hi) {
        held[i] = 1;
      } else {
        free.push_back(i);
      }
    }

    Vector dir = Vector::Zero(nvar);
    if (!free.empty()) {
      const Vector df = newton_block(cur.hessian, cur.gradient, free);
      for (std::size_t a = 0; a < free.size(); ++a) dir[free[a]] = df[a];
    }
    for (Index i = 0; i < nvar; ++i) {
      if (!held[i]) continue;
      const double hii = cur.hessian(i, i);
      dir[i] = -cur.gradient[i] / (hii > 0.0 && std::isfinite(hii) ? hii : 1.0);
    }

    // Decrease predicted by the quadratic model for the full projected step.
    const double gain =
        -0.5 * cur.gradient.dot(project_box(res.x + dir, lower, upper) - res.x);
    if (res.projected_gradient < options.tol && gain <= options.gain_tol) {
      res.status = LbfgsStatus::converged;
      break;
    }

    bool accepted = false;
    double step = 1.0;
    for (std::size_t bt = 0; bt <= options.max_backtracks; ++bt, step *= 0.5) {
      const Vector trial = project_box(res.x + step * dir, lower, upper);
      const Vector delta = trial - res.x;
      if (delta.cwiseAbs().maxCoeff() == 0.0) break;
      const double slope = cur.gradient.dot(delta);
      NewtonEvaluation ev = objective(trial, false);
      ++res.evaluations;
      if (!std::isfinite(ev.value)) continue;
      // On a convex objective f(trial) - f(x) <= g(trial).delta, so the
      // gradient test certifies sufficient decrease when f itself is too
      // noisy to resolve it.
      const bool ok =
          slope < 0.0 && (ev.value <= cur.value + options.armijo * slope ||
                          ev.gradient.dot(delta) <= options.armijo * slope);
      if (!ok) continue;
      res.x = trial;
      cur = objective(trial, true);
      ++res.evaluations;
      accepted = true;
      break;
    }
    if (!accepted) {
      res.projected_gradient =
          projected_gradient_sup(res.x, cur.gradient, lower, upper);
      res.status = res.projected_gradient < options.tol
                       ? LbfgsStatus::converged
                       : LbfgsStatus::line_search_failed;
      break;
    }
  }
  if (res.iterations >= options.max_iters) {
    res.projected_gradient =
        projected_gradient_sup(res.x, cur.gradient, lower, upper);
    res.status = res.projected_gradient < options.tol
                     ? LbfgsStatus::converged
                     : LbfgsStatus::max_iterations;
  }
  res.eval = as_box(cur);
  res.bounds.resize(static_cast<std::size_t>(nvar));
  for (Index i = 0; i < nvar; ++i) {
    res.bounds[i] = res.x[i] <= lower[i]   ? BoundState::at_lower
                    : res.x[i] >= upper[i] ? BoundState::at_upper
                                           : BoundState::free;
  }
  return res;
}

}  // namespace ssep
