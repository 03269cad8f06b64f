#include "ssep/projected_lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "ssep/errors.hpp"

namespace ssep {

Vector project_box(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

namespace {

bool held_at_bound(double x, double g, double lo, double hi) {
  return (x <= lo && g > 0.0) || (x >= hi && g < 0.0);
}

std::vector<char> free_mask(const Vector& x, const Vector& g,
                            const Vector& lower, const Vector& upper) {
  std::vector<char> mask(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    mask[i] = held_at_bound(x[i], g[i], lower[i], upper[i]) ? 0 : 1;
  }
  return mask;
}

Vector masked(const Vector& v, const std::vector<char>& mask) {
  Vector out = v;
  for (Index i = 0; i < v.size(); ++i) {
    if (!mask[i]) out[i] = 0.0;
  }
  return out;
}

struct CurvaturePair {
  Vector s;
  Vector y;
};

// r = H0 q on the free variables.
Vector apply_initial(const BoxEvaluation& eval, const Vector& q,
                     const std::vector<char>& mask, double gamma) {
  Vector r = Vector::Zero(q.size());
  const auto& blocks = eval.curvature;
  if (blocks.empty() ||
      static_cast<Index>(2 * blocks.size()) != q.size()) {
    for (Index i = 0; i < q.size(); ++i) {
      if (mask[i]) r[i] = gamma * q[i];
    }
    return r;
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Index i = static_cast<Index>(2 * k);
    Eigen::Matrix2d b = blocks[k];
    const double ridge = 1e-12 * std::max(b.trace(), 1e-300);
    b.diagonal().array() += ridge;
    if (mask[i] && mask[i + 1]) {
      const Eigen::Vector2d rhs(q[i], q[i + 1]);
      const double det = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
      if (det > 0.0 && std::isfinite(det)) {
        const Eigen::Vector2d sol = b.inverse() * rhs;
        r[i] = sol[0];
        r[i + 1] = sol[1];
        continue;
      }
    }
    if (mask[i]) r[i] = q[i] / b(0, 0);
    if (mask[i + 1]) r[i + 1] = q[i + 1] / b(1, 1);
  }
  return r;
}

Vector two_loop(const BoxEvaluation& eval, const std::deque<CurvaturePair>& mem,
                const std::vector<char>& mask, double gamma) {
  const Vector g = masked(eval.gradient, mask);
  Vector q = g;
  std::vector<double> alpha(mem.size(), 0.0);
  std::vector<double> rho(mem.size(), 0.0);
  std::vector<Vector> s(mem.size()), y(mem.size());
  for (std::size_t j = 0; j < mem.size(); ++j) {
    s[j] = masked(mem[j].s, mask);
    y[j] = masked(mem[j].y, mask);
    const double sy = s[j].dot(y[j]);
    rho[j] = sy > 1e-16 * s[j].norm() * y[j].norm() && sy > 0.0 ? 1.0 / sy : 0.0;
  }
  for (std::size_t jj = mem.size(); jj-- > 0;) {
    if (rho[jj] == 0.0) continue;
    alpha[jj] = rho[jj] * s[jj].dot(q);
    q -= alpha[jj] * y[jj];
  }
  Vector r = apply_initial(eval, q, mask, gamma);
  for (std::size_t j = 0; j < mem.size(); ++j) {
    if (rho[j] == 0.0) continue;
    const double beta = rho[j] * y[j].dot(r);
    r += s[j] * (alpha[j] - beta);
  }
  return -masked(r, mask);
}

}  // namespace

double projected_gradient_sup(const Vector& x, const Vector& g,
                              const Vector& lower, const Vector& upper) {
  double sup = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (held_at_bound(x[i], g[i], lower[i], upper[i])) continue;
    sup = std::max(sup, std::abs(g[i]));
  }
  return sup;
}

LbfgsResult minimize_box(const BoxObjective& objective, const Vector& x0,
                         const Vector& lower, const Vector& upper,
                         const LbfgsOptions& options) {
  if (x0.size() != lower.size() || x0.size() != upper.size()) {
    throw DimensionMismatch("minimize_box: x0 and bounds differ in size");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("minimize_box: empty box");
  }

  LbfgsResult res;
  res.x = project_box(x0, lower, upper);
  res.eval = objective(res.x);
  res.evaluations = 1;
  if (!std::isfinite(res.eval.value)) {
    throw NumericalFailure("minimize_box: objective not finite at start");
  }

  std::deque<CurvaturePair> memory;
  double gamma = 1.0;

  for (res.iterations = 0; res.iterations < options.max_iters;
       ++res.iterations) {
    res.projected_gradient =
        projected_gradient_sup(res.x, res.eval.gradient, lower, upper);
    if (res.projected_gradient < options.tol) {
      res.status = LbfgsStatus::converged;
      break;
    }
    const std::vector<char> mask =
        free_mask(res.x, res.eval.gradient, lower, upper);

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        if (memory.empty()) break;
        memory.clear();
      }
      Vector dir = two_loop(res.eval, memory, mask, gamma);
      double slope = res.eval.gradient.dot(dir);
      if (!(slope < 0.0)) {
        memory.clear();
        dir = two_loop(res.eval, memory, mask, gamma);
        slope = res.eval.gradient.dot(dir);
        if (!(slope < 0.0)) break;
      }

      double step = 1.0;
      for (std::size_t bt = 0; bt <= options.max_backtracks; ++bt, step *= 0.5) {
        const Vector trial = project_box(res.x + step * dir, lower, upper);
        const Vector delta = trial - res.x;
        if (delta.cwiseAbs().maxCoeff() == 0.0) break;
        BoxEvaluation ev = objective(trial);
        ++res.evaluations;
        if (!std::isfinite(ev.value)) continue;
        const double decrease = res.eval.gradient.dot(delta);
        const bool armijo =
            ev.value <= res.eval.value + options.armijo * decrease;
        const bool certified =
            options.convex && decrease < 0.0 &&
            ev.gradient.dot(delta) <= options.armijo * decrease;
        if (!armijo && !certified) continue;

        const Vector yv = ev.gradient - res.eval.gradient;
        const double sy = delta.dot(yv);
        if (sy > 1e-16 * delta.norm() * yv.norm() && sy > 0.0) {
          memory.push_back({delta, yv});
          if (memory.size() > options.memory) memory.pop_front();
          gamma = sy / yv.squaredNorm();
        }
        res.x = trial;
        res.eval = std::move(ev);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.projected_gradient =
          projected_gradient_sup(res.x, res.eval.gradient, lower, upper);
      res.status = res.projected_gradient < options.tol
                       ? LbfgsStatus::converged
                       : LbfgsStatus::line_search_failed;
      break;
    }
  }
  if (res.iterations >= options.max_iters) {
    res.projected_gradient =
        projected_gradient_sup(res.x, res.eval.gradient, lower, upper);
    res.status = res.projected_gradient < options.tol
                     ? LbfgsStatus::converged
                     : LbfgsStatus::max_iterations;
  }

  res.bounds.resize(static_cast<std::size_t>(res.x.size()));
  for (Index i = 0; i < res.x.size(); ++i) {
    res.bounds[i] = res.x[i] <= lower[i]   ? BoundState::at_lower
                    : res.x[i] >= upper[i] ? BoundState::at_upper
                                           : BoundState::free;
  }
  return res;
}

}  // namespace ssep
