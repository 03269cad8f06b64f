#include "ssep/pcep.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "ssep/energy.hpp"
#include "ssep/errors.hpp"
#include "ssep/projected_lbfgs.hpp"
#include "ssep/projected_newton.hpp"
#include "ssep/rep.hpp"

namespace ssep {

namespace {

NaturalTuple unpack(const Vector& x) {
  const Index d = x.size() / 2;
  NaturalTuple t = NaturalTuple::constant(d, 0.0, 0.0);
  for (Index i = 0; i < d; ++i) {
    t.first[i] = x[2 * i];
    t.second[i] = x[2 * i + 1];
  }
  return t;
}

Vector pack(const NaturalTuple& t) {
  Vector x(2 * t.size());
  for (Index i = 0; i < t.size(); ++i) {
    x[2 * i] = t.first[i];
    x[2 * i + 1] = t.second[i];
  }
  return x;
}

// Covariance of (w, -w^2/2) under P, from the slab component's raw moments.
Eigen::Matrix2d tilted_curvature(double cav_1, double cav_2,
                                 const TiltedMoments& t, double slab_var) {
  const double v = slab_var / (1.0 + cav_2 * slab_var);
  const double mu = cav_1 * v;
  const double r = t.slab_responsibility;
  const double m3 = r * (mu * mu * mu + 3.0 * mu * v);
  const double m4 = r * (mu * mu * mu * mu + 6.0 * mu * mu * v + 3.0 * v * v);
  Eigen::Matrix2d c;
  c(0, 0) = t.variance();
  c(0, 1) = c(1, 0) = -0.5 * (m3 - t.mean * t.second_moment);
  c(1, 1) = 0.25 * (m4 - t.second_moment * t.second_moment);
  return c;
}

Eigen::Matrix2d gaussian_curvature(double mean, double var) {
  Eigen::Matrix2d c;
  c(0, 0) = var;
  c(0, 1) = c(1, 0) = -mean * var;
  c(1, 1) = 0.5 * var * var + mean * mean * var;
  return c;
}

struct InnerState {
  PosteriorMoments moments;
  std::vector<TiltedMoments> tilted;
  double log_Z = 0.0;
  double log_Z_hat = 0.0;
};

InnerState evaluate_state(const ModelInstance& model,
                          const NaturalTuple& marginal,
                          const NaturalTuple& site) {
  InnerState s;
  s.moments = posterior_moments(model, site);
  s.log_Z = log_Z(model, s.moments);
  const Index d = model.d();
  s.tilted.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    s.tilted[i] = tilted_moments(marginal.first[i] - site.first[i],
                                 marginal.second[i] - site.second[i],
                                 model.slab_prob(), model.slab_var());
    s.log_Z_hat += s.tilted[i].log_partition;
  }
  return s;
}

}  // namespace

NaturalTuple inner_gradient(const ModelInstance& model,
                            const NaturalTuple& marginal,
                            const NaturalTuple& site) {
  const InnerState s = evaluate_state(model, marginal, site);
  NaturalTuple g = NaturalTuple::constant(model.d(), 0.0, 0.0);
  for (Index i = 0; i < model.d(); ++i) {
    const double mq = s.moments.mean[i];
    const double sq = s.moments.marg_var[i] + mq * mq;
    g.first[i] = s.tilted[i].mean - mq;
    g.second[i] = 0.5 * (sq - s.tilted[i].second_moment);
  }
  return g;
}

InnerSolution inner_maximize(const ModelInstance& model,
                             const NaturalTuple& marginal,
                             const NaturalTuple& warm_start,
                             const InnerOptions& options) {
  const Index d = model.d();
  if (marginal.size() != d || warm_start.size() != d) {
    throw DimensionMismatch("inner_maximize: tuple sizes must equal d");
  }
  require_admissible(marginal, TupleRole::marginal, options.eps);
  const double eps = options.eps;
  const double log_z_tilde = log_Z_tilde(marginal, eps);

  Vector lower(2 * d), upper(2 * d);
  for (Index i = 0; i < d; ++i) {
    lower[2 * i] = -std::numeric_limits<double>::infinity();
    upper[2 * i] = std::numeric_limits<double>::infinity();
    lower[2 * i + 1] = eps;
    upper[2 * i + 1] = marginal.second[i] - eps;
  }

  // Minimizes -E(v, v - site, site).
  const BoxObjective objective = [&](const Vector& x) {
    BoxEvaluation ev;
    const NaturalTuple site = unpack(x);
    InnerState s;
    try {
      s = evaluate_state(model, marginal, site);
    } catch (const NotPositiveDefinite&) {
      ev.value = std::numeric_limits<double>::infinity();
      ev.gradient = Vector::Zero(x.size());
      return ev;
    }
    ev.value = s.log_Z + s.log_Z_hat - log_z_tilde;
    ev.gradient.resize(x.size());
    ev.curvature.resize(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) {
      const double mq = s.moments.mean[i];
      const double vq = s.moments.marg_var[i];
      const TiltedMoments& t = s.tilted[i];
      ev.gradient[2 * i] = mq - t.mean;
      ev.gradient[2 * i + 1] = 0.5 * (t.second_moment - (vq + mq * mq));
      ev.curvature[i] =
          gaussian_curvature(mq, vq) +
          tilted_curvature(marginal.first[i] - site.first[i],
                           marginal.second[i] - site.second[i], t,
                           model.slab_var());
    }
    return ev;
  };

  LbfgsResult opt;
  if (options.method == InnerMethod::lbfgs) {
    LbfgsOptions lopt;
    lopt.tol = options.tol;
    lopt.max_iters = options.max_iters;
    lopt.convex = true;
    opt = minimize_box(objective, pack(warm_start), lower, upper, lopt);
  } else {
    const NewtonObjective newton = [&](const Vector& x, bool want_hessian) {
      NewtonEvaluation ev;
      BoxEvaluation box = objective(x);
      ev.value = box.value;
      ev.gradient = std::move(box.gradient);
      if (!want_hessian || !std::isfinite(ev.value)) return ev;
      const NaturalTuple site = unpack(x);
      const Matrix cov = posterior_covariance(model, site);
      const Vector mean = posterior_moments(model, site).mean;
      ev.hessian.resize(2 * d, 2 * d);
      for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
          const double c = cov(i, j);
          ev.hessian(2 * i, 2 * j) = c;
          ev.hessian(2 * i, 2 * j + 1) = -mean[j] * c;
          ev.hessian(2 * i + 1, 2 * j) = -mean[i] * c;
          ev.hessian(2 * i + 1, 2 * j + 1) = 0.5 * c * c + mean[i] * mean[j] * c;
        }
      }
      for (Index i = 0; i < d; ++i) {
        // box.curvature holds the Q diagonal block plus the P block.
        const Eigen::Matrix2d p_block =
            box.curvature[i] - gaussian_curvature(mean[i], cov(i, i));
        ev.hessian.block<2, 2>(2 * i, 2 * i) += p_block;
      }
      return ev;
    };
    NewtonOptions nopt;
    nopt.tol = options.tol;
    nopt.max_iters = options.max_iters;
    nopt.gain_tol = options.gain_tol;
    opt = minimize_box_newton(newton, pack(warm_start), lower, upper, nopt);
  }

  InnerSolution sol;
  sol.site_star = unpack(opt.x);
  sol.cavity_star = marginal - sol.site_star;
  sol.active_set.assign(static_cast<std::size_t>(d), ActiveBound::none);
  for (Index i = 0; i < d; ++i) {
    switch (opt.bounds[2 * i + 1]) {
      case BoundState::at_lower:
        sol.active_set[i] = ActiveBound::site_at_eps;
        sol.site_star.second[i] = eps;
        break;
      case BoundState::at_upper:
        sol.active_set[i] = ActiveBound::cavity_at_eps;
        sol.cavity_star.second[i] = eps;
        break;
      case BoundState::free:
        break;
    }
  }
  const InnerState s = evaluate_state(model, marginal, sol.site_star);
  sol.moments = s.moments;
  sol.tilted = s.tilted;
  sol.inner_value = -(s.log_Z + s.log_Z_hat - log_z_tilde);
  sol.iterations = opt.iterations;
  sol.projected_gradient = opt.projected_gradient;
  sol.degraded = opt.status != LbfgsStatus::converged;
  return sol;
}

Multipliers extract_multipliers(const InnerSolution& sol,
                                const ModelInstance& model, double kkt_tol) {
  const Index d = model.d();
  if (sol.site_star.size() != d || sol.moments.mean.size() != d ||
      static_cast<Index>(sol.tilted.size()) != d ||
      static_cast<Index>(sol.active_set.size()) != d) {
    throw DimensionMismatch("extract_multipliers: solution does not match d");
  }
  Multipliers m{Vector(d), Vector(d), Vector::Zero(d), Vector::Zero(d)};
  for (Index i = 0; i < d; ++i) {
    const double mean_q = sol.moments.mean[i];
    const double second_q = sol.moments.marg_var[i] + mean_q * mean_q;
    const double second_p = sol.tilted[i].second_moment;
    m.lambda_1[i] = -mean_q;
    switch (sol.active_set[i]) {
      case ActiveBound::site_at_eps:
        m.lambda_2[i] = 0.5 * second_p;
        m.mu_2[i] = 0.5 * second_q - m.lambda_2[i];
        break;
      case ActiveBound::cavity_at_eps:
        m.lambda_2[i] = 0.5 * second_q;
        m.mu_1[i] = 0.5 * second_p - m.lambda_2[i];
        break;
      case ActiveBound::none:
        m.lambda_2[i] = 0.5 * second_q;
        break;
    }
    const double worst = std::max(m.mu_1[i], m.mu_2[i]);
    if (worst > kkt_tol) {
      std::ostringstream msg;
      msg << "extract_multipliers: recovered multiplier " << worst
          << " > 0 at site " << i << " (inner solve not at a KKT point)";
      throw NonKktPoint(msg.str());
    }
    m.mu_1[i] = std::min(m.mu_1[i], 0.0);
    m.mu_2[i] = std::min(m.mu_2[i], 0.0);
  }
  return m;
}

NaturalTuple outer_update(const Multipliers& mult, double eps) {
  const Index d = mult.lambda_1.size();
  if (mult.lambda_2.size() != d) {
    throw DimensionMismatch("outer_update: multiplier sizes differ");
  }
  if (!mult.lambda_1.allFinite() || !mult.lambda_2.allFinite()) {
    throw NumericalFailure("outer_update: non-finite multipliers");
  }
  NaturalTuple v = NaturalTuple::constant(d, 0.0, 0.0);
  for (Index i = 0; i < d; ++i) {
    const double l1 = mult.lambda_1[i];
    const double denom = 2.0 * mult.lambda_2[i] - l1 * l1;
    if (!(denom > 0.0)) {
      throw NumericalFailure(
          "outer_update: 2 lambda_2 - lambda_1^2 <= 0 at index " +
          std::to_string(i) + "; the outer objective is unbounded");
    }
    v.second[i] = std::max(1.0 / denom, 3.0 * eps);
    v.first[i] = -l1 * v.second[i];
  }
  return v;
}

NaturalTuple initial_marginal(const ModelInstance& model) {
  return NaturalTuple::constant(model.d(), 0.0, 2.0 / model.slab_var());
}

namespace {

NaturalTuple warm_start_in_box(const NaturalTuple& site,
                               const NaturalTuple& marginal, double eps) {
  NaturalTuple w = site;
  for (Index i = 0; i < w.size(); ++i) {
    w.second[i] = std::clamp(w.second[i], eps, marginal.second[i] - eps);
  }
  return w;
}

}  // namespace

PcepResult run_pcep(const ModelInstance& model, const PcepOptions& options) {
  if (!(options.eps > 0.0) || !(options.outer_tol > 0.0) ||
      !(options.inner_tol > 0.0) || options.max_outer < 1 ||
      options.inner_max_iters < 1) {
    throw std::invalid_argument("run_pcep: options must be positive");
  }
  InnerOptions iopt{options.eps, options.inner_tol, options.inner_max_iters,
                    options.inner_method, options.inner_gain_tol};

  PcepResult res;
  NaturalTuple v = initial_marginal(model);
  InnerSolution inner = inner_maximize(model, v, 0.5 * v, iopt);
  res.inner_iterations += inner.iterations;
  res.degraded_inner_solves += inner.degraded ? 1 : 0;
  double e_cur = inner.inner_value;
  res.energy_trace.push_back(e_cur);

  while (res.energy_trace.size() < options.max_outer) {
    const Multipliers mult =
        extract_multipliers(inner, model, std::max(1e-8, iopt.tol));
    NaturalTuple v_next = outer_update(mult, options.eps);
    InnerSolution next = inner_maximize(
        model, v_next, warm_start_in_box(inner.site_star, v_next, options.eps),
        iopt);
    res.inner_iterations += next.iterations;
    res.degraded_inner_solves += next.degraded ? 1 : 0;
    const double e_next = next.inner_value;

    const double slack = options.descent_slack * (1.0 + std::abs(e_cur));
    if (e_next > e_cur + slack) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "run_pcep: energy rose from " << e_cur << " to " << e_next
          << " at outer iteration " << res.energy_trace.size();
      throw DescentViolation(res.energy_trace.size(), e_cur, e_next, msg.str());
    }
    res.energy_trace.push_back(e_next);
    const double decrease = e_cur - e_next;
    const double moved = site_change(v, v_next);
    v = std::move(v_next);
    inner = std::move(next);
    e_cur = e_next;
    res.max_delta = decrease;

    if (decrease < 10.0 * options.outer_tol) {
      iopt.tol = std::max(0.5 * iopt.tol, options.inner_tol_floor);
    }
    if (options.marginal_tol > 0.0 ? moved < options.marginal_tol
                                   : decrease < options.outer_tol) {
      res.converged = true;
      break;
    }
  }

  res.iterations = res.energy_trace.size();
  res.site = inner.site_star;
  res.moments = inner.moments;
  res.marginal = v;
  res.cavity = inner.cavity_star;
  res.active_set = inner.active_set;
  res.log_evidence = -e_cur;
  return res;
}

}  // namespace ssep
