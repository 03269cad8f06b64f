#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary: adaptive quadrature, dense linear algebra and random
// instances.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ssep/model.hpp"
#include "ssep/natural.hpp"

namespace ssep::testing {

struct Quadrature {
  double value = 0.0;
  double abserr = 0.0;
};

// Integral of f over the real line after the substitution w = center +
// scale * t, by GSL's adaptive Gauss-Kronrod rule on the infinite interval.
// epsabs applies to the substituted integrand, which callers keep at unit
// scale; it only matters for integrals that cancel to nearly zero.
inline Quadrature integrate_line(const std::function<double(double)>& f,
                                 double center, double scale,
                                 double epsrel = 1e-13, double epsabs = 1e-14) {
  gsl_set_error_handler_off();
  struct Ctx {
    const std::function<double(double)>* f;
    double center;
    double scale;
  } ctx{&f, center, scale};
  gsl_function g;
  g.function = [](double t, void* p) {
    const auto* c = static_cast<const Ctx*>(p);
    return (*c->f)(c->center + c->scale * t);
  };
  g.params = &ctx;
  const std::size_t limit = 2000;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(limit);
  Quadrature q;
  const int status = gsl_integration_qagi(&g, epsabs, epsrel, limit, ws, &q.value, &q.abserr);
  gsl_integration_workspace_free(ws);
  // Roundoff-limited termination still returns a usable estimate; anything
  // else is a failure of the reference itself.
  if (status != GSL_SUCCESS && status != GSL_EROUND) {
    throw std::runtime_error(std::string("quadrature failed: ") + gsl_strerror(status));
  }
  q.value *= scale;
  q.abserr *= scale;
  return q;
}

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct TiltedReference {
  double mean = 0.0;
  double second_moment = 0.0;
  double log_partition = 0.0;
};

// Moments of exp{c1 w - c2 w^2/2} [p N(w|0,v) + (1-p) delta(w)] with the slab
// integrated numerically and the spike handled as a point mass at zero.
inline TiltedReference tilted_by_quadrature(double c1, double c2, double p,
                                            double v) {
  const auto q = [=](double w) {
    return -0.5 * w * w / v - 0.5 * std::log(2.0 * std::numbers::pi * v) +
           c1 * w - 0.5 * c2 * w * w;
  };
  // Any shift is valid; centring at the exponent's peak keeps the integrand
  // at unit scale.
  const double precision = 1.0 / v + c2;
  const double center = c1 / precision;
  const double scale = 1.0 / std::sqrt(precision);
  const double q_ref = q(center);
  const auto moment = [&](int k) {
    return integrate_line(
               [&, k](double w) {
                 return std::pow(w - center, k) * std::exp(q(w) - q_ref);
               },
               center, scale)
        .value;
  };
  const double i0 = moment(0);
  const double j1 = moment(1) / i0;
  const double j2 = moment(2) / i0;
  const double log_slab = std::log(p) + q_ref + std::log(i0);
  TiltedReference r;
  r.log_partition = log_sum_exp(std::log1p(-p), log_slab);
  const double slab_weight = std::exp(log_slab - r.log_partition);
  r.mean = slab_weight * (center + j1);
  r.second_moment = slab_weight * (center * center + 2.0 * center * j1 + j2);
  return r;
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline ModelInstance random_model(std::mt19937_64& rng, Index n, Index d,
                                  double noise_var = 0.1, double slab_prob = 0.3,
                                  double slab_var = 1.0) {
  Matrix x = random_matrix(rng, n, d);
  Vector y = random_matrix(rng, n, 1).col(0);
  return ModelInstance(std::move(x), std::move(y), noise_var, slab_prob, slab_var);
}

// Site tuple with precisions in [lo, hi] and standard-normal linear terms.
inline NaturalTuple random_tuple(std::mt19937_64& rng, Index d, double lo = 0.2,
                                 double hi = 3.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> prec(lo, hi);
  NaturalTuple t = NaturalTuple::constant(d, 0.0, 1.0);
  for (Index i = 0; i < d; ++i) {
    t.first[i] = normal(rng);
    t.second[i] = prec(rng);
  }
  return t;
}

// log Z through the marginal likelihood of y under w ~ N(site1/site2,
// diag(1/site2)), with dense LU; shares no code with the library path.
inline double log_Z_reference(const ModelInstance& m, const NaturalTuple& site) {
  const Index n = m.n();
  const Vector prior_mean = site.first.cwiseQuotient(site.second);
  const Vector prior_var = site.second.cwiseInverse();
  Matrix s = m.design() * prior_var.asDiagonal() * m.design().transpose();
  s.diagonal().array() += m.noise_var();
  const Vector r = m.targets() - m.design() * prior_mean;
  const Eigen::FullPivLU<Matrix> lu(s);
  const double log_det = std::log(std::abs(lu.determinant()));
  double out = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * log_det -
               0.5 * r.dot(lu.solve(r));
  for (Index i = 0; i < site.size(); ++i) {
    out += 0.5 * site.first[i] * site.first[i] / site.second[i] +
           0.5 * std::log(2.0 * std::numbers::pi / site.second[i]);
  }
  return out;
}

struct DenseMoments {
  Vector mean;
  Matrix covariance;
};

inline DenseMoments dense_moments(const ModelInstance& m, const NaturalTuple& site) {
  Matrix a = m.design().transpose() * m.design() / m.noise_var();
  a.diagonal() += site.second;
  DenseMoments out;
  out.covariance = a.fullPivLu().inverse();
  out.mean = out.covariance *
             (site.first + m.design().transpose() * m.targets() / m.noise_var());
  return out;
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1.0) {
  return std::abs(a - b) / std::max(floor, std::max(std::abs(a), std::abs(b)));
}

}  // namespace ssep::testing
