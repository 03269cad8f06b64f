#include "ssep/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssep/errors.hpp"

namespace ssep {

namespace {

struct PatternTerm {
  double log_weight = 0.0;
  Vector mean;    // zero on excluded coordinates
  Vector second;  // E[w_i^2 | z]
};

void check_dimension(const ModelInstance& model, std::size_t max_d) {
  if (static_cast<std::size_t>(model.d()) > max_d) {
    throw std::invalid_argument("exact_posterior: d = " +
                                std::to_string(model.d()) +
                                " exceeds the enumeration limit " +
                                std::to_string(max_d));
  }
}

PatternTerm evaluate_pattern(const ModelInstance& model, std::uint64_t z) {
  const Index n = model.n();
  const Index d = model.d();
  const double s2 = model.noise_var();
  const double v = model.slab_var();

  std::vector<Index> cols;
  for (Index i = 0; i < d; ++i) {
    if ((z >> i) & 1U) cols.push_back(i);
  }
  const Index k = static_cast<Index>(cols.size());

  PatternTerm t;
  t.mean = Vector::Zero(d);
  t.second = Vector::Zero(d);
  t.log_weight = static_cast<double>(k) * std::log(model.slab_prob()) +
                 static_cast<double>(d - k) * std::log1p(-model.slab_prob());

  // log N(y | 0, s2 I + v Xz Xz')
  Matrix xz(n, k);
  for (Index j = 0; j < k; ++j) xz.col(j) = model.design().col(cols[j]);
  Matrix cov = v * xz * xz.transpose();
  cov.diagonal().array() += s2;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("exact_posterior: marginal covariance not PD");
  }
  const Vector alpha = llt.matrixL().solve(model.targets());
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  t.log_weight += -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) -
                  0.5 * log_det - 0.5 * alpha.squaredNorm();

  if (k == 0) return t;

  // Conditional posterior of the included block: precision Xz'Xz/s2 + I/v.
  Matrix prec = xz.transpose() * xz / s2;
  prec.diagonal().array() += 1.0 / v;
  Eigen::LLT<Matrix> pllt(prec);
  if (pllt.info() != Eigen::Success) {
    throw NotPositiveDefinite("exact_posterior: conditional precision not PD");
  }
  const Vector mz = pllt.solve(xz.transpose() * model.targets() / s2);
  Matrix linv = Matrix::Identity(k, k);
  pllt.matrixL().solveInPlace(linv);
  const Vector vz = linv.colwise().squaredNorm().transpose();
  for (Index j = 0; j < k; ++j) {
    t.mean[cols[j]] = mz[j];
    t.second[cols[j]] = vz[j] + mz[j] * mz[j];
  }
  return t;
}

ExactPosterior finish(double log_evidence, const Vector& mean,
                      const Vector& second, const Vector& inclusion) {
  ExactPosterior out;
  out.log_evidence = log_evidence;
  out.mean = mean;
  out.marg_var = (second - mean.cwiseProduct(mean)).cwiseMax(0.0);
  out.inclusion_prob = inclusion.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

}  // namespace

ExactPosterior exact_posterior(const ModelInstance& model, std::size_t max_d) {
  check_dimension(model, max_d);
  const Index d = model.d();
  const std::int64_t count = std::int64_t{1} << d;
  std::vector<PatternTerm> terms(static_cast<std::size_t>(count));

  // Exceptions cannot leave an OpenMP region; record and rethrow.
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t z = 0; z < count; ++z) {
    try {
      terms[static_cast<std::size_t>(z)] =
          evaluate_pattern(model, static_cast<std::uint64_t>(z));
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  double max_lw = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) max_lw = std::max(max_lw, t.log_weight);
  double total = 0.0;
  for (const auto& t : terms) total += std::exp(t.log_weight - max_lw);

  Vector mean = Vector::Zero(d), second = Vector::Zero(d),
         inclusion = Vector::Zero(d);
  for (std::int64_t z = 0; z < count; ++z) {
    const PatternTerm& t = terms[static_cast<std::size_t>(z)];
    const double w = std::exp(t.log_weight - max_lw) / total;
    mean += w * t.mean;
    second += w * t.second;
    for (Index i = 0; i < d; ++i) {
      if ((z >> i) & 1) inclusion[i] += w;
    }
  }
  return finish(max_lw + std::log(total), mean, second, inclusion);
}

ExactPosterior exact_posterior_serial(const ModelInstance& model,
                                      std::size_t max_d) {
  check_dimension(model, max_d);
  const Index d = model.d();
  const std::uint64_t count = std::uint64_t{1} << d;

  // Online log-sum-exp with rescaling of the running sums.
  double max_lw = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  Vector mean = Vector::Zero(d), second = Vector::Zero(d),
         inclusion = Vector::Zero(d);
  for (std::uint64_t z = 0; z < count; ++z) {
    const PatternTerm t = evaluate_pattern(model, z);
    if (t.log_weight > max_lw) {
      const double scale = std::exp(max_lw - t.log_weight);
      total *= scale;
      mean *= scale;
      second *= scale;
      inclusion *= scale;
      max_lw = t.log_weight;
    }
    const double w = std::exp(t.log_weight - max_lw);
    total += w;
    mean += w * t.mean;
    second += w * t.second;
    for (Index i = 0; i < d; ++i) {
      if ((z >> i) & 1U) inclusion[i] += w;
    }
  }
  return finish(max_lw + std::log(total), mean / total, second / total,
                inclusion / total);
}

}  // namespace ssep
