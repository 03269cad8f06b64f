#include "ssep/model.hpp"

#include <cmath>
#include <algorithm>
#include <string>

#include "ssep/errors.hpp"

namespace ssep {

ModelInstance::ModelInstance(Matrix design, Vector targets, double noise_var,
                             double slab_prob, double slab_var)
    : design_(std::move(design)),
      targets_(std::move(targets)),
      noise_var_(noise_var),
      slab_prob_(slab_prob),
      slab_var_(slab_var) {
  if (design_.rows() < 1 || design_.cols() < 1) {
    throw std::invalid_argument("ModelInstance: X must have n >= 1 and d >= 1");
  }
  if (targets_.size() != design_.rows()) {
    throw DimensionMismatch("ModelInstance: X has " +
                            std::to_string(design_.rows()) + " rows but y has " +
                            std::to_string(targets_.size()) + " entries");
  }
  if (!design_.allFinite() || !targets_.allFinite()) {
    throw std::invalid_argument("ModelInstance: X and y must be finite");
  }
  if (!(noise_var_ > 0.0) || !std::isfinite(noise_var_)) {
    throw std::invalid_argument("ModelInstance: noise variance must be positive");
  }
  if (!(slab_var_ > 0.0) || !std::isfinite(slab_var_)) {
    throw std::invalid_argument("ModelInstance: slab variance must be positive");
  }
  if (!(slab_prob_ > 0.0 && slab_prob_ < 1.0)) {
    throw std::invalid_argument(
        "ModelInstance: slab probability must lie in the open interval (0, 1)");
  }
  slab_prob_ = std::clamp(slab_prob_, kMinSlabProb, 1.0 - kMinSlabProb);
  slab_log_odds_ = std::log(slab_prob_) - std::log1p(-slab_prob_);

  scaled_gram_ = design_.transpose() * design_ / noise_var_;
  scaled_xty_ = design_.transpose() * targets_ / noise_var_;
  yty_ = targets_.squaredNorm();
}

SolvePath resolve_path(const ModelInstance& model, SolvePath path) {
  if (path != SolvePath::automatic) return path;
  return model.n() < model.d() && model.d() >= kWoodburyMinDim ? SolvePath::woodbury
                                                            : SolvePath::direct;
}

namespace {

PosteriorMoments direct_moments(const ModelInstance& model,
                                const NaturalTuple& site, const Vector& b) {
  const Index d = model.d();
  Matrix a = model.scaled_gram();
  a.diagonal() += site.second;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("posterior precision A is not positive definite");
  }
  PosteriorMoments out;
  out.mean = llt.solve(b);
  // diag(A^-1)_i = || L^-1 e_i ||^2
  Matrix linv = Matrix::Identity(d, d);
  llt.matrixL().solveInPlace(linv);
  out.marg_var = linv.colwise().squaredNorm().transpose();
  out.log_det_A = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return out;
}

// A^-1 = D^-1 - D^-1 X' C^-1 X D^-1 with C = s2 I + X D^-1 X'.
PosteriorMoments woodbury_moments(const ModelInstance& model,
                                  const NaturalTuple& site) {
  const Matrix& x = model.design();
  const Index n = model.n();
  const double s2 = model.noise_var();
  const Vector dinv = site.second.cwiseInverse();

  Matrix c = x * dinv.asDiagonal() * x.transpose();
  c.diagonal().array() += s2;
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite(
        "Woodbury inner matrix s2 I + X D^-1 X' is not positive definite");
  }
  // Mean in update form around the site mean; avoids cancelling terms of
  // size X'y / s2.
  PosteriorMoments out;
  const Vector site_mean = dinv.cwiseProduct(site.first);
  const Vector resid = model.targets() - x * site_mean;
  out.mean = site_mean + dinv.cwiseProduct(x.transpose() * llt.solve(resid));

  Matrix w = x;
  llt.matrixL().solveInPlace(w);
  const Vector proj = w.colwise().squaredNorm().transpose();
  out.marg_var = dinv - dinv.cwiseProduct(dinv).cwiseProduct(proj);

  const double log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.log_det_A = site.second.array().log().sum() + log_det_c -
                  static_cast<double>(n) * std::log(s2);
  return out;
}

}  // namespace

PosteriorMoments posterior_moments(const ModelInstance& model,
                                   const NaturalTuple& site, SolvePath path) {
  if (site.size() != model.d()) {
    throw DimensionMismatch("posterior_moments: site has " +
                            std::to_string(site.size()) +
                            " entries, model has d = " +
                            std::to_string(model.d()));
  }
  if (!site.all_finite() || !(site.second.array() > 0.0).all()) {
    throw ConstraintViolation(ConstraintKind::inequality,
                              "posterior_moments: site precisions must be "
                              "finite and strictly positive");
  }
  const Vector b = site.first + model.scaled_xty();
  PosteriorMoments out = resolve_path(model, path) == SolvePath::woodbury
                             ? woodbury_moments(model, site)
                             : direct_moments(model, site, b);
  // Maximum of -|y - Xw|^2 / (2 s2) + site1'w - w' diag(site2) w / 2, which
  // equals -y'y / (2 s2) + b'A^-1 b / 2 but is evaluated at w = mean so that
  // errors in the mean enter only at second order.
  const Vector resid = model.targets() - model.design() * out.mean;
  out.quadratic_term =
      -0.5 * resid.squaredNorm() / model.noise_var() + site.first.dot(out.mean) -
      0.5 * out.mean.dot(site.second.cwiseProduct(out.mean));
  if (!(out.marg_var.array() > 0.0).all() || !out.mean.allFinite()) {
    throw NotPositiveDefinite(
        "posterior_moments: non-positive marginal variance (ill-conditioned A)");
  }
  return out;
}

Matrix posterior_covariance(const ModelInstance& model, const NaturalTuple& site,
                            SolvePath path) {
  if (site.size() != model.d()) {
    throw DimensionMismatch("posterior_covariance: site size does not match d");
  }
  if (!site.all_finite() || !(site.second.array() > 0.0).all()) {
    throw ConstraintViolation(ConstraintKind::inequality,
                              "posterior_covariance: site precisions must be "
                              "finite and strictly positive");
  }
  const Index d = model.d();
  if (resolve_path(model, path) == SolvePath::direct) {
    Matrix a = model.scaled_gram();
    a.diagonal() += site.second;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("posterior precision A is not positive definite");
    }
    return llt.solve(Matrix::Identity(d, d));
  }
  const Matrix& x = model.design();
  const Vector dinv = site.second.cwiseInverse();
  Matrix c = x * dinv.asDiagonal() * x.transpose();
  c.diagonal().array() += model.noise_var();
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite(
        "Woodbury inner matrix s2 I + X D^-1 X' is not positive definite");
  }
  Matrix w = x * dinv.asDiagonal();
  llt.matrixL().solveInPlace(w);
  Matrix cov = -w.transpose() * w;
  cov.diagonal() += dinv;
  return cov;
}

double log_Z(const ModelInstance& model, const PosteriorMoments& moments) {
  constexpr double log_2pi = 1.8378770664093454836;  // log(2 pi)
  const double n = static_cast<double>(model.n());
  const double d = static_cast<double>(model.d());
  const double s2 = model.noise_var();
  return -0.5 * n * (log_2pi + std::log(s2)) + moments.quadratic_term -
         0.5 * moments.log_det_A + 0.5 * d * log_2pi;
}

double log_Z(const ModelInstance& model, const NaturalTuple& site,
             SolvePath path) {
  return log_Z(model, posterior_moments(model, site, path));
}

}  // namespace ssep
