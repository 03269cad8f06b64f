#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ssep/errors.hpp"
#include "ssep/model.hpp"
#include "support.hpp"

using namespace ssep;
using namespace ssep::testing;

namespace {

ModelInstance scalar_model() {
  return ModelInstance(Matrix::Ones(1, 1), Vector::Ones(1), 1.0, 0.5, 1.0);
}

}  // namespace

TEST_CASE("model construction validates its inputs") {
  const Matrix x = Matrix::Ones(2, 3);
  const Vector y = Vector::Zero(2);
  CHECK_NOTHROW(ModelInstance(x, y, 1.0, 0.5, 1.0));
  CHECK_THROWS_AS(ModelInstance(x, Vector::Zero(3), 1.0, 0.5, 1.0), DimensionMismatch);
  CHECK_THROWS_AS(ModelInstance(Matrix(0, 3), Vector(0), 1.0, 0.5, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(ModelInstance(x, y, 0.0, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelInstance(x, y, 1.0, 0.5, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelInstance(x, y, 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelInstance(x, y, 1.0, 1.0, 1.0), std::invalid_argument);
  Matrix bad = x;
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ModelInstance(bad, y, 1.0, 0.5, 1.0), std::invalid_argument);

  const ModelInstance tiny(x, y, 1.0, 1e-300, 1.0);
  CHECK(tiny.slab_prob() == ModelInstance::kMinSlabProb);
  CHECK(std::isfinite(tiny.slab_log_odds()));
}

TEST_CASE("prior-only model returns the site moments") {
  const ModelInstance m(Matrix::Zero(2, 3), Vector::Zero(2), 1.0, 0.5, 1.0);
  const NaturalTuple site = NaturalTuple::constant(3, 0.0, 1.0);
  for (SolvePath path : {SolvePath::direct, SolvePath::woodbury}) {
    const PosteriorMoments pm = posterior_moments(m, site, path);
    CHECK(pm.mean.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    for (Index i = 0; i < 3; ++i) CHECK(pm.marg_var[i] == doctest::Approx(1.0));
  }
}

TEST_CASE("prior-only moments scale with the site parameters") {
  std::mt19937_64 rng(3);
  const ModelInstance m(Matrix::Zero(2, 4), Vector::Zero(2), 0.7, 0.5, 1.0);
  const NaturalTuple site = random_tuple(rng, 4);
  for (SolvePath path : {SolvePath::direct, SolvePath::woodbury}) {
    const PosteriorMoments pm = posterior_moments(m, site, path);
    for (Index i = 0; i < 4; ++i) {
      CHECK(pm.mean[i] == doctest::Approx(site.first[i] / site.second[i]).epsilon(1e-13));
      CHECK(pm.marg_var[i] == doctest::Approx(1.0 / site.second[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("scalar model has the closed-form posterior") {
  const ModelInstance m = scalar_model();
  const PosteriorMoments pm = posterior_moments(m, NaturalTuple::constant(1, 0.0, 1.0));
  CHECK(pm.mean[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pm.marg_var[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pm.log_det_A == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("decoupled unit Gaussian integrates to one") {
  // N(0 | 0, 1) * integral of exp(-w^2 / 2) = (2 pi)^(-1/2) (2 pi)^(1/2).
  const ModelInstance m(Matrix::Zero(1, 1), Vector::Zero(1), 1.0, 0.5, 1.0);
  CHECK(std::abs(log_Z(m, NaturalTuple::constant(1, 0.0, 1.0))) < 1e-14);
}

TEST_CASE("scalar log Z matches quadrature") {
  const ModelInstance m = scalar_model();
  const NaturalTuple site(Vector::Constant(1, 0.3), Vector::Constant(1, 1.7));
  const double s1 = site.first[0];
  const double s2 = site.second[0];
  const auto integrand = [&](double w) {
    const double r = 1.0 - w;
    return std::exp(-0.5 * r * r - 0.5 * std::log(2.0 * std::numbers::pi) + s1 * w -
                    0.5 * s2 * w * w);
  };
  const Quadrature q = integrate_line(integrand, 0.0, 1.0);
  CHECK(log_Z(m, site) == doctest::Approx(std::log(q.value)).epsilon(1e-8));
}

TEST_CASE("both solve paths match dense references") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 1 + rep % 6;
    const Index d = 1 + (rep * 7) % 10;
    const ModelInstance m = random_model(rng, n, d, 0.05 + 0.1 * (rep % 3));
    const NaturalTuple site = random_tuple(rng, d);
    const DenseMoments ref = dense_moments(m, site);
    const double lz_ref = log_Z_reference(m, site);
    for (SolvePath path : {SolvePath::direct, SolvePath::woodbury}) {
      const PosteriorMoments pm = posterior_moments(m, site, path);
      const Matrix cov = posterior_covariance(m, site, path);
      for (Index i = 0; i < d; ++i) {
        CHECK(rel_err(pm.mean[i], ref.mean[i]) < 1e-10);
        CHECK(rel_err(pm.marg_var[i], ref.covariance(i, i)) < 1e-10);
      }
      CHECK((cov - ref.covariance).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(rel_err(log_Z(m, site, path), lz_ref) < 1e-10);
    }
  }
}

TEST_CASE("woodbury agrees with the direct path when n < d") {
  std::mt19937_64 rng(5);
  const ModelInstance m = random_model(rng, 3, 8);
  CHECK(resolve_path(m, SolvePath::automatic) == SolvePath::direct);
  CHECK(resolve_path(random_model(rng, 3, kWoodburyMinDim), SolvePath::automatic) ==
        SolvePath::woodbury);
  CHECK(resolve_path(random_model(rng, kWoodburyMinDim, kWoodburyMinDim),
                     SolvePath::automatic) == SolvePath::direct);
  for (int rep = 0; rep < 10; ++rep) {
    const NaturalTuple site = random_tuple(rng, 8, 1e-3, 50.0);
    const PosteriorMoments a = posterior_moments(m, site, SolvePath::direct);
    const PosteriorMoments b = posterior_moments(m, site, SolvePath::woodbury);
    for (Index i = 0; i < 8; ++i) {
      CHECK(rel_err(a.mean[i], b.mean[i]) < 1e-10);
      CHECK(std::abs(a.marg_var[i] - b.marg_var[i]) / a.marg_var[i] < 1e-9);
    }
    CHECK(rel_err(log_Z(m, a), log_Z(m, b)) < 1e-9);
  }
}

TEST_CASE("log Z derivatives are the Gaussian moments") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 2 + rep % 4;
    const Index d = 2 + rep % 7;
    const ModelInstance m = random_model(rng, n, d, 0.2);
    const NaturalTuple site = random_tuple(rng, d);
    const PosteriorMoments pm = posterior_moments(m, site);
    for (Index i = 0; i < d; ++i) {
      const auto along_first = [&](double x) {
        NaturalTuple s = site;
        s.first[i] = x;
        return log_Z(m, s);
      };
      const auto along_second = [&](double x) {
        NaturalTuple s = site;
        s.second[i] = x;
        return log_Z(m, s);
      };
      const double g1 = central_difference(along_first, site.first[i], 1e-6);
      const double g2 = central_difference(along_second, site.second[i], 1e-6);
      CHECK(rel_err(g1, pm.mean[i], 1e-3) < 1e-5);
      CHECK(rel_err(g2, -0.5 * (pm.marg_var[i] + pm.mean[i] * pm.mean[i]), 1e-3) < 1e-5);
    }
  }
}

TEST_CASE("moment queries reject bad sites") {
  std::mt19937_64 rng(1);
  const ModelInstance m = random_model(rng, 3, 4);
  NaturalTuple site = NaturalTuple::constant(4, 0.0, 1.0);
  site.second[2] = 0.0;
  CHECK_THROWS_AS(posterior_moments(m, site), ConstraintViolation);
  CHECK_THROWS_AS(posterior_covariance(m, site), ConstraintViolation);
  CHECK_THROWS_AS(posterior_moments(m, NaturalTuple::constant(5, 0.0, 1.0)),
                  DimensionMismatch);
}
