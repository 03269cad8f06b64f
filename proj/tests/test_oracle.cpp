#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ssep/oracle.hpp"
#include "support.hpp"

using namespace ssep;
using namespace ssep::testing;

namespace {

// Enumeration written in precision form: for each inclusion pattern the
// included coefficients have posterior precision X_z'X_z / s2 + I / v and the
// pattern evidence follows from the Gaussian identity
//   N(y | 0, s2 I + v X_z X_z') = N(y | 0, s2 I) |v P_z|^(-1/2) exp(b'P_z^-1 b / 2)
// with b = X_z'y / s2.
ExactPosterior precision_form(const ModelInstance& m) {
  const Index d = m.d();
  const Index n = m.n();
  const double s2 = m.noise_var();
  const double v = m.slab_var();
  const double p = m.slab_prob();
  const double base = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * s2) -
                      0.5 * m.targets().squaredNorm() / s2;
  std::vector<double> log_w;
  std::vector<Vector> means;
  std::vector<Vector> seconds;
  for (unsigned z = 0; z < (1u << d); ++z) {
    std::vector<Index> on;
    for (Index i = 0; i < d; ++i) {
      if (z & (1u << i)) on.push_back(i);
    }
    const Index k = static_cast<Index>(on.size());
    double lw = k * std::log(p) + (d - k) * std::log1p(-p) + base;
    Vector mean = Vector::Zero(d);
    Vector second = Vector::Zero(d);
    if (k > 0) {
      Matrix xz(n, k);
      for (Index a = 0; a < k; ++a) xz.col(a) = m.design().col(on[a]);
      Matrix prec = xz.transpose() * xz / s2;
      prec.diagonal().array() += 1.0 / v;
      const Vector b = xz.transpose() * m.targets() / s2;
      const Eigen::FullPivLU<Matrix> lu(prec);
      const Vector mz = lu.solve(b);
      const Matrix cov = lu.inverse();
      lw += -0.5 * std::log(std::pow(v, static_cast<double>(k)) * lu.determinant()) +
            0.5 * b.dot(mz);
      for (Index a = 0; a < k; ++a) {
        mean[on[a]] = mz[a];
        second[on[a]] = cov(a, a) + mz[a] * mz[a];
      }
    }
    log_w.push_back(lw);
    means.push_back(mean);
    seconds.push_back(second);
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  for (double lw : log_w) total += std::exp(lw - top);
  ExactPosterior out;
  out.log_evidence = top + std::log(total);
  out.mean = Vector::Zero(d);
  Vector second = Vector::Zero(d);
  out.inclusion_prob = Vector::Zero(d);
  for (std::size_t z = 0; z < log_w.size(); ++z) {
    const double w = std::exp(log_w[z] - out.log_evidence);
    out.mean += w * means[z];
    second += w * seconds[z];
    for (Index i = 0; i < d; ++i) {
      if (z & (1u << i)) out.inclusion_prob[i] += w;
    }
  }
  out.marg_var = second - out.mean.cwiseProduct(out.mean);
  return out;
}

double max_gap(const ExactPosterior& a, const ExactPosterior& b) {
  return std::max({(a.mean - b.mean).cwiseAbs().maxCoeff(),
                   (a.marg_var - b.marg_var).cwiseAbs().maxCoeff(),
                   (a.inclusion_prob - b.inclusion_prob).cwiseAbs().maxCoeff()});
}

}  // namespace

TEST_CASE("no data: the posterior is the prior") {
  const ModelInstance m(Matrix::Zero(3, 4), Vector::Ones(3), 0.5, 0.3, 2.0);
  const ExactPosterior e = exact_posterior(m);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(e.mean[i]) < 1e-14);
    CHECK(e.inclusion_prob[i] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(e.marg_var[i] == doctest::Approx(0.6).epsilon(1e-12));
  }
  CHECK(e.log_evidence ==
        doctest::Approx(-1.5 * std::log(2.0 * std::numbers::pi * 0.5) - 3.0).epsilon(1e-12));
}

TEST_CASE("symmetric likelihood gives zero mean") {
  const ModelInstance m(Matrix::Ones(1, 1), Vector::Zero(1), 0.1, 0.4, 1.0);
  CHECK(std::abs(exact_posterior(m).mean[0]) < 1e-15);
}

TEST_CASE("scalar model matches quadrature") {
  const double x = 0.8;
  const double y = 0.6;
  const double s2 = 0.05;
  const double p = 0.3;
  const double v = 1.5;
  const ModelInstance m(Matrix::Constant(1, 1, x), Vector::Constant(1, y), s2, p, v);
  const auto lik = [&](double w) {
    const double r = y - x * w;
    return std::exp(-0.5 * r * r / s2) / std::sqrt(2.0 * std::numbers::pi * s2);
  };
  const auto slab = [&](double w) {
    return std::exp(-0.5 * w * w / v) / std::sqrt(2.0 * std::numbers::pi * v);
  };
  const double prec = x * x / s2 + 1.0 / v;
  const double centre = x * y / s2 / prec;
  const double scale = 1.0 / std::sqrt(prec);
  const double z1 = integrate_line([&](double w) { return slab(w) * lik(w); }, centre, scale).value;
  const double m1 = integrate_line([&](double w) { return w * slab(w) * lik(w); }, centre, scale).value;
  const double m2 =
      integrate_line([&](double w) { return w * w * slab(w) * lik(w); }, centre, scale).value;
  const double evidence = p * z1 + (1.0 - p) * lik(0.0);
  const ExactPosterior e = exact_posterior(m);
  CHECK(e.log_evidence == doctest::Approx(std::log(evidence)).epsilon(1e-10));
  CHECK(e.mean[0] == doctest::Approx(p * m1 / evidence).epsilon(1e-10));
  const double mean = p * m1 / evidence;
  CHECK(e.marg_var[0] == doctest::Approx(p * m2 / evidence - mean * mean).epsilon(1e-9));
  CHECK(e.inclusion_prob[0] == doctest::Approx(p * z1 / evidence).epsilon(1e-10));
}

TEST_CASE("covariance and precision enumerations agree") {
  std::mt19937_64 rng(89);
  for (int rep = 0; rep < 10; ++rep) {
    const Index d = 3 + rep % 4;
    const ModelInstance m = random_model(rng, 1 + rep % 5, d, 0.05 + 0.05 * rep, 0.25, 1.0);
    const ExactPosterior a = exact_posterior(m);
    const ExactPosterior b = precision_form(m);
    CHECK(max_gap(a, b) < 1e-10);
    CHECK(std::abs(a.log_evidence - b.log_evidence) < 1e-10);
    CHECK(a.inclusion_prob.minCoeff() >= 0.0);
    CHECK(a.inclusion_prob.maxCoeff() <= 1.0);
    CHECK(a.marg_var.minCoeff() >= 0.0);
  }
}

TEST_CASE("near-certain slab reduces to the Gaussian posterior") {
  std::mt19937_64 rng(97);
  const ModelInstance m = random_model(rng, 4, 6, 0.1, 1.0 - 1e-14, 1.0);
  const ExactPosterior e = exact_posterior(m);
  const DenseMoments g = dense_moments(m, NaturalTuple::constant(6, 0.0, 1.0));
  CHECK((e.mean - g.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((e.marg_var - g.covariance.diagonal()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("permuting columns permutes the summaries") {
  std::mt19937_64 rng(101);
  const ModelInstance m = random_model(rng, 4, 7, 0.01, 0.2, 1.0);
  std::vector<Index> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(4, 7);
  for (Index j = 0; j < 7; ++j) xp.col(j) = m.design().col(perm[j]);
  const ModelInstance mp(xp, m.targets(), m.noise_var(), m.slab_prob(), m.slab_var());
  const ExactPosterior a = exact_posterior(m);
  const ExactPosterior b = exact_posterior(mp);
  for (Index j = 0; j < 7; ++j) {
    CHECK(std::abs(b.mean[j] - a.mean[perm[j]]) < 1e-10);
    CHECK(std::abs(b.marg_var[j] - a.marg_var[perm[j]]) < 1e-10);
    CHECK(std::abs(b.inclusion_prob[j] - a.inclusion_prob[perm[j]]) < 1e-10);
  }
  CHECK(std::abs(a.log_evidence - b.log_evidence) < 1e-9);
}

TEST_CASE("parallel enumeration matches the serial reference") {
  std::mt19937_64 rng(103);
  const ModelInstance m = random_model(rng, 5, 11, 2.5e-5, 0.2, 1.0);
  const ExactPosterior a = exact_posterior(m);
  const ExactPosterior b = exact_posterior_serial(m);
  CHECK(max_gap(a, b) < 1e-10);
  CHECK(std::abs(a.log_evidence - b.log_evidence) < 1e-10);
}

TEST_CASE("dimension cap") {
  std::mt19937_64 rng(107);
  const ModelInstance m = random_model(rng, 2, 5);
  CHECK_THROWS_AS(exact_posterior(m, 4), std::invalid_argument);
  CHECK_THROWS_AS(exact_posterior_serial(m, 4), std::invalid_argument);
  CHECK_NOTHROW(exact_posterior(m, 5));
}
