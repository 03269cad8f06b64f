#pragma once

#include <Eigen/Dense>

namespace ssep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kDefaultEps = 1e-6;

/// Paired natural parameters (linear, precision) of d independent
/// one-dimensional Gaussian factors exp{first_i w - second_i w^2 / 2}.
///
/// The same type carries the three roles used by the EP energy: site
/// parameters, cavity parameters and marginal parameters.
struct NaturalTuple {
  Vector first;
  Vector second;

  NaturalTuple() = default;
  NaturalTuple(Vector first_, Vector second_);

  static NaturalTuple constant(Index d, double first, double second);

  Index size() const { return first.size(); }
  bool all_finite() const;

  friend NaturalTuple operator+(const NaturalTuple& a, const NaturalTuple& b);
  friend NaturalTuple operator-(const NaturalTuple& a, const NaturalTuple& b);
  friend NaturalTuple operator*(double s, const NaturalTuple& a);
};

enum class TupleRole { site, cavity, marginal };

// Lower limit on the precision component: eps for sites and cavities,
// 3 eps for marginals.
double precision_floor(TupleRole role, double eps);

bool is_admissible(const NaturalTuple& t, TupleRole role, double eps);

// Throws ConstraintViolation(inequality) when a precision lies below its
// floor or an entry is non-finite.
void require_admissible(const NaturalTuple& t, TupleRole role, double eps);

// Largest |a - b| over both components.
double sup_distance(const NaturalTuple& a, const NaturalTuple& b);

}  // namespace ssep
