#include "ssep/natural.hpp"

#include <string>

#include "ssep/errors.hpp"

namespace ssep {

NaturalTuple::NaturalTuple(Vector first_, Vector second_)
    : first(std::move(first_)), second(std::move(second_)) {
  if (first.size() != second.size()) {
    throw DimensionMismatch("NaturalTuple: first has " +
                            std::to_string(first.size()) +
                            " entries, second has " +
                            std::to_string(second.size()));
  }
}

NaturalTuple NaturalTuple::constant(Index d, double first, double second) {
  return {Vector::Constant(d, first), Vector::Constant(d, second)};
}

bool NaturalTuple::all_finite() const {
  return first.allFinite() && second.allFinite();
}

namespace {
void check_same_size(const NaturalTuple& a, const NaturalTuple& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("NaturalTuple size mismatch: " +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
}
}  // namespace

NaturalTuple operator+(const NaturalTuple& a, const NaturalTuple& b) {
  check_same_size(a, b);
  return {a.first + b.first, a.second + b.second};
}

NaturalTuple operator-(const NaturalTuple& a, const NaturalTuple& b) {
  check_same_size(a, b);
  return {a.first - b.first, a.second - b.second};
}

NaturalTuple operator*(double s, const NaturalTuple& a) {
  return {s * a.first, s * a.second};
}

double precision_floor(TupleRole role, double eps) {
  return role == TupleRole::marginal ? 3.0 * eps : eps;
}

bool is_admissible(const NaturalTuple& t, TupleRole role, double eps) {
  if (!t.all_finite()) return false;
  const double floor = precision_floor(role, eps);
  return (t.second.array() >= floor).all();
}

void require_admissible(const NaturalTuple& t, TupleRole role, double eps) {
  if (is_admissible(t, role, eps)) return;
  static constexpr const char* names[] = {"site", "cavity", "marginal"};
  const char* name = names[static_cast<int>(role)];
  if (!t.all_finite()) {
    throw ConstraintViolation(ConstraintKind::inequality,
                              std::string(name) + " parameters are not finite");
  }
  Index i = 0;
  t.second.minCoeff(&i);
  throw ConstraintViolation(
      ConstraintKind::inequality,
      std::string(name) + " precision " + std::to_string(t.second[i]) +
          " at index " + std::to_string(i) + " is below the floor " +
          std::to_string(precision_floor(role, eps)));
}

double sup_distance(const NaturalTuple& a, const NaturalTuple& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("sup_distance: size mismatch");
  }
  if (a.size() == 0) return 0.0;
  return std::max((a.first - b.first).cwiseAbs().maxCoeff(),
                  (a.second - b.second).cwiseAbs().maxCoeff());
}

}  // namespace ssep
