#include "olrwa/hyperplane.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "olrwa/errors.hpp"

namespace olrwa {

namespace {

void require_same_dim(const Hyperplane& h1, const Hyperplane& h2, const char* where) {
  if (h1.coeffs.size() != h2.coeffs.size()) {
    throw ContractViolation(std::string(where) + ": hyperplanes have " +
                            std::to_string(h1.coeffs.size()) + " and " +
                            std::to_string(h2.coeffs.size()) + " features");
  }
}

}  // namespace

double Hyperplane::predict(std::span<const double> x) const {
  if (x.size() != coeffs.size()) throw ContractViolation("Hyperplane::predict: feature count mismatch");
  return intercept + dot(coeffs, x);
}

Vector norm_vector(const Hyperplane& h) {
  Vector n(h.coeffs);
  n.push_back(-1.0);
  return n;
}

Vector augmented(const Hyperplane& h) {
  Vector a;
  a.reserve(h.coeffs.size() + 2);
  a.push_back(h.intercept);
  a.insert(a.end(), h.coeffs.begin(), h.coeffs.end());
  a.push_back(-1.0);
  return a;
}

bool coincide_augmented(std::span<const double> a, std::span<const double> b, double rel_tol) {
  if (a.size() != b.size()) throw ContractViolation("coincide: dimension mismatch");
  Vector na = normalize(a);
  Vector nb = normalize(b);
  const double sign = dot(na, nb) < 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (std::abs(na[i] - sign * nb[i]) > rel_tol) return false;
  }
  return true;
}

bool coincide(const Hyperplane& h1, const Hyperplane& h2, double rel_tol) {
  require_same_dim(h1, h2, "coincide");
  return coincide_augmented(augmented(h1), augmented(h2), rel_tol);
}

IntersectionOutcome intersect(const Hyperplane& h1, const Hyperplane& h2) {
  require_same_dim(h1, h2, "intersect");
  if (coincide(h1, h2)) return Coincident{};
  const Vector n1 = norm_vector(h1);
  const Vector n2 = norm_vector(h2);
  // Same dependence test as min_norm_solution so the two never disagree.
  if (!rows_independent(n1, n2)) return Parallel{};
  Matrix a(2, n1.size());
  std::copy(n1.begin(), n1.end(), a.row(0).begin());
  std::copy(n2.begin(), n2.end(), a.row(1).begin());
  const double b[2] = {-h1.intercept, -h2.intercept};
  return JointPoint{min_norm_solution(a, b)};
}

JointPoint weighted_midpoint(const Hyperplane& h1, const Hyperplane& h2, double alpha) {
  require_same_dim(h1, h2, "weighted_midpoint");
  if (rows_independent(norm_vector(h1), norm_vector(h2))) {
    throw ContractViolation("weighted_midpoint: hyperplanes are not parallel");
  }
  JointPoint p{Vector(h1.coeffs.size() + 1, 0.0)};
  p.coords.back() = (1.0 - alpha) * h1.intercept + alpha * h2.intercept;
  return p;
}

Hyperplane from_normal_and_point(std::span<const double> n, const JointPoint& p) {
  if (n.size() < 2 || n.size() != p.coords.size()) {
    throw ContractViolation("from_normal_and_point: normal and point lengths differ");
  }
  const std::size_t m = n.size() - 1;
  const double nt = n[m];
  if (!(std::abs(nt) > 1e-9 * norm2(n))) {
    throw VerticalHyperplane("from_normal_and_point: target component of normal is ~0");
  }
  Hyperplane h;
  h.coeffs.resize(m);
  double offset = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    h.coeffs[i] = -n[i] / nt;
    offset += h.coeffs[i] * p.coords[i];
  }
  h.intercept = p.coords[m] - offset;
  return h;
}

Vector ewma_combine(std::span<const double> v_base, std::span<const double> v_inc, double alpha) {
  if (v_base.size() != v_inc.size()) throw ContractViolation("ewma_combine: length mismatch");
  Vector out(v_base.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - alpha) * v_base[i] + alpha * v_inc[i];
  }
  return out;
}

}  // namespace olrwa
