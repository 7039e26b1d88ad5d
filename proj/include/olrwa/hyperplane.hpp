#pragma once

// Regression hyperplanes y = w0 + w.x seen as surfaces w0 + w.x - y = 0 in
// the joint (x, y) space. The target coordinate is always the last one.

#include <span>
#include <variant>

#include "olrwa/linalg.hpp"

namespace olrwa {

struct Hyperplane {
  double intercept = 0.0;
  Vector coeffs;

  std::size_t num_features() const noexcept { return coeffs.size(); }
  double predict(std::span<const double> x) const;
};

struct JointPoint {
  Vector coords;  // M feature coordinates followed by the target coordinate
};

struct Coincident {};
struct Parallel {};

using IntersectionOutcome = std::variant<JointPoint, Coincident, Parallel>;

// (w1, ..., wM, -1)
Vector norm_vector(const Hyperplane& h);

// (w0, w1, ..., wM, -1): the full homogeneous equation.
Vector augmented(const Hyperplane& h);

// Proportionality test on two homogeneous equation vectors of equal length.
bool coincide_augmented(std::span<const double> a, std::span<const double> b,
                        double rel_tol = 1e-9);

bool coincide(const Hyperplane& h1, const Hyperplane& h2, double rel_tol = 1e-9);

IntersectionOutcome intersect(const Hyperplane& h1, const Hyperplane& h2);

// (1 - alpha) (0, ..., h1.intercept) + alpha (0, ..., h2.intercept).
// Throws ContractViolation unless the direction parts are proportional.
JointPoint weighted_midpoint(const Hyperplane& h1, const Hyperplane& h2, double alpha);

// Hyperplane with normal n through p. Throws VerticalHyperplane when the
// target component of n is within 1e-9 ||n|| of zero.
Hyperplane from_normal_and_point(std::span<const double> n, const JointPoint& p);

// (1 - alpha) v_base + alpha v_inc, no renormalisation.
Vector ewma_combine(std::span<const double> v_base, std::span<const double> v_inc, double alpha);

}  // namespace olrwa
