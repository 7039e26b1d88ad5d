#include <doctest.h>

#include <variant>

#include "olrwa/errors.hpp"
#include "olrwa/hyperplane.hpp"
#include "support.hpp"

using namespace olrwa;
using olrwa::test::max_diff;

namespace {

Hyperplane random_plane(Rng& rng, std::size_t m) {
  return {rng.uniform(-50, 50), test::random_vector(rng, m, -10, 10)};
}

// Signed residual of a joint point against h.
double residual(const Hyperplane& h, std::span<const double> p) {
  const std::size_t m = h.num_features();
  return h.predict(p.first(m)) - p[m];
}

JointPoint point_on(const Hyperplane& h, Rng& rng) {
  JointPoint p;
  p.coords = test::random_vector(rng, h.num_features());
  p.coords.push_back(h.predict(p.coords));
  return p;
}

}  // namespace

TEST_SUITE("hyperplane") {

TEST_CASE("norm vectors") {
  CHECK(norm_vector({5, {2}}) == Vector{2, -1});
  CHECK(norm_vector({0, {0, 0}}) == Vector{0, 0, -1});
  CHECK(norm_vector({1, {3, 4}}) == Vector{3, 4, -1});
  CHECK(augmented({1, {3, 4}}) == Vector{1, 3, 4, -1});
}

TEST_CASE("coincidence") {
  CHECK(coincide({0, {1}}, {0, {1}}));
  CHECK_FALSE(coincide({1, {2}}, {2, {4}}));
  CHECK(coincide({1, {2}}, {1 + 1e-12, {2}}));
  CHECK_FALSE(coincide({1, {2}}, {1, {2.001}}));
}

TEST_CASE("intersection of two lines") {
  const auto out = intersect({0, {1}}, {2, {-1}});
  REQUIRE(std::holds_alternative<JointPoint>(out));
  CHECK(max_diff(std::get<JointPoint>(out).coords, Vector{1, 1}) < 1e-12);

  CHECK(std::holds_alternative<Parallel>(intersect({0, {1}}, {3, {1}})));
  CHECK(std::holds_alternative<Coincident>(intersect({0, {1}}, {0, {1}})));
}

TEST_CASE("intersection in three dimensions satisfies both planes") {
  const auto out = intersect({1, {2, 0}}, {1, {0, 2}});
  REQUIRE(std::holds_alternative<JointPoint>(out));
  const auto& p = std::get<JointPoint>(out).coords;
  CHECK(std::abs(2 * p[0] - p[2] + 1) < 1e-12);
  CHECK(std::abs(2 * p[1] - p[2] + 1) < 1e-12);
}

TEST_CASE("weighted midpoint") {
  CHECK(max_diff(weighted_midpoint({0, {1}}, {2, {1}}, 0.5).coords, Vector{0, 1}) < 1e-15);
  CHECK(max_diff(weighted_midpoint({0, {1}}, {2, {1}}, 1.0).coords, Vector{0, 2}) < 1e-15);
  CHECK(max_diff(weighted_midpoint({1, {3}}, {5, {3}}, 0.25).coords, Vector{0, 2}) < 1e-15);
  CHECK_THROWS_AS(weighted_midpoint({0, {1}}, {0, {2}}, 0.5), ContractViolation);
}

TEST_CASE("hyperplane from a normal and a point") {
  auto h = from_normal_and_point(Vector{1, -1}, {{0, 0}});
  CHECK(h.intercept == doctest::Approx(0.0));
  CHECK(max_diff(h.coeffs, Vector{1}) < 1e-15);
  h = from_normal_and_point(Vector{2, -1}, {{1, 5}});
  CHECK(h.intercept == doctest::Approx(3.0));
  CHECK(max_diff(h.coeffs, Vector{2}) < 1e-15);
  CHECK_THROWS_AS(from_normal_and_point(Vector{1, 0}, {{0, 0}}), VerticalHyperplane);
}

TEST_CASE("ewma combine") {
  CHECK(max_diff(ewma_combine(Vector{1, 0}, Vector{0, 1}, 0.25), Vector{0.75, 0.25}) < 1e-15);
}

TEST_CASE("property: normal is orthogonal to in-plane directions") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto h = random_plane(rng, 1 + rng.below(6));
    const auto p = point_on(h, rng), q = point_on(h, rng);
    Vector d(p.coords.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = q.coords[i] - p.coords[i];
    CHECK(std::abs(dot(norm_vector(h), d)) <= 1e-9 * (1.0 + max_abs(d)));
  }
}

TEST_CASE("property: intersection point lies on both planes") {
  Rng rng(22);
  int points = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.below(6);
    const auto h1 = random_plane(rng, m), h2 = random_plane(rng, m);
    const auto out = intersect(h1, h2);
    if (!std::holds_alternative<JointPoint>(out)) continue;
    ++points;
    const auto& p = std::get<JointPoint>(out).coords;
    const double scale = 1.0 + std::max(std::abs(h1.intercept), std::abs(h2.intercept));
    CHECK(std::abs(residual(h1, p)) <= 1e-9 * scale);
    CHECK(std::abs(residual(h2, p)) <= 1e-9 * scale);
  }
  CHECK(points > 990);
}

TEST_CASE("property: coincidence is invariant to scaling the equation") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto h = random_plane(rng, 1 + rng.below(6));
    double c = rng.uniform(-100, 100);
    if (std::abs(c) < 1e-3) c = 1.0;
    Vector a = augmented(h), b = a;
    for (double& v : b) v *= c;
    CHECK(coincide_augmented(a, b));
  }
}

TEST_CASE("property: midpoint lies between the intercept points and moves monotonically") {
  Rng rng(24);
  for (int trial = 0; trial < 1000; ++trial) {
    auto h1 = random_plane(rng, 1 + rng.below(6));
    Hyperplane h2 = h1;
    h2.intercept = rng.uniform(-50, 50);
    const double a1 = rng.uniform(0.001, 1.0), a2 = rng.uniform(0.001, 1.0);
    const double t1 = weighted_midpoint(h1, h2, a1).coords.back();
    const double t2 = weighted_midpoint(h1, h2, a2).coords.back();
    const double lo = std::min(h1.intercept, h2.intercept), hi = std::max(h1.intercept, h2.intercept);
    CHECK(t1 >= lo - 1e-12);
    CHECK(t1 <= hi + 1e-12);
    // Ordered like alpha when the incremental intercept is higher.
    if (h2.intercept > h1.intercept) CHECK((a1 - a2) * (t1 - t2) >= -1e-12);
    if (h2.intercept < h1.intercept) CHECK((a1 - a2) * (t1 - t2) <= 1e-12);
  }
}

TEST_CASE("property: normal and point round trip") {
  Rng rng(25);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto h = random_plane(rng, 1 + rng.below(6));
    const auto back = from_normal_and_point(normalize(norm_vector(h)), point_on(h, rng));
    CHECK(std::abs(back.intercept - h.intercept) <= 1e-9 * (1.0 + std::abs(h.intercept)));
    CHECK(max_diff(back.coeffs, h.coeffs) <= 1e-9 * (1.0 + max_abs(h.coeffs)));
  }
}

}
