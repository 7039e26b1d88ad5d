#include <doctest.h>

#include <cmath>

#include "olrwa/datagen.hpp"
#include "olrwa/errors.hpp"
#include "olrwa/olr_wa.hpp"
#include "support.hpp"

using namespace olrwa;
using olrwa::test::max_diff;

namespace {

Matrix column(std::initializer_list<double> xs) {
  Matrix m;
  for (double v : xs) m.append_row(Vector{v});
  return m;
}

// Noisy stream from one concept, cut into batches of k rows.
Dataset concept_data(std::size_t n, std::size_t m, double noise, std::uint64_t seed) {
  BaseShape shape;
  shape.n = n;
  shape.m = m;
  shape.noise_std = noise;
  shape.seed = seed;
  return Stream(stationary_spec(shape)).materialize();
}

}  // namespace

TEST_SUITE("olr_wa") {

TEST_CASE("init fits the base model") {
  OlrWa a(0.5);
  a.init_base(column({0, 1, 2}), Vector{0, 1, 2});
  CHECK(a.base().intercept == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(max_diff(a.base().coeffs, Vector{1}) < 1e-12);

  OlrWa b(0.5);
  b.init_base(column({0, 1}), Vector{3, 3});
  CHECK(b.base().intercept == doctest::Approx(3.0));
  CHECK(std::abs(b.base().coeffs[0]) < 1e-12);

  OlrWa c(0.5);
  c.init_base(column({0, 1, 2}), Vector{1, 1, 4});
  CHECK(c.base().intercept == doctest::Approx(0.5));
  CHECK(max_diff(c.base().coeffs, Vector{1.5}) < 1e-12);
  CHECK_THROWS_AS(c.init_base(column({0, 1}), Vector{0, 1}), StateError);
}

TEST_CASE("lifecycle and argument checks") {
  CHECK_THROWS_AS(OlrWa(0.0), ContractViolation);
  CHECK_THROWS_AS(OlrWa(1.5), ContractViolation);
  OlrWa a(0.5);
  CHECK_THROWS_AS(a.partial_fit(column({0, 1}), Vector{0, 1}), StateError);
  a.init_base(column({0, 1, 2}), Vector{0, 1, 2});
  CHECK_THROWS_AS(a.partial_fit(Matrix{{0, 1}, {1, 1}}, Vector{0, 1}), ContractViolation);
  CHECK_THROWS_AS(a.partial_fit(column({0, 1}), Vector{0, NAN}), InputError);
}

TEST_CASE("identical concept is skipped") {
  OlrWa a(0.5);
  a.init_base(column({0, 1, 2}), Vector{0, 1, 2});
  const auto t = a.partial_fit(column({3, 4, 5}), Vector{3, 4, 5});
  CHECK(t.outcome == StepOutcome::SkippedCoincident);
  CHECK(a.updates_applied() == 0);
  CHECK(max_diff(a.base().coeffs, Vector{1}) < 1e-12);
}

TEST_CASE("symmetric average of crossing lines") {
  OlrWa a(0.5);
  a.init_base(column({0, 1, 2}), Vector{0, 1, 2});
  const auto t = a.partial_fit(column({0, 1, 2}), Vector{2, 1, 0});
  CHECK(t.outcome == StepOutcome::Updated);
  CHECK(max_diff(t.p_int.coords, Vector{1, 1}) < 1e-12);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(max_diff(t.v_base, Vector{s, -s}) < 1e-12);
  CHECK(max_diff(t.v_inc, Vector{-s, -s}) < 1e-12);
  CHECK(max_diff(t.v_avg, Vector{0, -s}) < 1e-12);
  CHECK(a.base().intercept == doctest::Approx(1.0));
  CHECK(std::abs(a.base().coeffs[0]) < 1e-12);
}

TEST_CASE("alpha one replaces the base with the incremental fit") {
  OlrWa a(1.0);
  a.init_base(column({0, 1, 2}), Vector{0, 1, 2});
  a.partial_fit(column({0, 1, 2}), Vector{2, 1, 0});
  CHECK(std::abs(a.base().intercept - 2.0) < 1e-9);
  CHECK(max_diff(a.base().coeffs, Vector{-1}) < 1e-9);
}

TEST_CASE("parallel batch uses the weighted midpoint") {
  OlrWa a(0.25);
  a.init_base(column({0, 1, 2}), Vector{1, 4, 7});
  const auto t = a.partial_fit(column({0, 1, 2}), Vector{5, 8, 11});
  CHECK(t.outcome == StepOutcome::ParallelMidpointUsed);
  CHECK(a.base().intercept == doctest::Approx(2.0));
  CHECK(max_diff(a.base().coeffs, Vector{3}) < 1e-12);
}

TEST_CASE("predict") {
  OlrWa a(0.5);
  a.init_base(column({0, 1}), Vector{1, 3});
  CHECK(max_diff(a.predict(column({0, 3})), Vector{1, 7}) < 1e-12);
  OlrWa b(0.5);
  b.init_base(column({0, 1, 2}), Vector{1, 1, 4});
  CHECK(max_diff(b.predict(column({2})), Vector{3.5}) < 1e-12);
}

TEST_CASE("json round trip") {
  OlrWa a(0.3);
  a.init_base(column({0, 1, 2}), Vector{1, 1, 4});
  a.partial_fit(column({0, 1, 2}), Vector{2, 1, 0});
  const OlrWa b = OlrWa::from_json(a.to_json());
  CHECK(b.alpha() == a.alpha());
  CHECK(b.base().intercept == a.base().intercept);
  CHECK(b.base().coeffs == a.base().coeffs);
  auto doc = a.to_json();
  doc["schema_version"] = 99;
  CHECK_THROWS_AS(OlrWa::from_json(doc), InputError);
}

TEST_CASE("property: new base passes through the intersection point") {
  const Dataset d = concept_data(3000, 4, 20.0, 5);
  Rng rng(31);
  OlrWa a(0.5);
  a.init_base(d.x.slice_rows(0, 100), std::span(d.y).subspan(0, 100));
  for (std::size_t begin = 100; begin + 20 <= d.rows(); begin += 20) {
    const auto t = a.partial_fit(d.x.slice_rows(begin, 20), std::span(d.y).subspan(begin, 20));
    if (t.outcome != StepOutcome::Updated) continue;
    const auto& p = t.p_int.coords;
    const double y = a.base().predict(std::span(p).first(4));
    CHECK(std::abs(y - p.back()) <= 1e-9 * (1.0 + std::abs(p.back())));
    CHECK(std::abs(norm2(t.v_base) - 1.0) < 1e-12);
    CHECK(std::abs(norm2(t.v_inc) - 1.0) < 1e-12);
  }
}

TEST_CASE("property: alpha one reproduces every incremental fit") {
  const Dataset d = concept_data(2000, 3, 30.0, 6);
  OlrWa a(1.0);
  a.init_base(d.x.slice_rows(0, 100), std::span(d.y).subspan(0, 100));
  for (std::size_t begin = 100; begin + 25 <= d.rows(); begin += 25) {
    const auto t = a.partial_fit(d.x.slice_rows(begin, 25), std::span(d.y).subspan(begin, 25));
    REQUIRE(t.outcome == StepOutcome::Updated);
    CHECK(std::abs(a.base().intercept - t.inc_model.intercept) <= 1e-9 * (1 + std::abs(t.inc_model.intercept)));
    CHECK(max_diff(a.base().coeffs, t.inc_model.coeffs) <= 1e-9 * (1 + max_abs(t.inc_model.coeffs)));
  }
}

TEST_CASE("property: noiseless stationary stream keeps the concept") {
  const Dataset d = concept_data(1000, 3, 0.0, 7);
  const Hyperplane truth = fit_hyperplane(d.x, d.y);
  OlrWa a(0.5);
  a.init_base(d.x.slice_rows(0, 50), std::span(d.y).subspan(0, 50));
  for (std::size_t begin = 50; begin + 15 <= d.rows(); begin += 15) {
    const auto t = a.partial_fit(d.x.slice_rows(begin, 15), std::span(d.y).subspan(begin, 15));
    CHECK((t.outcome == StepOutcome::SkippedCoincident || t.outcome == StepOutcome::Updated));
    CHECK(max_diff(a.base().coeffs, truth.coeffs) < 1e-6);
    CHECK(std::abs(a.base().intercept - truth.intercept) < 1e-6);
  }
}

TEST_CASE("property: runs are bit-identical") {
  const Dataset d = concept_data(1500, 5, 10.0, 8);
  auto run = [&] {
    OlrWa a(0.37);
    a.init_base(d.x.slice_rows(0, 100), std::span(d.y).subspan(0, 100));
    std::vector<StepTrace> out;
    for (std::size_t begin = 100; begin + 25 <= d.rows(); begin += 25) {
      out.push_back(a.partial_fit(d.x.slice_rows(begin, 25), std::span(d.y).subspan(begin, 25)));
    }
    return out;
  };
  const auto r1 = run(), r2 = run();
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].v_avg == r2[i].v_avg);
    CHECK(r1[i].p_int.coords == r2[i].p_int.coords);
    CHECK(r1[i].inc_model.coeffs == r2[i].inc_model.coeffs);
  }
}

TEST_CASE("property: EWMA telescoping over replayed incremental normals") {
  const Dataset d = concept_data(3000, 3, 25.0, 9);
  for (double alpha : {0.1, 0.5, 0.9}) {
    OlrWa a(alpha);
    a.init_base(d.x.slice_rows(0, 100), std::span(d.y).subspan(0, 100));
    std::vector<Vector> incs;
    Vector v0;
    for (std::size_t begin = 100; incs.size() < 100; begin += 25) {
      const auto t = a.partial_fit(d.x.slice_rows(begin, 25), std::span(d.y).subspan(begin, 25));
      if (v0.empty()) v0 = t.v_base;
      incs.push_back(t.v_inc);
    }
    Vector v = v0;
    for (std::size_t t = 1; t <= incs.size(); ++t) {
      v = ewma_combine(v, incs[t - 1], alpha);
      Vector closed(v0.size());
      for (std::size_t i = 0; i < v0.size(); ++i) closed[i] = std::pow(1 - alpha, t) * v0[i];
      for (std::size_t k = 0; k < t; ++k) {
        const double w = alpha * std::pow(1 - alpha, k);
        for (std::size_t i = 0; i < v0.size(); ++i) closed[i] += w * incs[t - 1 - k][i];
      }
      CHECK(max_diff(v, closed) <= 1e-9);
    }
  }
}

}
