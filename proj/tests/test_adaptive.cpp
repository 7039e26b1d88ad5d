#include <doctest.h>

#include <limits>

#include "olrwa/adaptive.hpp"
#include "olrwa/datagen.hpp"
#include "olrwa/errors.hpp"
#include "support.hpp"

using namespace olrwa;

namespace {

KpiWindow window_of(std::initializer_list<double> r2s, std::size_t capacity) {
  KpiWindow w(capacity);
  for (double v : r2s) w.push({v, 1.0 - v, 0, false});
  return w;
}

Dataset abrupt_data(std::uint64_t seed) {
  BaseShape shape;
  shape.n = 6000;
  shape.m = 5;
  shape.noise_std = 5.0;
  shape.seed = seed;
  return Stream(abrupt_spec(shape, 3000, 300.0)).materialize();
}

}  // namespace

TEST_SUITE("adaptive") {

TEST_CASE("window capacity") {
  CHECK(window_capacity(10000, 50, 0.05) == 11);
  CHECK(window_capacity(100000, 100, 0.05) == 31);
  CHECK(window_capacity(9000, 20, 0.05) == 23);
  CHECK_THROWS_AS(KpiWindow(10), ContractViolation);
  CHECK_THROWS_AS(KpiWindow(32), ContractViolation);
}

TEST_CASE("kpis") {
  const Hyperplane h{1, {0}};
  const Matrix x{{0}, {1}};
  const auto bag = compute_kpis(h, x, Vector{0, 2});
  CHECK(bag.mse == doctest::Approx(1.0));
  CHECK(bag.r2 == doctest::Approx(0.0));
  const auto perfect = compute_kpis({0, {2}}, x, Vector{0, 2});
  CHECK(perfect.r2 == 1.0);
  CHECK(perfect.mse == 0.0);
}

TEST_CASE("measure excludes the current entry") {
  auto w = window_of({0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.2}, 11);
  auto band = measure(w, 2.0, KpiSelector::R2);
  REQUIRE(band);
  CHECK(band->mu == doctest::Approx(0.9));
  CHECK(band->sigma == doctest::Approx(0.0));
  CHECK(band->tau == doctest::Approx(0.0));
  CHECK(band->low == doctest::Approx(band->high));

  // Eleven baseline values plus the current one.
  w = window_of({0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.7, 0.1}, 12);
  band = measure(w, 2.0, KpiSelector::R2);
  REQUIRE(band);
  CHECK(band->mu == doctest::Approx(0.881818).epsilon(1e-5));
  CHECK(band->sigma == doctest::Approx(0.057496).epsilon(1e-4));
  CHECK(band->tau == doctest::Approx(0.115).epsilon(1e-3));
  CHECK(band->low == band->mu - band->tau);
  CHECK(band->high == band->mu + band->tau);
}

TEST_CASE("measure on a two-point baseline") {
  // Population sigma of {0.8, 1.0} is 0.1; checked through a full window of
  // alternating values whose baseline is exactly that pair repeated.
  KpiWindow w(11);
  for (int i = 0; i < 10; ++i) w.push({i % 2 ? 1.0 : 0.8, 0, 0, false});
  w.push({0.5, 0, 0, false});
  const auto band = measure(w, 1.5, KpiSelector::R2);
  REQUIRE(band);
  CHECK(band->mu == doctest::Approx(0.9));
  CHECK(band->sigma == doctest::Approx(0.1));
  CHECK(band->tau == doctest::Approx(0.15));
  CHECK(band->low == doctest::Approx(0.75));
  CHECK(band->high == doctest::Approx(1.05));
}

TEST_CASE("warm-up has no band") {
  const auto w = window_of({0.9, 0.9, 0.9}, 11);
  CHECK_FALSE(measure(w, 2.0, KpiSelector::R2));
}

TEST_CASE("detection and magnitude") {
  CHECK(detect_drift(0.9, 0.75, 0.1, KpiSelector::R2));
  CHECK_FALSE(detect_drift(0.9, 0.85, 0.1, KpiSelector::R2));
  CHECK(detect_drift(0.2, 0.3, 0.05, KpiSelector::Mse));
  // Improvements never count.
  CHECK_FALSE(detect_drift(0.5, 0.99, 0.1, KpiSelector::R2));
  CHECK_FALSE(detect_drift(0.5, 0.01, 0.1, KpiSelector::Mse));
  CHECK(drift_magnitude(0.9, 0.6) == doctest::Approx(0.3));
  CHECK(drift_magnitude(0.9, 0.9) == 0.0);
  CHECK(drift_magnitude(0.2, 0.5) == doctest::Approx(-0.3));
}

TEST_CASE("scale maps") {
  const auto time = define_scale_map(0.9, 0.7, 1.1, AdaptMode::TimeBased);
  CHECK(tune_alpha(time, drift_magnitude(0.9, 0.68)) == 1.0);
  CHECK(tune_alpha(time, drift_magnitude(0.9, 0.80)) == doctest::Approx(0.75));
  const auto conf = define_scale_map(0.9, 0.7, 1.1, AdaptMode::ConfidenceBased);
  CHECK(tune_alpha(conf, drift_magnitude(0.9, 0.68)) == 0.005);
  CHECK(time.breakpoints.size() == kScaleRegions + 1);
  CHECK(time.alphas.size() == kScaleRegions + 1);
  for (std::size_t j = 1; j < time.breakpoints.size(); ++j) {
    CHECK(time.breakpoints[j] < time.breakpoints[j - 1]);
  }
  const auto mse_map = define_scale_map(0.2, 0.1, 0.3, AdaptMode::TimeBased, KpiSelector::Mse);
  for (std::size_t j = 1; j < mse_map.breakpoints.size(); ++j) {
    CHECK(mse_map.breakpoints[j] > mse_map.breakpoints[j - 1]);
  }
  CHECK(tune_alpha(mse_map, drift_magnitude(0.2, 0.5)) == 1.0);
}

TEST_CASE("severity") {
  const BandStats band{0.9, 0.05, 0.1, 0.8, 1.0};
  CHECK(assess(band, 0.7, KpiSelector::R2).severity == Severity::Abrupt);
  CHECK(assess(band, 0.85, KpiSelector::R2).severity == Severity::Incremental);
  CHECK(assess(band, 0.95, KpiSelector::R2).severity == Severity::None);
}

TEST_CASE("property: detection is monotone in the current KPI") {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const double mu = rng.uniform(-1, 1), tau = rng.uniform(0, 0.5);
    const double c = rng.uniform(-2, 2), worse = rng.uniform(0, 1);
    if (detect_drift(mu, c, tau, KpiSelector::R2)) CHECK(detect_drift(mu, c - worse, tau, KpiSelector::R2));
    if (detect_drift(mu, c, tau, KpiSelector::Mse)) CHECK(detect_drift(mu, c + worse, tau, KpiSelector::Mse));
  }
}

TEST_CASE("property: zero-variance baseline flags any degradation") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = rng.uniform(0, 1);
    KpiWindow w(11);
    for (int i = 0; i < 10; ++i) w.push({v, 0, 0, false});
    w.push({v - rng.uniform(1e-9, 1), 0, 0, false});
    const auto band = measure(w, 2.0, KpiSelector::R2);
    REQUIRE(band);
    CHECK(detect_drift(band->mu, w.entries().back().r2, band->tau, KpiSelector::R2));
  }
}

TEST_CASE("property: tuned alpha is monotone in the degradation") {
  Rng rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    const double mu = rng.uniform(0, 1), tau = rng.uniform(0.01, 0.5);
    const auto time = define_scale_map(mu, mu - tau, mu + tau, AdaptMode::TimeBased);
    const auto conf = define_scale_map(mu, mu - tau, mu + tau, AdaptMode::ConfidenceBased);
    const double d1 = rng.uniform(0, 1), d2 = d1 + rng.uniform(0, 1);
    CHECK(tune_alpha(time, d2) >= tune_alpha(time, d1));
    CHECK(tune_alpha(conf, d2) <= tune_alpha(conf, d1));
  }
}

TEST_CASE("adaptive learner detects an abrupt flip and recovers") {
  const Dataset d = abrupt_data(3);
  OlrWaa model({0.5, 2.0, KpiSelector::R2, AdaptMode::TimeBased, 11});
  model.init_base(d.x.slice_rows(0, 200), std::span(d.y).subspan(0, 200));
  const std::size_t k = 50;
  std::optional<std::size_t> abrupt_at;
  double post = 0.0;
  for (std::size_t begin = 200; begin + k <= d.rows(); begin += k) {
    const auto x = d.x.slice_rows(begin, k);
    const std::span<const double> y(d.y.data() + begin, k);
    const double r2 = compute_kpis(model.base(), x, y).r2;
    const auto step = model.partial_fit(x, y);
    CHECK(model.window().size() <= model.window().capacity());
    if (step.assessment && step.assessment->drift_detected && !abrupt_at && begin >= 3000) {
      abrupt_at = begin;
      CHECK(step.assessment->severity == Severity::Abrupt);
      REQUIRE(step.assessment->alpha_applied);
      CHECK(*step.assessment->alpha_applied == 1.0);
      // Re-weighted base still goes through the step's intersection point.
      const auto& p = step.trace.p_int.coords;
      CHECK(std::abs(model.base().predict(std::span(p).first(5)) - p.back()) <=
            1e-9 * (1.0 + std::abs(p.back())));
    }
    if (begin == 3000 + 11 * k) post = r2;
  }
  REQUIRE(abrupt_at);
  CHECK(*abrupt_at == 3000);
  CHECK(post >= 0.9);
}

TEST_CASE("property: infinite z matches plain OLR-WA bit for bit") {
  const Dataset d = abrupt_data(4);
  OlrWaa adaptive({0.5, std::numeric_limits<double>::infinity(), KpiSelector::R2, AdaptMode::TimeBased, 11});
  OlrWa plain(0.5);
  adaptive.init_base(d.x.slice_rows(0, 200), std::span(d.y).subspan(0, 200));
  plain.init_base(d.x.slice_rows(0, 200), std::span(d.y).subspan(0, 200));
  for (std::size_t begin = 200; begin + 50 <= d.rows(); begin += 50) {
    const auto x = d.x.slice_rows(begin, 50);
    const std::span<const double> y(d.y.data() + begin, 50);
    const auto step = adaptive.partial_fit(x, y);
    plain.partial_fit(x, y);
    CHECK_FALSE((step.assessment && step.assessment->drift_detected));
    CHECK(adaptive.base().intercept == plain.base().intercept);
    CHECK(adaptive.base().coeffs == plain.base().coeffs);
  }
}

TEST_CASE("footprint does not grow with the stream") {
  const Dataset d = abrupt_data(5);
  OlrWaa model({0.5, 2.0, KpiSelector::R2, AdaptMode::TimeBased, 13});
  model.init_base(d.x.slice_rows(0, 200), std::span(d.y).subspan(0, 200));
  std::size_t first_full = 0;
  for (std::size_t begin = 200; begin + 50 <= d.rows(); begin += 50) {
    model.partial_fit(d.x.slice_rows(begin, 50), std::span(d.y).subspan(begin, 50));
    const auto f = model.footprint();
    CHECK(f.model_scalars == 5 + 2);
    CHECK(f.window_scalars == 2 * model.window().size());
    if (model.window().full() && !first_full) first_full = f.total();
    if (first_full) CHECK(f.total() == first_full);
  }
  CHECK(first_full == 7 + 2 * 13 + 6);
}

}
