#include <doctest.h>

#include <algorithm>

#include "olrwa/errors.hpp"
#include "olrwa/eval.hpp"
#include "olrwa/metrics.hpp"
#include "support.hpp"

using namespace olrwa;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("r squared and mse") {
  CHECK(*r_squared(Vector{1, 2, 3}, Vector{1, 2, 3}) == 1.0);
  CHECK(*r_squared(Vector{1, 2, 3}, Vector{2, 2, 2}) == 0.0);
  CHECK(*r_squared(Vector{1, 2, 3}, Vector{3, 2, 1}) == doctest::Approx(-3.0));
  CHECK_FALSE(r_squared(Vector{4, 4}, Vector{1, 2}));
  CHECK_THROWS_AS(r_squared(Vector{1, 2}, Vector{1}), ContractViolation);
  CHECK(mse(Vector{0, 2}, Vector{1, 1}) == 1.0);
  CHECK(mse(Vector{1, 2}, Vector{1, 2}) == 0.0);
  const auto report = evaluate(Vector{4, 4, 4}, Vector{4, 4, 5});
  CHECK(report.r2_undefined);
  CHECK(report.r2 == 0.0);
}

TEST_CASE("property: metric invariances") {
  Rng rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(50);
    const Vector y = test::random_vector(rng, n), p = test::random_vector(rng, n);
    const double shift = rng.uniform(-100, 100), c = rng.uniform(0.1, 10);
    Vector ys = y, ps = p, pc = y;
    for (std::size_t i = 0; i < n; ++i) {
      ys[i] += shift;
      ps[i] += shift;
      pc[i] = y[i] + c * (p[i] - y[i]);
    }
    const double r = *r_squared(y, p);
    CHECK(*r_squared(ys, ps) == doctest::Approx(r).epsilon(1e-9));
    CHECK(mse(y, pc) == doctest::Approx(c * c * mse(y, p)).epsilon(1e-12));
  }
}

TEST_CASE("kfold") {
  CHECK(kfold(10, 5, 1).fold_sizes() == std::vector<std::size_t>{2, 2, 2, 2, 2});
  CHECK(kfold(11, 5, 1).fold_sizes() == std::vector<std::size_t>{3, 2, 2, 2, 2});
  CHECK(kfold(100, 5, 7).assignment == kfold(100, 5, 7).assignment);
  CHECK(kfold(100, 5, 7).assignment != kfold(100, 5, 8).assignment);
  CHECK_THROWS_AS(kfold(3, 5, 0), ContractViolation);
}

TEST_CASE("property: folds partition the rows") {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(9), n = k + rng.below(500);
    const auto plan = kfold(n, k, rng.next());
    std::vector<int> seen(n, 0);
    for (std::size_t f = 0; f < k; ++f) {
      const auto test = plan.test_indices(f), train = plan.train_indices(f);
      CHECK(test.size() + train.size() == n);
      CHECK(std::is_sorted(train.begin(), train.end()));
      for (auto i : test) ++seen[i];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    const auto sizes = plan.fold_sizes();
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  }
}

TEST_CASE("mini-batch sizing and chunking") {
  CHECK(mini_batch_size(1) == 10);
  CHECK(mini_batch_size(20) == 100);
  using Bounds = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(chunk_bounds(100, {20, 30}) == Bounds{{0, 30}, {30, 50}, {50, 70}, {70, 100}});
  CHECK(chunk_bounds(45, {20, 30}) == Bounds{{0, 30}, {30, 45}});
  CHECK(chunk_bounds(90, {20, 30}) == Bounds{{0, 30}, {30, 50}, {50, 70}, {70, 90}});
  CHECK_THROWS_AS(chunk_bounds(10, {0, 5}), ContractViolation);
  Rng rng(63);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(2000), k = 1 + rng.below(100), base = 1 + rng.below(300);
    const auto b = chunk_bounds(n, {k, base});
    CHECK(b.front().first == 0);
    CHECK(b.back().second == n);
    for (std::size_t i = 1; i < b.size(); ++i) {
      CHECK(b[i].first == b[i - 1].second);
      CHECK(b[i].first < b[i].second);
    }
  }
}

TEST_CASE("seed averages") {
  const MetricReport cells[] = {{0.9, 1.0, 10, false}, {1.0, 3.0, 10, false}};
  const auto s = seed_average(cells);
  CHECK(s.r2.mean == doctest::Approx(0.95));
  CHECK(s.r2.std == doctest::Approx(0.05));
  CHECK(s.r2.count == 2);
  CHECK(s.mse.mean == doctest::Approx(2.0));
  const MetricReport same[] = {{0.5, 1, 1, false}, {0.5, 1, 1, false}, {0.5, 1, 1, false}};
  CHECK(seed_average(same).r2.std == 0.0);
  CHECK(seed_average(same).r2.count == 3);
}

TEST_CASE("ranking") {
  auto t = average_rank({"a", "b"}, {"x", "y"}, {{1, 2}, {1, 2}});
  CHECK(t.average_rank == std::vector<double>{1, 2});
  t = average_rank({"a", "b"}, {"x", "y"}, {{1, 1}, {1, 2}});
  CHECK(t.ranks[0] == std::vector<double>{1.5, 1.5});
  CHECK(t.average_rank == std::vector<double>{1.25, 1.75});
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(rank_row(Vector{inf, 3, inf}) == std::vector<double>{2.5, 1, 2.5});
  CHECK_THROWS_AS(average_rank({"a"}, {"x", "y"}, {{1}}), ContractViolation);
  CHECK_THROWS_AS(average_rank({"a"}, {"x"}, {{NAN}}), ContractViolation);
}

TEST_CASE("property: ranks are conserved per dataset") {
  Rng rng(64);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t a = 2 + rng.below(8);
    Vector row(a);
    // Coarse values so ties happen.
    for (double& v : row) v = static_cast<double>(rng.below(4));
    const auto r = rank_row(row);
    double sum = 0;
    for (double v : r) sum += v;
    CHECK(sum == doctest::Approx(static_cast<double>(a * (a + 1)) / 2));
  }
}

TEST_CASE("noiseless stream through OLR-WA is exact") {
  BaseShape shape;
  shape.n = 1000;
  shape.m = 4;
  shape.seed = 1;
  const Dataset d = Stream(stationary_spec(shape)).materialize();
  const auto plan = kfold(d.rows(), 5, 0);
  AlgorithmConfig cfg;
  cfg.kind = "olr_wa";
  CellConfig cell{cfg, {20, 80}, 10, 11, false, 0, 0};
  const auto r = run_cell(cell, subset(d, plan.train_indices(0)), subset(d, plan.test_indices(0)));
  REQUIRE(r.final_report);
  CHECK(r.final_report->r2 >= 0.999999);
  CHECK(r.checkpoints.size() == 10);
  CHECK(r.checkpoints[0].points_seen == 80);
  CHECK(r.checkpoints[1].points_seen == 100);
}

TEST_CASE("max_chunks stops the stream early") {
  const Dataset d = Stream(make_preset("ds1", 0)).materialize();
  AlgorithmConfig cfg;
  cfg.kind = "sgd";
  CellConfig cell{cfg, {10, 10}, 10, 11, true, 5, 0};
  const auto r = run_cell(cell, d, Dataset{});
  CHECK(r.trace.size() == 4);
  CHECK(r.trace.back().points_seen == 40);
  CHECK_FALSE(r.final_report);
}

TEST_CASE("property: stationary prequential trace does not degrade") {
  double first = 0, last = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = Stream(make_preset("ds2", seed)).materialize();
    AlgorithmConfig cfg;
    cfg.kind = "olr_wa";
    CellConfig cell{cfg, {100, 100}, 0, 11, true, 0, seed};
    const auto r = run_cell(cell, d, Dataset{});
    std::vector<double> r2;
    for (const auto& p : r.trace) r2.push_back(p.report.r2);
    const std::size_t q = r2.size() / 4;
    first += median({r2.begin(), r2.begin() + q});
    last += median({r2.end() - q, r2.end()});
  }
  CHECK(last >= first);
}

TEST_CASE("diverging learner is recorded, not thrown") {
  const Dataset d = Stream(make_preset("ds3", 0)).materialize();
  AlgorithmConfig cfg;
  cfg.kind = "sgd";
  cfg.eta = 10.0;
  cfg.mode = TrainingMode::StrictStreaming;
  CellConfig cell{cfg, {1000, 1000}, 10, 11, false, 0, 0};
  const auto r = run_cell(cell, d, d);
  CHECK(r.diverged);
  CHECK_FALSE(r.divergence_message.empty());
  CHECK(r.early_mse() == std::numeric_limits<double>::infinity());
}

}
