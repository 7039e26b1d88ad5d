#include "olrwa/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "olrwa/errors.hpp"
#include "olrwa/rng.hpp"

namespace olrwa {

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t f : assignment) ++sizes[f];
  return sizes;
}

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ContractViolation("kfold: need k >= 2");
  if (n < k) throw ContractViolation("kfold: need n >= k");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, 0xf01d);
  rng.shuffle(std::span<std::size_t>(order));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(n, 0);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) plan.assignment[order[pos++]] = f;
  }
  return plan;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.x = data.x.select_rows(rows);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(data.y.at(r));
  out.columns = data.columns;
  return out;
}

std::size_t mini_batch_size(std::size_t m, std::size_t u, std::size_t z_plus) {
  return std::max(u, m * z_plus);
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds(std::size_t n, const ChunkPolicy& policy) {
  if (policy.batch_size == 0) throw ContractViolation("chunk_bounds: batch_size must be >= 1");
  if (policy.base_size == 0) throw ContractViolation("chunk_bounds: base_size must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n == 0) return out;
  std::size_t end = std::min(n, policy.base_size);
  out.emplace_back(0, end);
  while (end < n) {
    const std::size_t next = std::min(n, end + policy.batch_size);
    if (next - end < policy.batch_size && out.size() > 1) {
      // A short tail may not pin down its own fit; fold it into the previous chunk.
      out.back().second = next;
    } else {
      out.emplace_back(end, next);
    }
    end = next;
  }
  return out;
}

double CellResult::early_mse() const {
  if (diverged || checkpoints.empty()) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (const auto& p : checkpoints) s += p.report.mse;
  return s / static_cast<double>(checkpoints.size());
}

double CellResult::stream_mean_r2() const {
  if (trace.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& p : trace) s += p.report.r2;
  return s / static_cast<double>(trace.size());
}

CellResult run_cell(const CellConfig& config, const Dataset& train, const Dataset& test) {
  const auto started = std::chrono::steady_clock::now();
  CellResult result;
  auto learner = make_regressor(config.algorithm, config.seed, config.window_capacity);
  learner->init(train.num_features());
  const auto* adaptive = dynamic_cast<const OlrWaaRegressor*>(learner.get());
  const bool has_test = test.rows() > 0;

  auto bounds = chunk_bounds(train.rows(), config.chunks);
  if (config.max_chunks && bounds.size() > config.max_chunks) bounds.resize(config.max_chunks);
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const auto [begin, end] = bounds[i];
    const Matrix x = train.x.slice_rows(begin, end - begin);
    const std::span<const double> y(train.y.data() + begin, end - begin);

    std::optional<TracePoint> point;
    if (config.prequential && i > 0) {
      point = TracePoint{i, begin, evaluate(y, learner->predict(x)), std::nullopt};
    }
    try {
      learner->observe(x, y);
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.divergence_message = e.what();
      if (point) result.trace.push_back(*point);
      break;
    }
    if (point) {
      if (adaptive && adaptive->last_step()) point->drift = adaptive->last_step()->assessment;
      result.trace.push_back(*point);
    }
    if (has_test && i < config.checkpoints) {
      result.checkpoints.push_back({i, end, evaluate(test.y, learner->predict(test.x)), std::nullopt});
    }
  }
  if (has_test && !result.diverged) result.final_report = evaluate(test.y, learner->predict(test.x));

  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

SeedAverage seed_average(std::span<const MetricReport> cells) {
  if (cells.empty()) throw ContractViolation("seed_average: need at least one cell");
  std::vector<double> r2, m;
  for (const auto& c : cells) {
    r2.push_back(c.r2);
    m.push_back(c.mse);
  }
  return {summarize(r2), summarize(m)};
}

std::vector<double> rank_row(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold 1-based ranks i+1..j.
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = mean_rank;
    i = j;
  }
  return ranks;
}

RankTable average_rank(std::vector<std::string> datasets, std::vector<std::string> algorithms,
                       std::vector<std::vector<double>> mse) {
  if (mse.size() != datasets.size()) throw ContractViolation("average_rank: one MSE row per dataset");
  if (algorithms.empty()) throw ContractViolation("average_rank: no algorithms");
  RankTable t;
  t.average_rank.assign(algorithms.size(), 0.0);
  for (std::size_t d = 0; d < mse.size(); ++d) {
    if (mse[d].size() != algorithms.size()) {
      throw ContractViolation("average_rank: dataset '" + datasets[d] + "' is missing cells");
    }
    for (double v : mse[d]) {
      if (std::isnan(v)) throw ContractViolation("average_rank: NaN MSE for '" + datasets[d] + "'");
    }
    t.ranks.push_back(rank_row(mse[d]));
    for (std::size_t a = 0; a < algorithms.size(); ++a) t.average_rank[a] += t.ranks.back()[a];
  }
  if (!mse.empty()) {
    for (double& r : t.average_rank) r /= static_cast<double>(mse.size());
  }
  t.datasets = std::move(datasets);
  t.algorithms = std::move(algorithms);
  t.mse = std::move(mse);
  return t;
}

}  // namespace olrwa
