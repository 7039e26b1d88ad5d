#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "olrwa/adaptive.hpp"
#include "olrwa/baselines.hpp"
#include "olrwa/datagen.hpp"
#include "olrwa/metrics.hpp"

namespace olrwa {

// ---- splitting ----------------------------------------------------------------

struct FoldPlan {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignment;  // fold index per row

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  // Ascending row order: training data streams in its original order.
  std::vector<std::size_t> train_indices(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Seeded shuffle, then contiguous folds; the first n % k folds get one extra
// row.
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed);

Dataset subset(const Dataset& data, std::span<const std::size_t> rows);

// ---- mini-batching -------------------------------------------------------------------

// K = max(u, m * z_plus)
std::size_t mini_batch_size(std::size_t m, std::size_t u = 10, std::size_t z_plus = 5);

struct ChunkPolicy {
  std::size_t batch_size = 0;  // K
  std::size_t base_size = 0;   // rows in the first chunk
};

// Chunk boundaries [begin, end) over n rows: one base chunk, then K-sized
// chunks. A tail shorter than K is merged into the last K-sized chunk; it
// stands alone only when it directly follows the base chunk.
std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds(std::size_t n, const ChunkPolicy& policy);

// ---- cells --------------------------------------------------------------------------------

struct TracePoint {
  std::size_t batch_index = 0;  // chunk index within the training stream
  std::size_t points_seen = 0;  // training rows consumed when the point was taken
  MetricReport report;
  std::optional<DriftAssessment> drift;
};

using PrequentialTrace = std::vector<TracePoint>;

struct CellConfig {
  AlgorithmConfig algorithm;
  ChunkPolicy chunks;
  std::size_t checkpoints = 10;  // held-out evaluations after the first chunks
  std::size_t window_capacity = kWindowLowerBound;
  bool prequential = false;
  std::size_t max_chunks = 0;  // stop after this many chunks; 0 streams everything
  std::uint64_t seed = 0;
};

struct CellResult {
  std::optional<MetricReport> final_report;  // on the test set; empty if there is none
  PrequentialTrace checkpoints;              // test-set metrics after each early chunk
  PrequentialTrace trace;                    // test-then-train metrics per chunk
  bool diverged = false;
  std::string divergence_message;
  double runtime_seconds = 0.0;

  // Mean test MSE over the checkpoints; +inf when diverged.
  double early_mse() const;
  // Mean prequential R^2; NaN without a trace.
  double stream_mean_r2() const;
};

// Streams `train` chunk by chunk through a fresh learner. Evaluates on `test`
// after each of the first `checkpoints` chunks and at the end; with
// `prequential`, also scores every chunk after the first before training on it.
CellResult run_cell(const CellConfig& config, const Dataset& train, const Dataset& test);

// ---- aggregation ------------------------------------------------------------------------

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

MetricSummary summarize(std::span<const double> values);

struct SeedAverage {
  MetricSummary r2;
  MetricSummary mse;
};

SeedAverage seed_average(std::span<const MetricReport> cells);

struct RankTable {
  std::vector<std::string> datasets;
  std::vector<std::string> algorithms;
  std::vector<std::vector<double>> mse;    // [dataset][algorithm]
  std::vector<std::vector<double>> ranks;  // 1 = best, ties share the mean rank
  std::vector<double> average_rank;        // per algorithm
};

// Ascending ranks per row with mean ranks for ties (+inf ties with +inf).
std::vector<double> rank_row(std::span<const double> values);

// Throws ContractViolation on ragged or NaN input.
RankTable average_rank(std::vector<std::string> datasets, std::vector<std::string> algorithms,
                       std::vector<std::vector<double>> mse);

}  // namespace olrwa
