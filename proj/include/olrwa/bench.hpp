#pragma once

// Declarative experiments. A JSON spec names datasets, learners and a
// protocol; run_experiment expands the cross product into cells, runs them
// and keeps every per-cell result so the writers can emit summary, cells,
// trace and rank files.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "olrwa/baselines.hpp"
#include "olrwa/datagen.hpp"
#include "olrwa/eval.hpp"

namespace olrwa::bench {

inline constexpr int kSchemaVersion = 1;

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- CSV ingestion -------------------------------------------------------------

enum class Normalization { None, MinMax };

Normalization parse_normalization(const std::string& name);
const char* to_string(Normalization n);

struct IngestOptions {
  std::string target;  // empty: last column
  Normalization normalize = Normalization::None;
};

struct ColumnScale {
  std::string column;
  double min = 0.0;
  double max = 0.0;
};

struct IngestResult {
  Dataset data;
  std::vector<ColumnScale> scales;  // one per feature when normalized
  std::vector<std::string> warnings;
};

// Header row required; every other cell must parse as a finite double.
// Throws InputError with row/column context.
IngestResult ingest_csv(std::istream& in, const IngestOptions& options,
                        const std::string& source = "<csv>");
IngestResult ingest_csv_file(const std::string& path, const IngestOptions& options);

// ---- experiment spec -----------------------------------------------------------

enum class ProtocolKind { Holdout, Adversarial, Prequential, Rank };

const char* to_string(ProtocolKind kind);

struct BasePolicy {
  double fraction = 0.1;      // of the training rows
  std::size_t rows = 0;       // fixed count, wins over fraction when set
  bool match_batch = false;   // base chunk is one mini-batch
};

struct DatasetSpec {
  std::string name;
  // Exactly one source.
  std::string preset;
  nlohmann::json generator;  // generator_from_json document
  std::string csv;
  IngestOptions ingest;
  std::optional<AdversarialFlavor> flavor;  // generator datasets under the adversarial protocol
  std::optional<std::uint64_t> seed;        // fixed data seed; otherwise data follow the cell seed
  std::optional<std::size_t> n;             // row-count override for presets
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> window_capacity;
  nlohmann::json overrides = nlohmann::json::object();  // algorithm label -> fields
};

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::Holdout;
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<std::size_t> batch_size;  // default max(10, 5 M)
  BasePolicy base;
  std::size_t checkpoints = 10;
  std::optional<std::size_t> window_capacity;  // default from stream length and K
  std::optional<TrainingMode> training_mode;   // default for gradient learners
};

struct ExperimentSpec {
  std::string name;
  std::vector<DatasetSpec> datasets;
  std::vector<nlohmann::json> algorithms;  // resolved per dataset after overrides
  ProtocolSpec protocol;
  std::string out_dir;  // "outputs.dir"; the CLI's --out wins
  bool trace = false;   // "outputs.trace"
};

// Throws SpecError with a JSON path such as "datasets[1].preset".
ExperimentSpec parse_experiment(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentSpec& spec);

// Strict: unknown keys are rejected.
AlgorithmConfig parse_algorithm(const nlohmann::json& doc, const std::string& path);
nlohmann::json to_json(const AlgorithmConfig& config);

// ---- execution --------------------------------------------------------------------

struct CellKey {
  std::size_t dataset = 0;
  std::size_t algorithm = 0;
  std::uint64_t seed = 0;
  std::size_t fold = 0;
};

struct Cell {
  CellKey key;
  CellResult result;
};

struct DatasetInfo {
  std::string name;
  std::size_t rows = 0;  // full stream or file
  std::size_t features = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t batch_size = 0;
  std::size_t base_size = 0;
  std::size_t window_capacity = 0;
  std::vector<std::size_t> drift_points;
  std::vector<ColumnScale> scales;
  std::vector<std::string> warnings;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<DatasetInfo> datasets;
  std::vector<std::vector<AlgorithmConfig>> algorithms;  // [dataset][algorithm]
  std::vector<std::string> labels;
  std::vector<Cell> cells;  // ordered by dataset, algorithm, seed, fold
  std::optional<RankTable> rank;
  double wall_seconds = 0.0;

  std::size_t diverged() const;
  // Cells for one (dataset, algorithm) pair, in seed/fold order.
  std::vector<const Cell*> select(std::size_t dataset, std::size_t algorithm) const;
};

struct RunOptions {
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;  // replaces the seed list
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

// ---- outputs ------------------------------------------------------------------------

// Byte-stable for a given spec and build: no timings, no timestamps.
nlohmann::json summary_json(const ExperimentResult& result);
// Runtimes and run environment; not covered by the determinism contract.
nlohmann::json metadata_json(const ExperimentResult& result, const RunOptions& options);

void write_cells_csv(std::ostream& out, const ExperimentResult& result);
// One JSON object per prequential trace point.
void write_trace_jsonl(std::ostream& out, const ExperimentResult& result);
void write_rank_csv(std::ostream& out, const RankTable& table);

// summary.json, metadata.json, cells.csv, plus trace.jsonl and rank.csv when
// applicable. Throws IoError.
std::vector<std::string> write_outputs(const ExperimentResult& result, const RunOptions& options,
                                       const std::string& dir, bool trace);

// Merges the early-MSE rows of several summaries into one table. Throws
// SpecError when the summaries disagree on the algorithm set.
RankTable rank_from_summaries(const std::vector<nlohmann::json>& summaries);

// ---- dataset generation ------------------------------------------------------------

struct GenerateSpec {
  std::string name;
  StreamSpec stream;
  std::optional<AdversarialFlavor> flavor;  // set: also write a test CSV
};

// {"name": ..., "preset": "ds11", "seed": 1} or {"name": ..., "generator": {...}}
GenerateSpec parse_generate(const nlohmann::json& doc);

// <dir>/<name>.csv and <dir>/<name>.json (+ <name>_test.csv). Returns the paths.
std::vector<std::string> write_generated(const GenerateSpec& spec, const std::string& dir);

// ---- helpers -----------------------------------------------------------------------------

nlohmann::json read_json_file(const std::string& path);  // IoError / SpecError
std::string dump_json(const nlohmann::json& doc);         // 2-space indent, trailing newline

}  // namespace olrwa::bench
