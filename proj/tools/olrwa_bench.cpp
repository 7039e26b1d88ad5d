// olrwa_bench: generate datasets, run experiment specs, merge rank tables.
//
// Exit codes: 0 ok, 2 invalid spec or input, 3 a cell diverged (unless
// --allow-divergence), 4 I/O failure.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "olrwa/bench.hpp"
#include "olrwa/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

using namespace olrwa;

int cmd_generate(const std::string& spec_path, const std::string& out_dir, const std::string& preset,
                 std::optional<std::uint64_t> seed) {
  nlohmann::json doc;
  if (!spec_path.empty()) {
    doc = bench::read_json_file(spec_path);
  } else {
    doc = {{"preset", preset}};
  }
  if (seed) {
    if (doc.contains("generator")) {
      doc["generator"]["seed"] = *seed;
    } else {
      doc["seed"] = *seed;
    }
  }
  const auto g = bench::parse_generate(doc);
  for (const auto& path : bench::write_generated(g, out_dir)) std::cout << path << '\n';
  return kExitOk;
}

int cmd_run(const std::string& spec_path, std::string out_dir, const bench::RunOptions& options,
            bool allow_divergence, bool trace, const std::string& normalize, const std::string& target) {
  auto spec = bench::parse_experiment(bench::read_json_file(spec_path));
  for (auto& d : spec.datasets) {
    if (d.csv.empty()) continue;
    if (!normalize.empty()) d.ingest.normalize = bench::parse_normalization(normalize);
    if (!target.empty()) d.ingest.target = target;
  }
  if (out_dir.empty()) out_dir = spec.out_dir;
  if (out_dir.empty()) throw SpecError("outputs.dir", "no output directory (use --out)");

  const auto result = bench::run_experiment(spec, options);
  for (const auto& info : result.datasets) {
    for (const auto& w : info.warnings) std::cerr << "warning: " << info.name << ": " << w << '\n';
  }
  for (const auto& path : bench::write_outputs(result, options, out_dir, trace || spec.trace)) {
    std::cout << path << '\n';
  }
  if (result.rank) {
    const auto& t = *result.rank;
    for (std::size_t a = 0; a < t.algorithms.size(); ++a) {
      std::cout << t.algorithms[a] << " average rank " << t.average_rank[a] << '\n';
    }
  }
  const std::size_t diverged = result.diverged();
  if (diverged) {
    std::cerr << diverged << " cell(s) diverged\n";
    if (!allow_divergence) return kExitDiverged;
  }
  return kExitOk;
}

int cmd_rank(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<nlohmann::json> docs;
  for (const auto& p : inputs) docs.push_back(bench::read_json_file(p));
  const RankTable table = bench::rank_from_summaries(docs);
  if (out_path.empty()) {
    bench::write_rank_csv(std::cout, table);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw bench::IoError("cannot open '" + out_path + "' for writing");
    bench::write_rank_csv(out, table);
    out.close();
    if (!out) throw bench::IoError("failed writing '" + out_path + "'");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online regression benchmark: dataset generation, experiment runs, rank tables"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, preset, normalize, target, rank_out;
  std::optional<std::uint64_t> seed_override;
  std::size_t jobs = 1;
  bool allow_divergence = false, trace = false;
  std::vector<std::string> rank_inputs;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset CSV and its ground-truth sidecar");
  auto* gen_spec = gen->add_option("--spec", spec_path, "Generation spec (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--preset", preset, "Preset name instead of a spec, e.g. ds11")->excludes(gen_spec);
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed-override", seed_override, "Replace the spec's seed");

  auto* run = app.add_subcommand("run", "Run an experiment spec");
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (defaults to outputs.dir)");
  run->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);
  run->add_option("--seed-override", seed_override, "Run a single seed instead of the spec's list");
  run->add_flag("--allow-divergence", allow_divergence, "Exit 0 even if some cell diverged");
  run->add_flag("--trace", trace, "Write trace.jsonl with prequential points and drift events");
  run->add_option("--normalize", normalize, "Normalization for CSV datasets")
      ->check(CLI::IsMember({"none", "minmax"}));
  run->add_option("--target", target, "Target column for CSV datasets");

  auto* rank = app.add_subcommand("rank", "Merge summaries into a first-iterations MSE rank table");
  rank->add_option("results", rank_inputs, "summary.json files")->required()->check(CLI::ExistingFile);
  rank->add_option("--out", rank_out, "Rank CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*gen) {
      if (spec_path.empty() && preset.empty()) throw SpecError("--spec", "give --spec or --preset");
      return cmd_generate(spec_path, out_dir, preset, seed_override);
    }
    if (*run) {
      bench::RunOptions options;
      options.jobs = jobs;
      options.seed_override = seed_override;
      return cmd_run(spec_path, out_dir, options, allow_divergence, trace, normalize, target);
    }
    return cmd_rank(rank_inputs, rank_out);
  } catch (const bench::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}
