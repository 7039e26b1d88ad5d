#include "olrwa/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "olrwa/errors.hpp"

namespace olrwa::bench {

using nlohmann::json;

namespace {

// ---- typed field access with unknown-key rejection -----------------------------

class Fields {
 public:
  Fields(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw SpecError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key) && !doc_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return doc_.at(key);
  }

  std::optional<double> number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_number()) throw SpecError(at(key), "expected a number");
    return v.get<double>();
  }

  std::optional<std::uint64_t> count(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as_count(doc_.at(key), at(key));
  }

  std::optional<std::string> str(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_string()) throw SpecError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<bool> boolean(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) throw SpecError(at(key), "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.count(item.key())) throw SpecError(at(item.key()), "unknown field");
    }
  }

  static std::uint64_t as_count(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw SpecError(path, "must be non-negative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw SpecError(path, "expected a non-negative integer");
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw SpecError(path, message);
}

TrainingMode parse_mode(const std::string& name, const std::string& path) {
  if (name == "replay") return TrainingMode::Replay;
  if (name == "strict_streaming" || name == "strict") return TrainingMode::StrictStreaming;
  throw SpecError(path, "expected 'replay' or 'strict_streaming', got '" + name + "'");
}

KpiSelector parse_kpi(const std::string& name, const std::string& path) {
  if (name == "r2") return KpiSelector::R2;
  if (name == "mse") return KpiSelector::Mse;
  throw SpecError(path, "expected 'r2' or 'mse', got '" + name + "'");
}

AdaptMode parse_adapt_mode(const std::string& name, const std::string& path) {
  if (name == "time_based") return AdaptMode::TimeBased;
  if (name == "confidence_based") return AdaptMode::ConfidenceBased;
  throw SpecError(path, "expected 'time_based' or 'confidence_based', got '" + name + "'");
}

AdversarialFlavor parse_flavor(const std::string& name, const std::string& path) {
  if (name == "time_based") return AdversarialFlavor::TimeBased;
  if (name == "confidence_based") return AdversarialFlavor::ConfidenceBased;
  throw SpecError(path, "expected 'time_based' or 'confidence_based', got '" + name + "'");
}

ProtocolKind parse_protocol_kind(const std::string& name, const std::string& path) {
  if (name == "holdout") return ProtocolKind::Holdout;
  if (name == "adversarial") return ProtocolKind::Adversarial;
  if (name == "prequential") return ProtocolKind::Prequential;
  if (name == "rank") return ProtocolKind::Rank;
  throw SpecError(path, "expected holdout, adversarial, prequential or rank, got '" + name + "'");
}

json summary_of(std::span<const double> values) {
  const MetricSummary s = summarize(values);
  json out = {{"count", s.count}};
  out["mean"] = s.count ? json(s.mean) : json(nullptr);
  out["std"] = s.count ? json(s.std) : json(nullptr);
  return out;
}

// Non-finite values become null in JSON anyway; keep CSV cells empty instead.
std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

// Resizes a preset's stream to n rows. Single-segment streams stretch; the
// two-segment adversarial layout keeps its half/half split.
void resize_stream(StreamSpec& spec, std::size_t n, const std::string& path) {
  require(n >= 2, path, "must be at least 2");
  auto& segs = spec.schedule.segments;
  if (segs.size() == 1) {
    segs[0].length = n;
  } else if (segs.size() == 2 && spec.schedule.concepts.size() == 2 &&
             spec.schedule.kind == DriftKind::Abrupt && segs[0].length + segs[1].length == spec.n &&
             (segs[0].length == spec.n / 2)) {
    segs[0].length = n / 2;
    segs[1].length = n - n / 2;
  } else {
    throw SpecError(path, "row override is only supported for stationary and adversarial presets");
  }
  spec.n = n;
}

}  // namespace

// ---- CSV ingestion ------------------------------------------------------------------

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::None;
  if (name == "minmax") return Normalization::MinMax;
  throw SpecError("normalize", "expected 'none' or 'minmax', got '" + name + "'");
}

const char* to_string(Normalization n) { return n == Normalization::MinMax ? "minmax" : "none"; }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

IngestResult ingest_csv(std::istream& in, const IngestOptions& options, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw InputError(source + ": empty file");
  if (header.size() < 2) throw InputError(source + ": need at least one feature and a target column");

  std::size_t target = header.size() - 1;
  if (!options.target.empty()) {
    const auto it = std::find(header.begin(), header.end(), options.target);
    if (it == header.end()) throw InputError(source + ": no column named '" + options.target + "'");
    target = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t m = header.size() - 1;

  IngestResult result;
  auto& data = result.data;
  data.x = Matrix(0, m);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target) data.columns.push_back(header[c]);
  }
  data.columns.push_back(header[target]);

  Vector row(m);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError(source + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    double y = 0.0;
    std::size_t j = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw InputError(source + ": line " + std::to_string(line_no) + ", column '" + header[c] +
                         "': not a finite number: '" + f + "'");
      }
      if (c == target) {
        y = v;
      } else {
        row[j++] = v;
      }
    }
    data.x.append_row(row);
    data.y.push_back(y);
  }
  if (data.rows() == 0) throw InputError(source + ": no data rows");

  if (options.normalize == Normalization::MinMax) {
    for (std::size_t c = 0; c < m; ++c) {
      double lo = data.x(0, c), hi = data.x(0, c);
      for (std::size_t r = 1; r < data.rows(); ++r) {
        lo = std::min(lo, data.x(r, c));
        hi = std::max(hi, data.x(r, c));
      }
      result.scales.push_back({data.columns[c], lo, hi});
      if (hi == lo) {
        result.warnings.push_back("column '" + data.columns[c] + "' is constant; mapped to 0");
        for (std::size_t r = 0; r < data.rows(); ++r) data.x(r, c) = 0.0;
      } else {
        for (std::size_t r = 0; r < data.rows(); ++r) data.x(r, c) = (data.x(r, c) - lo) / (hi - lo);
      }
    }
  }
  return result;
}

IngestResult ingest_csv_file(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return ingest_csv(in, options, path);
}

// ---- spec parsing ----------------------------------------------------------------------

const char* to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Holdout: return "holdout";
    case ProtocolKind::Adversarial: return "adversarial";
    case ProtocolKind::Prequential: return "prequential";
    case ProtocolKind::Rank: return "rank";
  }
  return "holdout";
}

AlgorithmConfig parse_algorithm(const json& doc, const std::string& path) {
  Fields f(doc, path);
  AlgorithmConfig c;
  const auto kind = f.str("kind");
  require(kind.has_value(), f.at("kind"), "required");
  const auto& kinds = algorithm_kinds();
  if (std::find(kinds.begin(), kinds.end(), *kind) == kinds.end()) {
    throw SpecError(f.at("kind"), "unknown algorithm '" + *kind + "'");
  }
  c.kind = *kind;
  if (auto v = f.str("label")) c.label = *v;
  if (auto v = f.number("eta")) {
    require(*v > 0.0, f.at("eta"), "must be positive");
    c.eta = *v;
  }
  if (auto v = f.count("epochs")) {
    require(*v >= 1, f.at("epochs"), "must be at least 1");
    c.epochs = *v;
  }
  if (auto v = f.str("mode")) c.mode = parse_mode(*v, f.at("mode"));
  if (auto v = f.number("lambda_rls")) {
    require(*v > 0.0 && *v <= 1.0, f.at("lambda_rls"), "must be in (0, 1]");
    c.lambda_rls = *v;
  }
  if (auto v = f.number("delta_rls")) {
    require(*v > 0.0, f.at("delta_rls"), "must be positive");
    c.delta_rls = *v;
  }
  if (auto v = f.str("rls_prior")) {
    try {
      c.rls_prior = parse_rls_prior(*v);
    } catch (const SpecError& e) {
      throw SpecError(f.at("rls_prior"), e.what());
    }
  }
  if (auto v = f.number("lambda_reg")) {
    require(*v >= 0.0, f.at("lambda_reg"), "must be non-negative");
    c.lambda_reg = *v;
  }
  if (auto v = f.number("c")) {
    require(*v > 0.0, f.at("c"), "must be positive");
    c.c = *v;
  }
  if (auto v = f.number("epsilon")) {
    require(*v >= 0.0, f.at("epsilon"), "must be non-negative");
    c.epsilon = *v;
  }
  if (auto v = f.str("pa_variant")) {
    try {
      c.pa_variant = parse_pa_variant(*v);
    } catch (const SpecError&) {
      throw SpecError(f.at("pa_variant"), "expected PA, PA-I, PA-II or PA-III, got '" + *v + "'");
    }
  }
  if (auto v = f.number("alpha")) {
    require(*v >= 0.0 && *v <= 1.0, f.at("alpha"), "must be in [0, 1]");
    c.alpha = *v;
  }
  if (auto v = f.number("z")) {
    require(*v > 0.0, f.at("z"), "must be positive");
    c.z = *v;
  }
  if (auto v = f.str("kpi")) c.kpi = parse_kpi(*v, f.at("kpi"));
  if (auto v = f.str("adapt_mode")) c.adapt_mode = parse_adapt_mode(*v, f.at("adapt_mode"));
  if (auto v = f.count("window_capacity")) {
    require(*v >= kWindowLowerBound && *v <= kWindowUpperBound, f.at("window_capacity"),
            "must be within [11, 31]");
    c.window_capacity = *v;
  }
  f.finish();
  return c;
}

json to_json(const AlgorithmConfig& c) {
  json out = {{"kind", c.kind}, {"label", c.display_name()}};
  if (c.kind == "sgd" || c.kind == "mbgd" || c.kind == "ridge" || c.kind == "lasso") {
    out["eta"] = c.eta;
    out["epochs"] = c.epochs;
    out["mode"] = to_string(c.mode);
  }
  if (c.kind == "lms") out["eta"] = c.eta;
  if (c.kind == "ridge" || c.kind == "lasso") out["lambda_reg"] = c.lambda_reg;
  if (c.kind == "rls") {
    out["lambda_rls"] = c.lambda_rls;
    out["delta_rls"] = c.delta_rls;
    out["rls_prior"] = to_string(c.rls_prior);
  }
  if (c.kind == "pa") {
    out["c"] = c.c;
    out["epsilon"] = c.epsilon;
    out["pa_variant"] = to_string(c.pa_variant);
  }
  if (c.kind == "olr_wa" || c.kind == "olr_waa") out["alpha"] = c.alpha;
  if (c.kind == "olr_waa") {
    out["z"] = c.z;
    out["kpi"] = to_string(c.kpi);
    out["adapt_mode"] = to_string(c.adapt_mode);
    if (c.window_capacity) out["window_capacity"] = c.window_capacity;
  }
  return out;
}

namespace {

DatasetSpec parse_dataset(const json& doc, const std::string& path, std::size_t index) {
  Fields f(doc, path);
  DatasetSpec d;
  int sources = 0;
  if (auto v = f.str("preset")) {
    require(is_preset(*v), f.at("preset"), "unknown preset '" + *v + "'");
    d.preset = *v;
    ++sources;
  }
  if (f.has("generator")) {
    d.generator = f.raw("generator");
    // Validate eagerly so errors surface before any cell runs.
    generator_from_json(d.generator, f.at("generator"));
    ++sources;
  }
  if (auto v = f.str("csv")) {
    d.csv = *v;
    ++sources;
  }
  require(sources == 1, path, "exactly one of preset, generator or csv is required");
  if (auto v = f.str("name")) {
    d.name = *v;
  } else if (!d.preset.empty()) {
    d.name = d.preset;
  } else if (!d.csv.empty()) {
    d.name = std::filesystem::path(d.csv).stem().string();
  } else {
    d.name = "dataset" + std::to_string(index);
  }
  if (auto v = f.str("target")) d.ingest.target = *v;
  if (auto v = f.str("normalize")) {
    try {
      d.ingest.normalize = parse_normalization(*v);
    } catch (const SpecError& e) {
      throw SpecError(f.at("normalize"), e.what());
    }
  }
  if (auto v = f.str("flavor")) d.flavor = parse_flavor(*v, f.at("flavor"));
  if (auto v = f.count("seed")) d.seed = *v;
  if (auto v = f.count("n")) {
    require(!d.preset.empty(), f.at("n"), "only presets take a row override");
    d.n = *v;
  }
  if (auto v = f.count("batch_size")) {
    require(*v >= 1, f.at("batch_size"), "must be at least 1");
    d.batch_size = *v;
  }
  if (auto v = f.count("window_capacity")) {
    require(*v >= kWindowLowerBound && *v <= kWindowUpperBound, f.at("window_capacity"),
            "must be within [11, 31]");
    d.window_capacity = *v;
  }
  if (f.has("overrides")) {
    const json& o = f.raw("overrides");
    require(o.is_object(), f.at("overrides"), "expected an object keyed by algorithm label");
    for (const auto& item : o.items()) {
      const std::string p = f.at("overrides") + "." + item.key();
      require(item.value().is_object(), p, "expected an object");
      require(!item.value().contains("kind") && !item.value().contains("label"), p,
              "overrides cannot change kind or label");
    }
    d.overrides = o;
  }
  f.finish();
  return d;
}

ProtocolSpec parse_protocol(const json& doc, const std::string& path) {
  Fields f(doc, path);
  ProtocolSpec p;
  if (auto v = f.str("kind")) p.kind = parse_protocol_kind(*v, f.at("kind"));
  if (auto v = f.count("folds")) {
    require(*v >= 2, f.at("folds"), "must be at least 2");
    p.folds = *v;
  }
  if (f.has("seeds")) {
    const json& s = f.raw("seeds");
    p.seeds.clear();
    if (s.is_array()) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        p.seeds.push_back(Fields::as_count(s[i], f.at("seeds") + "[" + std::to_string(i) + "]"));
      }
    } else {
      const auto n = Fields::as_count(s, f.at("seeds"));
      for (std::uint64_t i = 0; i < n; ++i) p.seeds.push_back(i);
    }
    require(!p.seeds.empty(), f.at("seeds"), "at least one seed is required");
    std::set<std::uint64_t> unique(p.seeds.begin(), p.seeds.end());
    require(unique.size() == p.seeds.size(), f.at("seeds"), "seeds must be distinct");
  }
  if (auto v = f.count("batch_size")) {
    require(*v >= 1, f.at("batch_size"), "must be at least 1");
    p.batch_size = *v;
  }
  if (f.has("base")) {
    const json& b = f.raw("base");
    const std::string bp = f.at("base");
    if (b.is_string()) {
      require(b.get<std::string>() == "batch", bp, "expected a fraction, \"batch\" or {\"rows\": n}");
      p.base.match_batch = true;
    } else if (b.is_number()) {
      const double frac = b.get<double>();
      require(frac > 0.0 && frac <= 1.0, bp, "fraction must be in (0, 1]");
      p.base.fraction = frac;
    } else {
      Fields bf(b, bp);
      const auto rows = bf.count("rows");
      require(rows && *rows >= 1, bf.at("rows"), "required and at least 1");
      p.base.rows = *rows;
      bf.finish();
    }
  }
  if (auto v = f.count("checkpoints")) p.checkpoints = *v;
  if (auto v = f.count("window_capacity")) {
    require(*v >= kWindowLowerBound && *v <= kWindowUpperBound, f.at("window_capacity"),
            "must be within [11, 31]");
    p.window_capacity = *v;
  }
  if (auto v = f.str("training_mode")) p.training_mode = parse_mode(*v, f.at("training_mode"));
  if (p.kind == ProtocolKind::Rank) require(p.checkpoints >= 1, f.at("checkpoints"), "must be at least 1");
  f.finish();
  return p;
}

json base_to_json(const BasePolicy& b) {
  if (b.match_batch) return "batch";
  if (b.rows) return {{"rows", b.rows}};
  return b.fraction;
}

// Algorithm document for dataset d: the base entry with that dataset's
// overrides merged on top.
json merged_algorithm(const ExperimentSpec& spec, std::size_t d, std::size_t a, const std::string& label) {
  json doc = spec.algorithms[a];
  const json& o = spec.datasets[d].overrides;
  if (o.contains(label)) doc.update(o.at(label));
  if (spec.protocol.training_mode && !doc.contains("mode")) {
    const std::string kind = doc.value("kind", "");
    if (kind == "sgd" || kind == "mbgd" || kind == "ridge" || kind == "lasso") {
      doc["mode"] = to_string(*spec.protocol.training_mode);
    }
  }
  return doc;
}

}  // namespace

ExperimentSpec parse_experiment(const json& doc) {
  Fields f(doc, "");
  ExperimentSpec spec;
  if (f.has("schema_version")) {
    const json& v = f.raw("schema_version");
    require(v.is_number_integer() && v.get<int>() == kSchemaVersion, "schema_version",
            "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (auto v = f.str("name")) spec.name = *v;

  require(f.has("datasets") && f.raw("datasets").is_array(), "datasets", "expected an array");
  const json& ds = f.raw("datasets");
  require(!ds.empty(), "datasets", "at least one dataset is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string p = "datasets[" + std::to_string(i) + "]";
    spec.datasets.push_back(parse_dataset(ds[i], p, i));
    require(names.insert(spec.datasets.back().name).second, p + ".name",
            "duplicate dataset name '" + spec.datasets.back().name + "'");
  }

  require(f.has("algorithms") && f.raw("algorithms").is_array(), "algorithms", "expected an array");
  const json& algs = f.raw("algorithms");
  require(!algs.empty(), "algorithms", "at least one algorithm is required");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < algs.size(); ++i) {
    const std::string p = "algorithms[" + std::to_string(i) + "]";
    const AlgorithmConfig c = parse_algorithm(algs[i], p);
    require(labels.insert(c.display_name()).second, p + ".label",
            "duplicate label '" + c.display_name() + "'");
    spec.algorithms.push_back(algs[i]);
  }

  if (f.has("protocol")) spec.protocol = parse_protocol(f.raw("protocol"), "protocol");
  if (f.has("outputs")) {
    Fields of(f.raw("outputs"), "outputs");
    if (auto v = of.str("dir")) spec.out_dir = *v;
    if (auto v = of.boolean("trace")) spec.trace = *v;
    of.finish();
  }
  f.finish();

  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    const auto& ds_spec = spec.datasets[d];
    const std::string p = "datasets[" + std::to_string(d) + "]";
    for (const auto& item : ds_spec.overrides.items()) {
      require(labels.count(item.key()) > 0, p + ".overrides." + item.key(),
              "no algorithm labelled '" + item.key() + "'");
    }
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
      const std::string label = parse_algorithm(spec.algorithms[a], "algorithms").display_name();
      parse_algorithm(merged_algorithm(spec, d, a, label), p + ".overrides." + label);
    }
    if (spec.protocol.kind == ProtocolKind::Adversarial) {
      require(ds_spec.csv.empty(), p, "the adversarial protocol needs a synthetic dataset");
      if (!ds_spec.preset.empty()) {
        require(preset_flavor(ds_spec.preset).has_value(), p + ".preset",
                "preset '" + ds_spec.preset + "' is not an adversarial scenario");
      } else {
        require(ds_spec.generator.value("kind", "") == "adversarial", p + ".generator.kind",
                "the adversarial protocol needs kind 'adversarial'");
        require(ds_spec.flavor.has_value(), p + ".flavor", "required for adversarial generators");
      }
    }
  }
  return spec;
}

json to_json(const ExperimentSpec& spec) {
  json datasets = json::array();
  for (const auto& d : spec.datasets) {
    json j = {{"name", d.name}};
    if (!d.preset.empty()) j["preset"] = d.preset;
    if (!d.generator.is_null()) j["generator"] = d.generator;
    if (!d.csv.empty()) {
      j["csv"] = d.csv;
      if (!d.ingest.target.empty()) j["target"] = d.ingest.target;
      j["normalize"] = to_string(d.ingest.normalize);
    }
    if (d.flavor) j["flavor"] = to_string(*d.flavor);
    if (d.seed) j["seed"] = *d.seed;
    if (d.n) j["n"] = *d.n;
    if (d.batch_size) j["batch_size"] = *d.batch_size;
    if (d.window_capacity) j["window_capacity"] = *d.window_capacity;
    if (!d.overrides.empty()) j["overrides"] = d.overrides;
    datasets.push_back(std::move(j));
  }
  const auto& p = spec.protocol;
  json protocol = {{"kind", to_string(p.kind)},
                   {"folds", p.folds},
                   {"seeds", p.seeds},
                   {"base", base_to_json(p.base)},
                   {"checkpoints", p.checkpoints}};
  if (p.batch_size) protocol["batch_size"] = *p.batch_size;
  if (p.window_capacity) protocol["window_capacity"] = *p.window_capacity;
  if (p.training_mode) protocol["training_mode"] = to_string(*p.training_mode);
  return {{"schema_version", kSchemaVersion},
          {"name", spec.name},
          {"datasets", datasets},
          {"algorithms", spec.algorithms},
          {"protocol", protocol}};
}

// ---- execution ---------------------------------------------------------------------------

std::size_t ExperimentResult::diverged() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.result.diverged; }));
}

std::vector<const Cell*> ExperimentResult::select(std::size_t dataset, std::size_t algorithm) const {
  std::vector<const Cell*> out;
  for (const auto& c : cells) {
    if (c.key.dataset == dataset && c.key.algorithm == algorithm) out.push_back(&c);
  }
  return out;
}

namespace {

struct Loaded {
  Dataset full;  // training stream for adversarial data
  Dataset test;  // adversarial holdout only
  std::vector<std::size_t> drift_points;
  std::vector<ColumnScale> scales;
  std::vector<std::string> warnings;
};

Loaded load_dataset(const DatasetSpec& d, std::uint64_t seed, ProtocolKind kind, const std::string& path) {
  Loaded out;
  if (!d.csv.empty()) {
    IngestResult r = ingest_csv_file(d.csv, d.ingest);
    out.full = std::move(r.data);
    out.scales = std::move(r.scales);
    out.warnings = std::move(r.warnings);
    return out;
  }
  StreamSpec spec;
  std::optional<AdversarialFlavor> flavor = d.flavor;
  if (!d.preset.empty()) {
    spec = make_preset(d.preset, seed);
    if (d.n) resize_stream(spec, *d.n, path + ".n");
    if (!flavor) flavor = preset_flavor(d.preset);
  } else {
    json doc = d.generator;
    doc["seed"] = seed;
    spec = generator_from_json(doc, path + ".generator");
  }
  out.drift_points = spec.schedule.drift_points();
  if (kind == ProtocolKind::Adversarial) {
    AdversarialData adv = gen_adversarial(spec, *flavor);
    out.full = adv.train.materialize();
    out.test = std::move(adv.test);
  } else {
    out.full = Stream(spec).materialize();
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

std::size_t base_rows(const BasePolicy& b, std::size_t k, std::size_t train_rows) {
  if (b.match_batch) return k;
  if (b.rows) return b.rows;
  const auto rows = static_cast<std::size_t>(std::floor(b.fraction * static_cast<double>(train_rows) + 1e-9));
  return std::max<std::size_t>(1, rows);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.spec = spec;
  if (options.seed_override) result.spec.protocol.seeds = {*options.seed_override};
  const ProtocolSpec& protocol = result.spec.protocol;
  const auto& seeds = protocol.seeds;

  const std::size_t n_data = spec.datasets.size();
  const std::size_t n_alg = spec.algorithms.size();
  for (std::size_t a = 0; a < n_alg; ++a) {
    result.labels.push_back(parse_algorithm(spec.algorithms[a], "algorithms").display_name());
  }
  result.algorithms.resize(n_data);
  for (std::size_t d = 0; d < n_data; ++d) {
    for (std::size_t a = 0; a < n_alg; ++a) {
      result.algorithms[d].push_back(
          parse_algorithm(merged_algorithm(result.spec, d, a, result.labels[a]), "algorithms"));
    }
  }

  const bool folded = protocol.kind == ProtocolKind::Holdout || protocol.kind == ProtocolKind::Rank;
  const std::size_t n_folds = folded ? protocol.folds : 1;
  const std::size_t n_seeds = seeds.size();
  result.cells.resize(n_data * n_alg * n_seeds * n_folds);
  result.datasets.resize(n_data);

  for (std::size_t d = 0; d < n_data; ++d) {
    const DatasetSpec& ds = spec.datasets[d];
    const std::string path = "datasets[" + std::to_string(d) + "]";
    const bool fixed_data = !ds.csv.empty() || ds.seed.has_value();
    std::optional<Loaded> loaded;

    for (std::size_t s = 0; s < n_seeds; ++s) {
      const std::uint64_t seed = seeds[s];
      if (!loaded || !fixed_data) loaded = load_dataset(ds, fixed_data ? ds.seed.value_or(0) : seed, protocol.kind, path);
      const Dataset& full = loaded->full;
      const std::size_t m = full.num_features();
      const std::size_t k = ds.batch_size ? *ds.batch_size
                            : protocol.batch_size ? *protocol.batch_size
                                                  : mini_batch_size(m);
      std::optional<FoldPlan> plan;
      if (folded) {
        if (full.rows() < protocol.folds) {
          throw SpecError(path, "fewer rows than folds");
        }
        plan = kfold(full.rows(), protocol.folds, seed);
      }

      for (std::size_t fold = 0; fold < n_folds; ++fold) {
        Dataset train_store, test_store;
        const Dataset* train = &full;
        const Dataset* test = &loaded->test;
        if (plan) {
          train_store = subset(full, plan->train_indices(fold));
          test_store = subset(full, plan->test_indices(fold));
          train = &train_store;
          test = &test_store;
        }
        const std::size_t window = ds.window_capacity ? *ds.window_capacity
                                   : protocol.window_capacity ? *protocol.window_capacity
                                                              : window_capacity(train->rows(), k);
        CellConfig cell;
        cell.chunks.batch_size = k;
        cell.chunks.base_size = base_rows(protocol.base, k, train->rows());
        cell.window_capacity = window;
        cell.prequential = protocol.kind == ProtocolKind::Prequential;
        cell.checkpoints = protocol.kind == ProtocolKind::Prequential ? 0 : protocol.checkpoints;
        if (protocol.kind == ProtocolKind::Rank) cell.max_chunks = protocol.checkpoints;

        if (s == 0 && fold == 0) {
          DatasetInfo& info = result.datasets[d];
          info.name = ds.name;
          info.rows = full.rows() + (plan ? 0 : loaded->test.rows());
          info.features = m;
          info.train_rows = train->rows();
          info.test_rows = test->rows();
          info.batch_size = k;
          info.base_size = cell.chunks.base_size;
          info.window_capacity = window;
          info.drift_points = loaded->drift_points;
          info.scales = loaded->scales;
          info.warnings = loaded->warnings;
        }

        parallel_for(n_alg, options.jobs, [&](std::size_t a) {
          CellConfig c = cell;
          c.algorithm = result.algorithms[d][a];
          c.seed = seed * 1000003ULL + fold;
          const std::size_t index = ((d * n_alg + a) * n_seeds + s) * n_folds + fold;
          result.cells[index] = Cell{CellKey{d, a, seed, fold}, run_cell(c, *train, *test)};
        });
      }
    }
  }

  if (protocol.kind == ProtocolKind::Rank) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> mse(n_data, std::vector<double>(n_alg));
    for (std::size_t d = 0; d < n_data; ++d) {
      names.push_back(spec.datasets[d].name);
      for (std::size_t a = 0; a < n_alg; ++a) {
        std::vector<double> values;
        for (const Cell* c : result.select(d, a)) values.push_back(c->result.early_mse());
        mse[d][a] = summarize(values).mean;
      }
    }
    result.rank = average_rank(names, result.labels, mse);
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

// ---- outputs --------------------------------------------------------------------------------

namespace {

json assessment_json(const DriftAssessment& a) {
  json j = {{"batch_index", a.batch_index}, {"kpi", to_string(a.kpi)}, {"current", a.current},
            {"mu", a.mu},   {"sigma", a.sigma}, {"tau", a.tau},   {"low", a.low},
            {"high", a.high}, {"dm", a.dm},     {"drift_detected", a.drift_detected},
            {"severity", to_string(a.severity)}};
  j["alpha_applied"] = a.alpha_applied ? json(*a.alpha_applied) : json(nullptr);
  return j;
}

json scales_json(const std::vector<ColumnScale>& scales) {
  json out = json::array();
  for (const auto& s : scales) out.push_back({{"column", s.column}, {"min", s.min}, {"max", s.max}});
  return out;
}

}  // namespace

json summary_json(const ExperimentResult& r) {
  json datasets = json::array();
  for (const auto& info : r.datasets) {
    json j = {{"name", info.name},
              {"rows", info.rows},
              {"features", info.features},
              {"train_rows", info.train_rows},
              {"test_rows", info.test_rows},
              {"batch_size", info.batch_size},
              {"base_size", info.base_size},
              {"window_capacity", info.window_capacity},
              {"drift_points", info.drift_points}};
    if (!info.scales.empty()) j["normalization"] = scales_json(info.scales);
    if (!info.warnings.empty()) j["warnings"] = info.warnings;
    datasets.push_back(std::move(j));
  }

  json results = json::array();
  for (std::size_t d = 0; d < r.datasets.size(); ++d) {
    for (std::size_t a = 0; a < r.labels.size(); ++a) {
      const auto cells = r.select(d, a);
      std::vector<double> r2, mse, early, stream;
      std::size_t diverged = 0, undefined = 0, abrupt = 0, incremental = 0;
      std::vector<std::vector<double>> cp_r2, cp_mse;
      std::vector<std::size_t> cp_points;
      for (const Cell* c : cells) {
        const CellResult& cr = c->result;
        if (cr.diverged) {
          ++diverged;
          continue;
        }
        if (cr.final_report) {
          r2.push_back(cr.final_report->r2);
          mse.push_back(cr.final_report->mse);
          if (cr.final_report->r2_undefined) ++undefined;
        }
        if (!cr.checkpoints.empty()) early.push_back(cr.early_mse());
        if (!cr.trace.empty()) stream.push_back(cr.stream_mean_r2());
        for (std::size_t i = 0; i < cr.checkpoints.size(); ++i) {
          if (cp_r2.size() <= i) {
            cp_r2.emplace_back();
            cp_mse.emplace_back();
            cp_points.push_back(cr.checkpoints[i].points_seen);
          }
          cp_r2[i].push_back(cr.checkpoints[i].report.r2);
          cp_mse[i].push_back(cr.checkpoints[i].report.mse);
        }
        for (const auto& p : cr.trace) {
          if (!p.drift || !p.drift->drift_detected) continue;
          if (p.drift->severity == Severity::Abrupt) ++abrupt;
          if (p.drift->severity == Severity::Incremental) ++incremental;
        }
      }
      json row = {{"dataset", r.datasets[d].name},
                  {"algorithm", r.labels[a]},
                  {"config", to_json(r.algorithms[d][a])},
                  {"cells", cells.size()},
                  {"diverged", diverged}};
      if (!r2.empty()) {
        row["final"] = {{"r2", summary_of(r2)}, {"mse", summary_of(mse)}, {"r2_undefined", undefined}};
      }
      if (!early.empty()) row["early_mse"] = summary_of(early);
      if (!cp_r2.empty()) {
        json cps = json::array();
        for (std::size_t i = 0; i < cp_r2.size(); ++i) {
          cps.push_back({{"index", i},
                         {"points_seen", cp_points[i]},
                         {"r2", summarize(cp_r2[i]).mean},
                         {"mse", summarize(cp_mse[i]).mean}});
        }
        row["checkpoints"] = cps;
      }
      if (!stream.empty()) row["stream_r2"] = summary_of(stream);
      if (r.algorithms[d][a].kind == "olr_waa") {
        row["drift_events"] = {{"abrupt", abrupt}, {"incremental", incremental}};
      }
      results.push_back(std::move(row));
    }
  }

  json out = {{"schema_version", kSchemaVersion},
              {"spec", to_json(r.spec)},
              {"datasets", datasets},
              {"results", results},
              {"diverged_cells", r.diverged()}};
  if (r.rank) {
    const RankTable& t = *r.rank;
    json rows = json::array();
    for (std::size_t d = 0; d < t.datasets.size(); ++d) {
      rows.push_back({{"dataset", t.datasets[d]}, {"mse", t.mse[d]}, {"ranks", t.ranks[d]}});
    }
    out["rank"] = {{"algorithms", t.algorithms}, {"rows", rows}, {"average_rank", t.average_rank}};
  }
  return out;
}

json metadata_json(const ExperimentResult& r, const RunOptions& options) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"dataset", r.datasets[c.key.dataset].name},
                     {"algorithm", r.labels[c.key.algorithm]},
                     {"seed", c.key.seed},
                     {"fold", c.key.fold},
                     {"runtime_seconds", c.result.runtime_seconds}});
  }
  char stamp[32] = {};
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  json j = {{"schema_version", kSchemaVersion},
            {"generated_at", stamp},
            {"wall_seconds", r.wall_seconds},
            {"jobs", options.jobs},
            {"compiler", __VERSION__},
            {"cells", cells}};
  j["seed_override"] = options.seed_override ? json(*options.seed_override) : json(nullptr);
  return j;
}

void write_cells_csv(std::ostream& out, const ExperimentResult& r) {
  out << "dataset,algorithm,seed,fold,final_r2,final_mse,r2_undefined,early_mse,stream_mean_r2,"
         "abrupt_events,diverged\n";
  for (const auto& c : r.cells) {
    const CellResult& cr = c.result;
    std::size_t abrupt = 0;
    for (const auto& p : cr.trace) {
      if (p.drift && p.drift->drift_detected && p.drift->severity == Severity::Abrupt) ++abrupt;
    }
    out << csv_field(r.datasets[c.key.dataset].name) << ',' << csv_field(r.labels[c.key.algorithm]) << ','
        << c.key.seed << ',' << c.key.fold << ',';
    if (cr.final_report) {
      out << csv_number(cr.final_report->r2) << ',' << csv_number(cr.final_report->mse) << ','
          << (cr.final_report->r2_undefined ? 1 : 0);
    } else {
      out << ",,";
    }
    out << ',' << (cr.checkpoints.empty() ? std::string() : csv_number(cr.early_mse())) << ','
        << (cr.trace.empty() ? std::string() : csv_number(cr.stream_mean_r2())) << ',' << abrupt << ','
        << (cr.diverged ? 1 : 0) << '\n';
  }
}

void write_trace_jsonl(std::ostream& out, const ExperimentResult& r) {
  for (const auto& c : r.cells) {
    for (const auto& p : c.result.trace) {
      json j = {{"dataset", r.datasets[c.key.dataset].name},
                {"algorithm", r.labels[c.key.algorithm]},
                {"seed", c.key.seed},
                {"fold", c.key.fold},
                {"batch_index", p.batch_index},
                {"points_seen", p.points_seen},
                {"r2", p.report.r2},
                {"mse", p.report.mse},
                {"n", p.report.n}};
      if (p.drift) j["drift"] = assessment_json(*p.drift);
      out << j.dump() << '\n';
    }
  }
}

void write_rank_csv(std::ostream& out, const RankTable& t) {
  out << "dataset";
  for (const auto& a : t.algorithms) out << ',' << csv_field(a + " mse") << ',' << csv_field(a + " rank");
  out << '\n';
  for (std::size_t d = 0; d < t.datasets.size(); ++d) {
    out << csv_field(t.datasets[d]);
    for (std::size_t a = 0; a < t.algorithms.size(); ++a) {
      out << ',' << csv_number(t.mse[d][a]) << ',' << format_double(t.ranks[d][a]);
    }
    out << '\n';
  }
  out << "average";
  for (double r : t.average_rank) out << ",," << format_double(r);
  out << '\n';
}

std::vector<std::string> write_outputs(const ExperimentResult& r, const RunOptions& options,
                                       const std::string& dir, bool trace) {
  make_dir(dir);
  const std::filesystem::path root(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, auto&& body) {
    const auto path = root / name;
    auto out = open_out(path);
    body(out);
    close_out(out, path);
    written.push_back(path.string());
  };
  emit("summary.json", [&](std::ostream& o) { o << dump_json(summary_json(r)); });
  emit("metadata.json", [&](std::ostream& o) { o << dump_json(metadata_json(r, options)); });
  emit("cells.csv", [&](std::ostream& o) { write_cells_csv(o, r); });
  if (trace) emit("trace.jsonl", [&](std::ostream& o) { write_trace_jsonl(o, r); });
  if (r.rank) emit("rank.csv", [&](std::ostream& o) { write_rank_csv(o, *r.rank); });
  return written;
}

RankTable rank_from_summaries(const std::vector<json>& summaries) {
  if (summaries.empty()) throw SpecError("results", "no summaries given");
  std::vector<std::string> algorithms;
  std::vector<std::string> datasets;
  std::map<std::string, std::map<std::string, double>> table;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const std::string p = "results[" + std::to_string(i) + "]";
    const json& s = summaries[i];
    if (!s.is_object() || !s.contains("results") || !s.at("results").is_array()) {
      throw SpecError(p, "not a summary document");
    }
    std::vector<std::string> algs;
    std::vector<std::string> order;
    std::map<std::string, std::map<std::string, double>> local;
    for (const auto& row : s.at("results")) {
      const std::string ds = row.at("dataset").get<std::string>();
      const std::string alg = row.at("algorithm").get<std::string>();
      if (std::find(algs.begin(), algs.end(), alg) == algs.end()) algs.push_back(alg);
      if (std::find(order.begin(), order.end(), ds) == order.end()) order.push_back(ds);
      double v = std::numeric_limits<double>::infinity();
      if (row.value("diverged", 0) == 0 && row.contains("early_mse") &&
          row.at("early_mse").at("mean").is_number()) {
        v = row.at("early_mse").at("mean").get<double>();
      } else if (row.value("diverged", 0) == 0) {
        throw SpecError(p, "dataset '" + ds + "' has no early-MSE checkpoints for " + alg);
      }
      local[ds][alg] = v;
    }
    if (algorithms.empty()) {
      algorithms = algs;
    } else {
      const std::set<std::string> want(algorithms.begin(), algorithms.end());
      const std::set<std::string> got(algs.begin(), algs.end());
      if (want != got) throw SpecError(p, "algorithm set differs from the first summary");
    }
    for (const auto& ds : order) {
      if (table.count(ds)) throw SpecError(p, "dataset '" + ds + "' appears in more than one summary");
      if (local[ds].size() != algorithms.size()) throw SpecError(p, "dataset '" + ds + "' is missing cells");
      table[ds] = local[ds];
      datasets.push_back(ds);
    }
  }
  std::vector<std::vector<double>> mse;
  for (const auto& ds : datasets) {
    std::vector<double> row;
    for (const auto& a : algorithms) row.push_back(table[ds][a]);
    mse.push_back(std::move(row));
  }
  return average_rank(datasets, algorithms, mse);
}

// ---- dataset generation ----------------------------------------------------------------------

GenerateSpec parse_generate(const json& doc) {
  Fields f(doc, "");
  GenerateSpec g;
  const bool has_preset = f.has("preset");
  const bool has_generator = f.has("generator");
  require(has_preset != has_generator, "preset", "exactly one of preset or generator is required");
  if (has_preset) {
    const auto name = f.str("preset");
    require(is_preset(*name), "preset", "unknown preset '" + *name + "'");
    const std::uint64_t seed = f.count("seed").value_or(0);
    g.stream = make_preset(*name, seed);
    if (auto n = f.count("n")) resize_stream(g.stream, *n, "n");
    g.flavor = preset_flavor(*name);
    g.name = *name;
  } else {
    require(!f.has("seed") && !f.has("n"), "seed", "put seed and n inside the generator");
    g.stream = generator_from_json(f.raw("generator"), "generator");
  }
  if (auto v = f.str("flavor")) g.flavor = parse_flavor(*v, "flavor");
  if (auto v = f.str("name")) g.name = *v;
  require(!g.name.empty(), "name", "required for generator specs");
  require(g.name.find('/') == std::string::npos, "name", "must be a plain file stem");
  if (g.flavor) {
    require(g.stream.schedule.concepts.size() == 2 && g.stream.holdout > 0, "flavor",
            "only adversarial streams with a holdout take a flavor");
  }
  f.finish();
  return g;
}

std::vector<std::string> write_generated(const GenerateSpec& g, const std::string& dir) {
  make_dir(dir);
  const std::filesystem::path root(dir);
  std::vector<std::string> written;

  Dataset train;
  std::optional<Dataset> test;
  if (g.flavor) {
    AdversarialData adv = gen_adversarial(g.stream, *g.flavor);
    train = adv.train.materialize();
    test = std::move(adv.test);
  } else {
    train = Stream(g.stream).materialize();
  }

  const auto csv_path = root / (g.name + ".csv");
  auto csv = open_out(csv_path);
  write_csv(csv, train);
  close_out(csv, csv_path);
  written.push_back(csv_path.string());

  if (test) {
    const auto test_path = root / (g.name + "_test.csv");
    auto out = open_out(test_path);
    write_csv(out, *test);
    close_out(out, test_path);
    written.push_back(test_path.string());
  }

  json side = sidecar(g.stream);
  if (g.flavor) side["flavor"] = to_string(*g.flavor);
  const auto side_path = root / (g.name + ".json");
  auto out = open_out(side_path);
  out << dump_json(side);
  close_out(out, side_path);
  written.push_back(side_path.string());
  return written;
}

// ---- helpers ----------------------------------------------------------------------------------

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(path, e.what());
  }
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace olrwa::bench
