#include "olrwa/datagen.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "olrwa/errors.hpp"

namespace olrwa {

namespace {

// Substream ids of one seed.
constexpr std::uint64_t kConceptStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kHoldoutStream = 2;

Vector random_direction(Rng& rng, std::size_t m) {
  Vector d(m);
  double n2 = 0.0;
  do {
    for (double& v : d) v = rng.normal();
    n2 = dot(d, d);
  } while (!(n2 > 1e-12));
  const double n = std::sqrt(n2);
  for (double& v : d) v /= n;
  return d;
}

LinearConcept shifted(const LinearConcept& c, std::span<const double> direction, double distance) {
  LinearConcept out = c;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += distance * direction[i];
  return out;
}

void check_shape(const BaseShape& s) {
  if (s.n == 0) throw SpecError("n", "must be >= 1");
  if (s.m == 0) throw SpecError("m", "must be >= 1");
  if (!(s.noise_std >= 0.0) || !std::isfinite(s.noise_std)) {
    throw SpecError("noise_std", "must be finite and >= 0");
  }
  if (!(s.feature_lo < s.feature_hi)) throw SpecError("feature_range", "need lo < hi");
  if (!(s.prior.coef_lo < s.prior.coef_hi)) throw SpecError("coef_range", "need lo < hi");
  if (s.prior.signal_std && !(*s.prior.signal_std > 0.0)) {
    throw SpecError("signal_std", "must be positive");
  }
}

StreamSpec base_spec(const BaseShape& s) {
  check_shape(s);
  StreamSpec spec;
  spec.n = s.n;
  spec.m = s.m;
  spec.noise_std = s.noise_std;
  spec.feature_lo = s.feature_lo;
  spec.feature_hi = s.feature_hi;
  spec.seed = s.seed;
  spec.holdout = s.holdout;
  return spec;
}

}  // namespace

double LinearConcept::mean(std::span<const double> x) const { return intercept + dot(coeffs, x); }

const char* to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::Stationary: return "stationary";
    case DriftKind::Abrupt: return "abrupt";
    case DriftKind::Incremental: return "incremental";
    case DriftKind::Gradual: return "gradual";
  }
  return "stationary";
}

DriftKind parse_drift_kind(const std::string& name) {
  if (name == "stationary") return DriftKind::Stationary;
  if (name == "abrupt") return DriftKind::Abrupt;
  if (name == "incremental") return DriftKind::Incremental;
  if (name == "gradual") return DriftKind::Gradual;
  throw SpecError("kind", "unknown drift kind '" + name + "'");
}

std::vector<std::size_t> DriftSchedule::drift_points() const {
  std::vector<std::size_t> points;
  std::size_t at = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0 && segments[i].concept_id != segments[i - 1].concept_id) points.push_back(at);
    at += segments[i].length;
  }
  return points;
}

void validate(const StreamSpec& spec) {
  if (spec.n == 0) throw SpecError("n", "must be >= 1");
  if (spec.m == 0) throw SpecError("m", "must be >= 1");
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
    throw SpecError("noise_std", "must be finite and >= 0");
  }
  if (!(spec.feature_lo < spec.feature_hi)) throw SpecError("feature_range", "need lo < hi");
  const auto& s = spec.schedule;
  if (s.concepts.empty()) throw SpecError("schedule.concepts", "need at least one concept");
  for (std::size_t i = 0; i < s.concepts.size(); ++i) {
    const auto& c = s.concepts[i];
    const std::string field = "schedule.concepts[" + std::to_string(i) + "]";
    if (c.coeffs.size() != spec.m) throw SpecError(field, "coefficient count differs from m");
    if (!std::isfinite(c.intercept) || !all_finite(c.coeffs)) throw SpecError(field, "non-finite value");
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    if (s.segments[i].concept_id >= s.concepts.size()) {
      throw SpecError("schedule.segments[" + std::to_string(i) + "]", "unknown concept id");
    }
    total += s.segments[i].length;
  }
  if (total != spec.n) {
    throw SpecError("schedule.segments", "lengths sum to " + std::to_string(total) + ", expected n = " +
                                             std::to_string(spec.n));
  }
  const std::size_t switches = s.drift_points().size();
  switch (s.kind) {
    case DriftKind::Stationary:
      if (s.concepts.size() != 1) throw SpecError("schedule.concepts", "stationary needs one concept");
      break;
    case DriftKind::Abrupt:
      if (s.concepts.size() != 2 || switches != 1) {
        throw SpecError("schedule", "abrupt needs two concepts and one switch");
      }
      break;
    case DriftKind::Incremental:
      for (std::size_t i = 0; i < s.segments.size(); ++i) {
        if (s.segments[i].concept_id != i) {
          throw SpecError("schedule.segments", "incremental uses each concept once, in order");
        }
      }
      break;
    case DriftKind::Gradual:
      if (s.concepts.size() != 2) throw SpecError("schedule.concepts", "gradual needs two concepts");
      if (switches + 1 != s.segments.size()) {
        throw SpecError("schedule.segments", "gradual segments must alternate concepts");
      }
      break;
  }
}

std::vector<std::string> default_columns(std::size_t m) {
  std::vector<std::string> cols;
  for (std::size_t i = 1; i <= m; ++i) cols.push_back("x" + std::to_string(i));
  cols.push_back("y");
  return cols;
}

Stream::Stream(StreamSpec spec) : spec_(std::move(spec)), rng_(spec_.seed, kSampleStream) {
  validate(spec_);
  segment_end_ = spec_.schedule.segments.front().length;
}

bool Stream::next(Vector& x, double& y) {
  if (done()) return false;
  while (pos_ >= segment_end_) {
    ++segment_;
    segment_end_ += spec_.schedule.segments[segment_].length;
  }
  const LinearConcept& c = spec_.schedule.concepts[spec_.schedule.segments[segment_].concept_id];
  x.resize(spec_.m);
  for (double& v : x) v = rng_.uniform(spec_.feature_lo, spec_.feature_hi);
  y = c.mean(x) + spec_.noise_std * rng_.normal();
  ++pos_;
  return true;
}

Dataset Stream::materialize() {
  Dataset data;
  const std::size_t remaining = spec_.n - pos_;
  std::vector<double> xs;
  xs.reserve(remaining * spec_.m);
  data.y.reserve(remaining);
  Vector x;
  double y;
  while (next(x, y)) {
    xs.insert(xs.end(), x.begin(), x.end());
    data.y.push_back(y);
  }
  data.x = Matrix(data.y.size(), spec_.m, std::move(xs));
  data.columns = default_columns(spec_.m);
  return data;
}

double uniform_std(double lo, double hi) { return (hi - lo) / std::sqrt(12.0); }

double signal_std_for_r2(double r2, double noise_std) {
  if (!(r2 > 0.0 && r2 < 1.0)) throw SpecError("target_r2", "must lie in (0, 1)");
  return noise_std * std::sqrt(r2 / (1.0 - r2));
}

LinearConcept random_concept(Rng& rng, std::size_t m, double noise_std, const ConceptPrior& prior,
                             double feature_lo, double feature_hi) {
  LinearConcept c;
  c.noise_std = noise_std;
  c.coeffs.resize(m);
  for (double& v : c.coeffs) v = rng.uniform(prior.coef_lo, prior.coef_hi);
  c.intercept = rng.uniform(prior.coef_lo, prior.coef_hi);
  if (prior.signal_std) {
    const double current = norm2(c.coeffs) * uniform_std(feature_lo, feature_hi);
    if (current > 0.0) {
      const double scale = *prior.signal_std / current;
      for (double& v : c.coeffs) v *= scale;
    }
  }
  return c;
}

StreamSpec stationary_spec(const BaseShape& shape) {
  StreamSpec spec = base_spec(shape);
  Rng rng(shape.seed, kConceptStream);
  spec.schedule.kind = DriftKind::Stationary;
  spec.schedule.concepts.push_back(
      random_concept(rng, shape.m, shape.noise_std, shape.prior, shape.feature_lo, shape.feature_hi));
  spec.schedule.segments.push_back({0, shape.n});
  return spec;
}

StreamSpec adversarial_spec(const BaseShape& shape) {
  if (shape.n < 2) throw SpecError("n", "adversarial streams need n >= 2");
  StreamSpec spec = base_spec(shape);
  Rng rng(shape.seed, kConceptStream);
  const LinearConcept c =
      random_concept(rng, shape.m, shape.noise_std, shape.prior, shape.feature_lo, shape.feature_hi);
  // Crossing point x0 from the central half of the feature box.
  const double mid = 0.5 * (shape.feature_lo + shape.feature_hi);
  const double quarter = 0.25 * (shape.feature_hi - shape.feature_lo);
  Vector x0(shape.m);
  for (double& v : x0) v = rng.uniform(mid - quarter, mid + quarter);
  LinearConcept adv = c;
  for (double& v : adv.coeffs) v = -v;
  adv.intercept = c.intercept + 2.0 * dot(c.coeffs, x0);
  spec.schedule.kind = DriftKind::Abrupt;
  spec.schedule.concepts = {c, adv};
  spec.schedule.segments = {{0, shape.n / 2}, {1, shape.n - shape.n / 2}};
  return spec;
}

StreamSpec abrupt_spec(const BaseShape& shape, std::size_t switch_at, double target_ed) {
  StreamSpec spec = base_spec(shape);
  if (switch_at == 0 || switch_at >= shape.n) throw SpecError("switch_at", "must lie inside (0, n)");
  if (!(target_ed > 0.0) || !std::isfinite(target_ed)) throw SpecError("target_ed", "must be positive");
  Rng rng(shape.seed, kConceptStream);
  const LinearConcept c1 =
      random_concept(rng, shape.m, shape.noise_std, shape.prior, shape.feature_lo, shape.feature_hi);
  const Vector d = random_direction(rng, shape.m);
  spec.schedule.kind = DriftKind::Abrupt;
  spec.schedule.concepts = {c1, shifted(c1, d, target_ed)};
  spec.schedule.segments = {{0, switch_at}, {1, shape.n - switch_at}};
  return spec;
}

StreamSpec incremental_spec(const BaseShape& shape, std::size_t segment_length,
                            std::span<const double> eds) {
  StreamSpec spec = base_spec(shape);
  if (segment_length == 0) throw SpecError("segment_length", "must be >= 1");
  if ((eds.size() + 1) * segment_length != shape.n) {
    throw SpecError("eds", "need n / segment_length - 1 = " +
                               std::to_string(shape.n / segment_length - 1) + " distances, got " +
                               std::to_string(eds.size()));
  }
  for (std::size_t i = 0; i < eds.size(); ++i) {
    if (!(eds[i] > 0.0) || !std::isfinite(eds[i])) {
      throw SpecError("eds[" + std::to_string(i) + "]", "distance must be positive");
    }
  }
  Rng rng(shape.seed, kConceptStream);
  LinearConcept c =
      random_concept(rng, shape.m, shape.noise_std, shape.prior, shape.feature_lo, shape.feature_hi);
  const Vector d = random_direction(rng, shape.m);
  spec.schedule.kind = DriftKind::Incremental;
  spec.schedule.concepts.push_back(c);
  for (double ed : eds) {
    c = shifted(c, d, ed);
    spec.schedule.concepts.push_back(c);
  }
  for (std::size_t i = 0; i <= eds.size(); ++i) spec.schedule.segments.push_back({i, segment_length});
  return spec;
}

StreamSpec gradual_spec(const BaseShape& shape, std::span<const std::size_t> lengths,
                        double target_ed) {
  StreamSpec spec = base_spec(shape);
  if (lengths.size() < 2) throw SpecError("lengths", "need at least two segments");
  if (!(target_ed > 0.0) || !std::isfinite(target_ed)) throw SpecError("target_ed", "must be positive");
  const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  if (total != shape.n) throw SpecError("lengths", "segment lengths must sum to n");
  Rng rng(shape.seed, kConceptStream);
  const LinearConcept c1 =
      random_concept(rng, shape.m, shape.noise_std, shape.prior, shape.feature_lo, shape.feature_hi);
  const Vector d = random_direction(rng, shape.m);
  spec.schedule.kind = DriftKind::Gradual;
  spec.schedule.concepts = {c1, shifted(c1, d, target_ed)};
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] == 0) throw SpecError("lengths[" + std::to_string(i) + "]", "must be >= 1");
    spec.schedule.segments.push_back({i % 2, lengths[i]});
  }
  return spec;
}

Stream gen_stationary(const StreamSpec& spec) {
  if (spec.schedule.kind != DriftKind::Stationary || spec.schedule.concepts.size() != 1) {
    throw SpecError("schedule", "stationary generator needs a single-concept schedule");
  }
  return Stream(spec);
}

const char* to_string(AdversarialFlavor flavor) {
  return flavor == AdversarialFlavor::TimeBased ? "time_based" : "confidence_based";
}

AdversarialData gen_adversarial(const StreamSpec& spec, AdversarialFlavor flavor) {
  if (spec.schedule.concepts.size() != 2) {
    throw SpecError("schedule.concepts", "adversarial generator needs exactly two concepts");
  }
  Stream train(spec);
  const LinearConcept& c =
      spec.schedule.concepts[flavor == AdversarialFlavor::TimeBased ? 1 : 0];
  Rng rng(spec.seed, kHoldoutStream);
  Dataset test;
  std::vector<double> xs;
  xs.reserve(spec.holdout * spec.m);
  Vector x(spec.m);
  for (std::size_t i = 0; i < spec.holdout; ++i) {
    for (double& v : x) v = rng.uniform(spec.feature_lo, spec.feature_hi);
    xs.insert(xs.end(), x.begin(), x.end());
    test.y.push_back(c.mean(x) + spec.noise_std * rng.normal());
  }
  test.x = Matrix(spec.holdout, spec.m, std::move(xs));
  test.columns = default_columns(spec.m);
  return {std::move(train), std::move(test)};
}

DriftStream gen_drift(const StreamSpec& spec) {
  if (spec.schedule.kind == DriftKind::Stationary) {
    throw SpecError("schedule.kind", "drift generator needs a drifting schedule");
  }
  Stream stream(spec);
  return {std::move(stream), spec.schedule.drift_points()};
}

Stream gen_convergence(const StreamSpec& spec) {
  if (spec.m != 2) throw SpecError("m", "convergence streams have m = 2");
  return gen_stationary(spec);
}

// ---- presets -----------------------------------------------------------------------

namespace {

// Unit-variance features for every preset.
const double kPresetHalfWidth = std::sqrt(3.0);

struct PresetRow {
  const char* name;
  std::size_t n;
  std::size_t m;
  double noise;
  double reference_r2;  // batch R^2 the concept is scaled to; 0 for the raw prior
  enum Family { Stationary, Adversarial, Drift } family;
  std::size_t holdout;
};

// Shapes follow the published dataset tables; the "_like" rows stand in for
// the real datasets, which are not bundled.
const PresetRow kPresets[] = {
    {"ds1", 1000, 3, 10, 0.97637, PresetRow::Stationary, 0},
    {"ds2", 10000, 20, 20, 0.98418, PresetRow::Stationary, 0},
    {"ds3", 10000, 200, 25, 0.98299, PresetRow::Stationary, 0},
    {"ds4", 50000, 500, 50, 0.92973, PresetRow::Stationary, 0},
    {"ds5", 4500, 20, 20, 0.98601, PresetRow::Adversarial, 500},
    {"ds6", 9000, 200, 40, 0.93739, PresetRow::Adversarial, 1000},
    {"ds7", 4500, 20, 20, 0.97815, PresetRow::Adversarial, 500},
    {"ds8", 9000, 200, 40, 0.93191, PresetRow::Adversarial, 1000},
    {"ds9", 1000, 2, 20, 0.91513, PresetRow::Stationary, 0},
    {"ds10", 1000, 2, 40, 0.91513, PresetRow::Stationary, 0},
    {"ds11", 10000, 10, 20, 0, PresetRow::Drift, 0},
    {"ds12", 10000, 10, 20, 0, PresetRow::Drift, 0},
    {"ds13", 10000, 10, 20, 0, PresetRow::Drift, 0},
    {"mcpd_like", 1338, 7, 20, 0.74321, PresetRow::Stationary, 0},
    {"1kc_like", 1000, 5, 20, 0.93615, PresetRow::Stationary, 0},
    {"kchsd_like", 21613, 21, 20, 0.57859, PresetRow::Stationary, 0},
    {"ccpp_like", 9568, 5, 20, 0.92855, PresetRow::Stationary, 0},
};

const PresetRow* find_preset(const std::string& name) {
  for (const auto& row : kPresets) {
    if (name == row.name) return &row;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& row : kPresets) v.emplace_back(row.name);
    return v;
  }();
  return names;
}

bool is_preset(const std::string& name) { return find_preset(name) != nullptr; }

std::optional<AdversarialFlavor> preset_flavor(const std::string& name) {
  if (name == "ds5" || name == "ds6") return AdversarialFlavor::TimeBased;
  if (name == "ds7" || name == "ds8") return AdversarialFlavor::ConfidenceBased;
  return std::nullopt;
}

StreamSpec make_preset(const std::string& name, std::uint64_t seed) {
  const PresetRow* row = find_preset(name);
  if (!row) throw SpecError("preset", "unknown preset '" + name + "'");
  BaseShape shape;
  shape.n = row->n;
  shape.m = row->m;
  shape.noise_std = row->noise;
  shape.feature_lo = -kPresetHalfWidth;
  shape.feature_hi = kPresetHalfWidth;
  shape.seed = seed;
  shape.holdout = row->holdout;
  if (row->reference_r2 > 0.0) {
    // ds10 keeps ds9's signal with doubled noise.
    const double noise_for_signal = name == "ds10" ? 20.0 : row->noise;
    shape.prior.signal_std = signal_std_for_r2(row->reference_r2, noise_for_signal);
  }
  switch (row->family) {
    case PresetRow::Stationary: return stationary_spec(shape);
    case PresetRow::Adversarial: return adversarial_spec(shape);
    case PresetRow::Drift: break;
  }
  if (name == "ds11") return abrupt_spec(shape, 5000, 327.23);
  if (name == "ds12") {
    const double eds[] = {14.8, 18.5, 23.9, 31.8, 44.6, 66.9, 111.5, 223.1, 669.5};
    return incremental_spec(shape, 1000, eds);
  }
  const std::size_t lengths[] = {2500, 1000, 1000, 2000, 1000, 2500};
  return gradual_spec(shape, lengths, 2049.14);
}

// ---- export ----------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto cols = data.columns.empty() ? default_columns(data.num_features()) : data.columns;
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (double v : data.x.row(r)) out << format_double(v) << ',';
    out << format_double(data.y[r]) << '\n';
  }
}

nlohmann::json to_json(const LinearConcept& c) {
  return {{"intercept", c.intercept}, {"coeffs", c.coeffs}, {"noise_std", c.noise_std}};
}

nlohmann::json to_json(const StreamSpec& spec) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : spec.schedule.segments) {
    segments.push_back({{"concept", s.concept_id}, {"length", s.length}});
  }
  return {{"n", spec.n},
          {"m", spec.m},
          {"noise_std", spec.noise_std},
          {"feature_range", {spec.feature_lo, spec.feature_hi}},
          {"seed", spec.seed},
          {"holdout", spec.holdout},
          {"kind", to_string(spec.schedule.kind)},
          {"segments", segments}};
}

nlohmann::json sidecar(const StreamSpec& spec) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& c : spec.schedule.concepts) concepts.push_back(to_json(c));
  return {{"spec", to_json(spec)},
          {"drift_points", spec.schedule.drift_points()},
          {"concepts", concepts}};
}

namespace {

template <typename T>
T field(const nlohmann::json& doc, const std::string& path, const char* key) {
  if (!doc.contains(key)) throw SpecError(path + "." + key, "required field missing");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SpecError(path + "." + key, "wrong type");
  }
}

template <typename T>
T field_or(const nlohmann::json& doc, const std::string& path, const char* key, T fallback) {
  return doc.contains(key) ? field<T>(doc, path, key) : fallback;
}

std::pair<double, double> range_field(const nlohmann::json& doc, const std::string& path,
                                      const char* key, std::pair<double, double> fallback) {
  if (!doc.contains(key)) return fallback;
  const auto v = field<std::vector<double>>(doc, path, key);
  if (v.size() != 2 || !(v[0] < v[1])) throw SpecError(path + "." + key, "expected [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

// Signed integers are read first so negative values get a clear message.
std::size_t count_field(const nlohmann::json& doc, const std::string& path, const char* key) {
  const auto v = field<long long>(doc, path, key);
  if (v < 0) throw SpecError(path + "." + key, "must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace

StreamSpec generator_from_json(const nlohmann::json& doc, const std::string& path) {
  if (!doc.is_object()) throw SpecError(path, "generator must be an object");
  const std::string kind = field<std::string>(doc, path, "kind");
  BaseShape shape;
  shape.n = count_field(doc, path, "n");
  shape.m = count_field(doc, path, "m");
  shape.noise_std = field_or<double>(doc, path, "noise_std", 0.0);
  if (!(shape.noise_std >= 0.0)) throw SpecError(path + ".noise_std", "must be >= 0");
  shape.seed = field_or<std::uint64_t>(doc, path, "seed", 0);
  std::tie(shape.feature_lo, shape.feature_hi) =
      range_field(doc, path, "feature_range", {shape.feature_lo, shape.feature_hi});
  std::tie(shape.prior.coef_lo, shape.prior.coef_hi) =
      range_field(doc, path, "coef_range", {shape.prior.coef_lo, shape.prior.coef_hi});
  if (doc.contains("signal_std")) shape.prior.signal_std = field<double>(doc, path, "signal_std");
  if (doc.contains("target_r2")) {
    shape.prior.signal_std = signal_std_for_r2(field<double>(doc, path, "target_r2"), shape.noise_std);
  }
  if (doc.contains("holdout")) shape.holdout = count_field(doc, path, "holdout");

  try {
    if (kind == "stationary") return stationary_spec(shape);
    if (kind == "convergence") {
      if (shape.m != 2) throw SpecError("m", "convergence streams have m = 2");
      return stationary_spec(shape);
    }
    if (kind == "adversarial") {
      if (!doc.contains("holdout")) shape.holdout = shape.n / 9;
      return adversarial_spec(shape);
    }
    if (kind == "abrupt") {
      return abrupt_spec(shape, count_field(doc, path, "switch_at"), field<double>(doc, path, "target_ed"));
    }
    if (kind == "incremental") {
      const auto eds = field<std::vector<double>>(doc, path, "eds");
      return incremental_spec(shape, count_field(doc, path, "segment_length"), eds);
    }
    if (kind == "gradual") {
      const auto lengths = field<std::vector<std::size_t>>(doc, path, "lengths");
      return gradual_spec(shape, lengths, field<double>(doc, path, "target_ed"));
    }
  } catch (const SpecError& e) {
    if (e.field().rfind(path, 0) == 0) throw;
    throw SpecError(path + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
  throw SpecError(path + ".kind", "unknown generator kind '" + kind + "'");
}

}  // namespace olrwa
