#pragma once

// Synthetic regression streams: stationary, adversarial (negated concept),
// drifting (abrupt / incremental / gradual) and low-dimensional convergence
// sets. A StreamSpec fully determines its stream; samples are produced
// lazily from a seeded xoshiro256** generator.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "olrwa/linalg.hpp"
#include "olrwa/rng.hpp"

namespace olrwa {

struct LinearConcept {
  double intercept = 0.0;
  Vector coeffs;
  double noise_std = 0.0;

  double mean(std::span<const double> x) const;
};

enum class DriftKind { Stationary, Abrupt, Incremental, Gradual };

const char* to_string(DriftKind kind);
DriftKind parse_drift_kind(const std::string& name);

struct Segment {
  std::size_t concept_id = 0;
  std::size_t length = 0;
};

struct DriftSchedule {
  DriftKind kind = DriftKind::Stationary;
  std::vector<LinearConcept> concepts;
  std::vector<Segment> segments;

  // Indices where the active concept changes.
  std::vector<std::size_t> drift_points() const;
};

struct StreamSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  double noise_std = 0.0;
  DriftSchedule schedule;
  double feature_lo = -10.0;
  double feature_hi = 10.0;
  std::uint64_t seed = 0;
  // Fresh points drawn after the stream for adversarial evaluation.
  std::size_t holdout = 0;
};

// Throws SpecError naming the offending field.
void validate(const StreamSpec& spec);

struct Dataset {
  Matrix x;
  Vector y;
  std::vector<std::string> columns;  // feature names then the target name

  std::size_t rows() const noexcept { return y.size(); }
  std::size_t num_features() const noexcept { return x.cols(); }
};

std::vector<std::string> default_columns(std::size_t m);

class Stream {
 public:
  explicit Stream(StreamSpec spec);

  const StreamSpec& spec() const noexcept { return spec_; }
  std::size_t position() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ >= spec_.n; }

  // Writes the next sample; false once the stream is exhausted.
  bool next(Vector& x, double& y);

  // Drains the remaining samples.
  Dataset materialize();

 private:
  StreamSpec spec_;
  Rng rng_;
  std::size_t pos_ = 0;
  std::size_t segment_ = 0;
  std::size_t segment_end_ = 0;
};

// ---- concept construction ----------------------------------------------------

struct ConceptPrior {
  double coef_lo = -100.0;
  double coef_hi = 100.0;
  // When set, coefficients keep their random direction but are rescaled so
  // the noiseless target has this standard deviation under the feature
  // distribution.
  std::optional<double> signal_std;
};

// Standard deviation of U[lo, hi].
double uniform_std(double lo, double hi);

// Signal std giving a population R^2 of r2 at the given noise level.
double signal_std_for_r2(double r2, double noise_std);

LinearConcept random_concept(Rng& rng, std::size_t m, double noise_std, const ConceptPrior& prior,
                             double feature_lo, double feature_hi);

struct BaseShape {
  std::size_t n = 0;
  std::size_t m = 0;
  double noise_std = 0.0;
  double feature_lo = -10.0;
  double feature_hi = 10.0;
  std::uint64_t seed = 0;
  ConceptPrior prior;
  std::size_t holdout = 0;
};

StreamSpec stationary_spec(const BaseShape& shape);

// Two concepts: C for the first half, then the negation of C's coefficients
// with an intercept chosen so both planes cross at a point in the central
// half of the feature box.
StreamSpec adversarial_spec(const BaseShape& shape);

// One switch at `switch_at` to a concept at coefficient distance target_ed.
StreamSpec abrupt_spec(const BaseShape& shape, std::size_t switch_at, double target_ed);

// A chain of concepts, one per segment of `segment_length` points; consecutive
// coefficient distances follow `eds`, all along one random direction.
StreamSpec incremental_spec(const BaseShape& shape, std::size_t segment_length,
                            std::span<const double> eds);

// Two concepts at distance target_ed, alternating over `lengths`.
StreamSpec gradual_spec(const BaseShape& shape, std::span<const std::size_t> lengths,
                        double target_ed);

// ---- generators ----------------------------------------------------------------

Stream gen_stationary(const StreamSpec& spec);

enum class AdversarialFlavor { TimeBased, ConfidenceBased };

const char* to_string(AdversarialFlavor flavor);

struct AdversarialData {
  Stream train;  // identical for both flavors
  Dataset test;  // drawn from the new concept (TimeBased) or the old one
};

// Training stream is the spec's half/half schedule; spec.holdout fresh points
// form the test set.
AdversarialData gen_adversarial(const StreamSpec& spec, AdversarialFlavor flavor);

struct DriftStream {
  Stream stream;
  std::vector<std::size_t> drift_points;
};

DriftStream gen_drift(const StreamSpec& spec);

Stream gen_convergence(const StreamSpec& spec);

// ---- presets ---------------------------------------------------------------------

// ds1 .. ds13 and the real-shaped stand-ins mcpd_like, 1kc_like, kchsd_like,
// ccpp_like.
const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);
StreamSpec make_preset(const std::string& name, std::uint64_t seed);
std::optional<AdversarialFlavor> preset_flavor(const std::string& name);

// ---- export ------------------------------------------------------------------------

void write_csv(std::ostream& out, const Dataset& data);
std::string format_double(double v);

nlohmann::json to_json(const LinearConcept& c);
nlohmann::json to_json(const StreamSpec& spec);
// Builds a spec from a generator description, e.g.
// {"kind": "abrupt", "n": 10000, "m": 10, "noise_std": 20, "seed": 1,
//  "switch_at": 5000, "target_ed": 327.23}. `path` prefixes SpecError fields.
StreamSpec generator_from_json(const nlohmann::json& doc, const std::string& path);

// {spec, drift_points, concepts}
nlohmann::json sidecar(const StreamSpec& spec);

}  // namespace olrwa
