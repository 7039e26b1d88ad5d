#include "olrwa/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "olrwa/errors.hpp"
#include "olrwa/metrics.hpp"

namespace olrwa {

const char* to_string(KpiSelector kpi) { return kpi == KpiSelector::R2 ? "r2" : "mse"; }

const char* to_string(AdaptMode mode) {
  return mode == AdaptMode::TimeBased ? "time_based" : "confidence_based";
}

const char* to_string(Severity severity) {
  switch (severity) {
    case Severity::None: return "none";
    case Severity::Incremental: return "incremental";
    case Severity::Abrupt: return "abrupt";
  }
  return "unknown";
}

bool higher_is_better(KpiSelector kpi) { return kpi == KpiSelector::R2; }

std::size_t window_capacity(std::size_t n_recent, std::size_t k, double delta) {
  if (k == 0 || n_recent < k) throw ContractViolation("window_capacity: need n_recent >= k >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw ContractViolation("window_capacity: delta must be in (0, 1]");
  const double raw = static_cast<double>(n_recent) / static_cast<double>(k) * delta;
  const double rounded = std::floor(raw + 0.5);
  return std::clamp(static_cast<std::size_t>(rounded), kWindowLowerBound, kWindowUpperBound);
}

KpiWindow::KpiWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity < kWindowLowerBound || capacity > kWindowUpperBound) {
    throw ContractViolation("KpiWindow: capacity " + std::to_string(capacity) + " outside [11, 31]");
  }
}

void KpiWindow::push(const KpiBag& bag) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(bag);
}

void KpiWindow::pop_last() {
  if (entries_.empty()) throw StateError("KpiWindow::pop_last: window is empty");
  entries_.pop_back();
}

std::optional<BandStats> measure(const KpiWindow& window, double z, KpiSelector kpi) {
  if (!window.full()) return std::nullopt;
  const auto& entries = window.entries();
  const std::size_t n = entries.size() - 1;
  BandStats band;
  for (std::size_t i = 0; i < n; ++i) band.mu += entries[i].get(kpi);
  band.mu /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = entries[i].get(kpi) - band.mu;
    var += d * d;
  }
  band.sigma = std::sqrt(var / static_cast<double>(n));
  // An infinite z disables detection; keep 0 * inf from producing NaN.
  band.tau = std::isinf(z) ? z : z * band.sigma;
  band.low = band.mu - band.tau;
  band.high = band.mu + band.tau;
  return band;
}

bool detect_drift(double mu, double current, double tau, KpiSelector kpi) {
  return higher_is_better(kpi) ? current < mu - tau : current > mu + tau;
}

double drift_magnitude(double mu, double current) { return mu - current; }

namespace {

// Positive when the KPI got worse.
double degradation(double dm, KpiSelector kpi) { return higher_is_better(kpi) ? dm : -dm; }

}  // namespace

double ScaleMap::limit_distance() const noexcept {
  return higher_is_better(kpi) ? mu - low : high - mu;
}

std::size_t ScaleMap::region(double dm) const {
  const double deg = degradation(dm, kpi);
  const double limit = limit_distance();
  if (!(limit > 0.0)) return deg > 0.0 ? kScaleRegions : 0;
  if (deg > limit) return kScaleRegions;
  if (deg <= 0.0) return 0;
  const double width = limit / static_cast<double>(kScaleRegions);
  const auto j = static_cast<std::size_t>(std::floor(deg / width + 1e-9));
  return std::min(j, kScaleRegions - 1);
}

ScaleMap define_scale_map(double mu, double low, double high, AdaptMode mode, KpiSelector kpi) {
  if (!(low <= mu && mu <= high)) throw ContractViolation("define_scale_map: need low <= mu <= high");
  ScaleMap map;
  map.mu = mu;
  map.low = low;
  map.high = high;
  map.kpi = kpi;
  map.mode = mode;
  const double limit = map.limit_distance();
  const double dir = higher_is_better(kpi) ? -1.0 : 1.0;
  const double r = static_cast<double>(kScaleRegions);
  for (std::size_t j = 0; j <= kScaleRegions; ++j) {
    map.breakpoints.push_back(mu + dir * limit * static_cast<double>(j) / r);
  }
  for (std::size_t j = 0; j <= kScaleRegions; ++j) {
    const double frac = static_cast<double>(j) / r;
    if (mode == AdaptMode::TimeBased) {
      map.alphas.push_back(j == kScaleRegions ? 1.0 : 0.5 + frac * 0.5);
    } else {
      map.alphas.push_back(j == kScaleRegions ? 0.005 : 0.5 - frac * (0.5 - 0.005));
    }
  }
  return map;
}

double tune_alpha(const ScaleMap& map, double dm) { return map.alphas.at(map.region(dm)); }

DriftAssessment assess(const BandStats& band, double current, KpiSelector kpi) {
  DriftAssessment a;
  a.kpi = kpi;
  a.current = current;
  a.mu = band.mu;
  a.sigma = band.sigma;
  a.tau = band.tau;
  a.low = band.low;
  a.high = band.high;
  a.dm = drift_magnitude(band.mu, current);
  a.drift_detected = detect_drift(band.mu, current, band.tau, kpi);
  if (a.drift_detected) {
    a.severity = Severity::Abrupt;
  } else if (degradation(a.dm, kpi) > 0.0) {
    a.severity = Severity::Incremental;
  }
  return a;
}

KpiBag compute_kpis(const Hyperplane& model, const Matrix& x, std::span<const double> y,
                    std::size_t batch_index) {
  Vector pred(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) pred[r] = model.predict(x.row(r));
  const MetricReport report = evaluate(y, pred);
  return {report.r2, report.mse, batch_index, report.r2_undefined};
}

OlrWaa::OlrWaa(const OlrWaaConfig& config)
    : config_(config), inner_(config.alpha), window_(config.window_capacity) {
  if (!(config.z > 0.0)) throw ContractViolation("OlrWaa: z must be positive");
}

void OlrWaa::init_base(const Matrix& x, std::span<const double> y) { inner_.init_base(x, y); }

AdaptiveStep OlrWaa::partial_fit(const Matrix& x, std::span<const double> y) {
  AdaptiveStep step;
  step.trace = inner_.partial_fit(x, y);
  const std::size_t index = batches_seen_++;
  step.kpis = compute_kpis(inner_.base(), x, y, index);
  window_.push(step.kpis);

  const bool skipped = step.trace.outcome == StepOutcome::SkippedCoincident ||
                       step.trace.outcome == StepOutcome::SkippedDegenerate;
  if (skipped) return step;

  const auto band = measure(window_, config_.z, config_.kpi);
  if (!band) return step;

  DriftAssessment a = assess(*band, step.kpis.get(config_.kpi), config_.kpi);
  a.batch_index = index;
  if (a.drift_detected) {
    window_.pop_last();
    const ScaleMap map = define_scale_map(band->mu, band->low, band->high, config_.mode, config_.kpi);
    const double alpha = tune_alpha(map, a.dm);
    const Vector v_avg = ewma_combine(step.trace.v_base, step.trace.v_inc, alpha);
    try {
      inner_.set_base(from_normal_and_point(v_avg, step.trace.p_int));
      step.trace.v_avg = v_avg;
      a.alpha_applied = alpha;
    } catch (const VerticalHyperplane&) {
      // Keep the plain step's model.
    }
    step.kpis = compute_kpis(inner_.base(), x, y, index);
    window_.push(step.kpis);
  }
  step.assessment = a;
  return step;
}

Footprint OlrWaa::footprint() const {
  Footprint f;
  f.model_scalars = inner_.num_features() + 2;
  f.window_scalars = 2 * window_.size();
  // z, kpi selector, mode, window capacity, batch counter, updates counter.
  f.constant_scalars = 6;
  return f;
}

}  // namespace olrwa
