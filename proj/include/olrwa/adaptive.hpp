#pragma once

// Drift-aware wrapper around OlrWa: keeps a short window of per-batch KPIs,
// flags batches that fall outside a z-sigma band and, when it does, re-weights
// that step's normal average with an alpha picked from a scale map.

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "olrwa/olr_wa.hpp"

namespace olrwa {

enum class KpiSelector { R2, Mse };
enum class AdaptMode { TimeBased, ConfidenceBased };
enum class Severity { None, Incremental, Abrupt };

const char* to_string(KpiSelector kpi);
const char* to_string(AdaptMode mode);
const char* to_string(Severity severity);

bool higher_is_better(KpiSelector kpi);

struct KpiBag {
  double r2 = 0.0;
  double mse = 0.0;
  std::size_t batch_index = 0;
  bool r2_undefined = false;

  double get(KpiSelector kpi) const { return kpi == KpiSelector::R2 ? r2 : mse; }
};

inline constexpr std::size_t kWindowLowerBound = 11;
inline constexpr std::size_t kWindowUpperBound = 31;
inline constexpr double kWindowDelta = 0.05;

// clamp(round_half_up((n_recent / k) * delta), 11, 31)
std::size_t window_capacity(std::size_t n_recent, std::size_t k, double delta = kWindowDelta);

class KpiWindow {
 public:
  explicit KpiWindow(std::size_t capacity = kWindowLowerBound);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool full() const noexcept { return entries_.size() == capacity_; }
  const std::deque<KpiBag>& entries() const noexcept { return entries_; }

  // Appends, evicting the oldest entry when at capacity.
  void push(const KpiBag& bag);
  void pop_last();

 private:
  std::size_t capacity_;
  std::deque<KpiBag> entries_;
};

// Baseline band over every entry except the last one.
struct BandStats {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  double tau = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Empty while the window has not reached capacity (warm-up).
std::optional<BandStats> measure(const KpiWindow& window, double z, KpiSelector kpi);

bool detect_drift(double mu, double current, double tau, KpiSelector kpi);

// mu - current
double drift_magnitude(double mu, double current);

inline constexpr std::size_t kScaleRegions = 10;

struct ScaleMap {
  double mu = 0.0;
  double low = 0.0;
  double high = 0.0;
  KpiSelector kpi = KpiSelector::R2;
  AdaptMode mode = AdaptMode::TimeBased;
  // R + 1 KPI values from mu toward the limit (low for R2, high for MSE);
  // region j spans breakpoints[j]..breakpoints[j + 1].
  std::vector<double> breakpoints;
  // alpha for regions 0..R-1 followed by the overflow region.
  std::vector<double> alphas;

  double limit_distance() const noexcept;
  // Region index of a drift magnitude; R means beyond the band limit.
  std::size_t region(double dm) const;
};

ScaleMap define_scale_map(double mu, double low, double high, AdaptMode mode,
                          KpiSelector kpi = KpiSelector::R2);

double tune_alpha(const ScaleMap& map, double dm);

struct DriftAssessment {
  std::size_t batch_index = 0;
  KpiSelector kpi = KpiSelector::R2;
  double current = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
  double low = 0.0;
  double high = 0.0;
  double dm = 0.0;
  bool drift_detected = false;
  Severity severity = Severity::None;
  std::optional<double> alpha_applied;
};

DriftAssessment assess(const BandStats& band, double current, KpiSelector kpi);

KpiBag compute_kpis(const Hyperplane& model, const Matrix& x, std::span<const double> y,
                    std::size_t batch_index = 0);

struct OlrWaaConfig {
  double alpha = 0.5;
  double z = 2.0;
  KpiSelector kpi = KpiSelector::R2;
  AdaptMode mode = AdaptMode::TimeBased;
  std::size_t window_capacity = kWindowLowerBound;
};

struct AdaptiveStep {
  StepTrace trace;
  KpiBag kpis;  // as stored in the window
  std::optional<DriftAssessment> assessment;  // empty during warm-up or skipped steps
};

// Scalars kept between steps.
struct Footprint {
  std::size_t model_scalars = 0;   // M + 1 weights and alpha
  std::size_t window_scalars = 0;  // two KPIs per window entry
  std::size_t constant_scalars = 0;

  std::size_t total() const noexcept { return model_scalars + window_scalars + constant_scalars; }
};

class OlrWaa {
 public:
  explicit OlrWaa(const OlrWaaConfig& config = {});

  const OlrWaaConfig& config() const noexcept { return config_; }
  const OlrWa& inner() const noexcept { return inner_; }
  const KpiWindow& window() const noexcept { return window_; }
  const Hyperplane& base() const noexcept { return inner_.base(); }
  bool initialized() const noexcept { return inner_.initialized(); }

  void init_base(const Matrix& x, std::span<const double> y);
  AdaptiveStep partial_fit(const Matrix& x, std::span<const double> y);
  Vector predict(const Matrix& x) const { return inner_.predict(x); }

  Footprint footprint() const;

 private:
  OlrWaaConfig config_;
  OlrWa inner_;
  KpiWindow window_;
  std::size_t batches_seen_ = 0;
};

}  // namespace olrwa
