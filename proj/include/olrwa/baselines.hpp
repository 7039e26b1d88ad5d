#pragma once

// Comparison learners behind a common online interface. Weight vectors are
// bias-first: w[0] is the intercept and w[1..M] the coefficients, and every
// update works on the augmented sample x~ = (1, x). Gradients follow the
// 1/2 (y_hat - y)^2 convention.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "olrwa/adaptive.hpp"
#include "olrwa/hyperplane.hpp"
#include "olrwa/linalg.hpp"
#include "olrwa/olr_wa.hpp"
#include "olrwa/rng.hpp"

namespace olrwa {

// ---- update rules ----------------------------------------------------------

void sgd_update(Vector& w, std::span<const double> x, double y, double eta);
void mbgd_update(Vector& w, const Matrix& x, std::span<const double> y, double eta);
void ridge_update(Vector& w, std::span<const double> x, double y, double eta, double lambda_reg);
void lasso_update(Vector& w, std::span<const double> x, double y, double eta, double lambda_reg);

enum class PaVariant { PA, PA_I, PA_II };

// Accepts "PA", "PA-I", "PA-II" and "PA-III" (an alias of PA-II).
PaVariant parse_pa_variant(const std::string& name);
const char* to_string(PaVariant variant);

void pa_update(Vector& w, std::span<const double> x, double y, double c, double epsilon,
               PaVariant variant);

// Initial covariance: Scaled gives P0 = delta I, Inverse gives P0 = I / delta.
// Scaled with a small delta starts close to the zero model and is slow to
// move; Inverse with a small delta is nearly batch least squares from the
// first rows.
enum class RlsPrior { Scaled, Inverse };

RlsPrior parse_rls_prior(const std::string& name);
const char* to_string(RlsPrior prior);

struct RlsState {
  Vector w;
  Matrix p;
  bool asymmetry_warning = false;  // P drifted from symmetry by more than 1e-6

  // P0 over M + 1 augmented dimensions.
  static RlsState make(std::size_t num_features, double delta, RlsPrior prior = RlsPrior::Scaled);
};

void rls_update(RlsState& state, std::span<const double> x, double y, double lambda);

// ---- online interface -------------------------------------------------------

class OnlineRegressor {
 public:
  virtual ~OnlineRegressor() = default;

  // Resets to zero weights over num_features inputs.
  virtual void init(std::size_t num_features) = 0;
  // Consumes one mini-batch. Throws DivergenceError on non-finite weights.
  virtual void observe(const Matrix& x, std::span<const double> y) = 0;
  virtual Vector predict(const Matrix& x) const;
  virtual Hyperplane weights() const = 0;
  // Scalars retained between observe calls.
  virtual std::size_t state_scalars() const = 0;
  virtual std::string name() const = 0;
  virtual nlohmann::json hyperparameters() const = 0;

  nlohmann::json snapshot() const;
};

enum class TrainingMode { StrictStreaming, Replay };

const char* to_string(TrainingMode mode);

struct GradientConfig {
  double eta = 0.01;
  std::size_t epochs = 2;
  TrainingMode mode = TrainingMode::Replay;
  std::uint64_t seed = 0;
};

// Shared machinery for the per-sample gradient learners (SGD, ridge, lasso).
class PerSampleGradient : public OnlineRegressor {
 public:
  explicit PerSampleGradient(const GradientConfig& config);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override;
  nlohmann::json hyperparameters() const override;

  std::size_t buffered_rows() const noexcept { return buffer_y_.size(); }

 protected:
  virtual void step(std::span<const double> x, double y) = 0;

  GradientConfig config_;
  Vector w_;
  std::size_t num_features_ = 0;

 private:
  Matrix buffer_x_;
  Vector buffer_y_;
  Rng rng_;
};

class Sgd : public PerSampleGradient {
 public:
  using PerSampleGradient::PerSampleGradient;
  std::string name() const override { return "SGD"; }

 protected:
  void step(std::span<const double> x, double y) override { sgd_update(w_, x, y, config_.eta); }
};

class OnlineRidge : public PerSampleGradient {
 public:
  OnlineRidge(const GradientConfig& config, double lambda_reg);
  std::string name() const override { return "ORR"; }
  nlohmann::json hyperparameters() const override;

 protected:
  void step(std::span<const double> x, double y) override {
    ridge_update(w_, x, y, config_.eta, lambda_reg_);
  }

 private:
  double lambda_reg_;
};

class OnlineLasso : public PerSampleGradient {
 public:
  OnlineLasso(const GradientConfig& config, double lambda_reg);
  std::string name() const override { return "OLR"; }
  nlohmann::json hyperparameters() const override;

 protected:
  void step(std::span<const double> x, double y) override {
    lasso_update(w_, x, y, config_.eta, lambda_reg_);
  }

 private:
  double lambda_reg_;
};

// Mini-batch gradient descent. StrictStreaming takes `epochs` full-batch
// steps on each incoming batch; Replay takes `epochs` steps on batches of the
// same size drawn uniformly from everything seen so far.
class Mbgd : public OnlineRegressor {
 public:
  explicit Mbgd(const GradientConfig& config);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override;
  std::string name() const override { return "MBGD"; }
  nlohmann::json hyperparameters() const override;

 private:
  GradientConfig config_;
  Vector w_;
  std::size_t num_features_ = 0;
  Matrix buffer_x_;
  Vector buffer_y_;
  Rng rng_;
};

// Least mean squares: the SGD rule, one pass, nothing retained.
class Lms : public OnlineRegressor {
 public:
  explicit Lms(double eta);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override { return w_.size(); }
  std::string name() const override { return "LMS"; }
  nlohmann::json hyperparameters() const override;

 private:
  double eta_;
  Vector w_;
};

class Rls : public OnlineRegressor {
 public:
  Rls(double lambda, double delta, RlsPrior prior = RlsPrior::Scaled);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override;
  std::string name() const override { return "RLS"; }
  nlohmann::json hyperparameters() const override;

  const RlsState& state() const noexcept { return state_; }

 private:
  double lambda_;
  double delta_;
  RlsPrior prior_;
  RlsState state_;
};

class PassiveAggressive : public OnlineRegressor {
 public:
  PassiveAggressive(double c, double epsilon, PaVariant variant);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override { return w_.size(); }
  std::string name() const override { return to_string(variant_); }
  nlohmann::json hyperparameters() const override;

 private:
  double c_;
  double epsilon_;
  PaVariant variant_;
  Vector w_;
};

// ---- adapters for the hyperplane learners and the batch reference -----------

// The first observed batch becomes the base model.
class OlrWaRegressor : public OnlineRegressor {
 public:
  explicit OlrWaRegressor(double alpha);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Vector predict(const Matrix& x) const override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override;
  std::string name() const override { return "OLR-WA"; }
  nlohmann::json hyperparameters() const override;

  const std::optional<StepTrace>& last_trace() const noexcept { return last_trace_; }

 private:
  double alpha_;
  std::size_t num_features_ = 0;
  OlrWa model_;
  std::optional<StepTrace> last_trace_;
};

class OlrWaaRegressor : public OnlineRegressor {
 public:
  explicit OlrWaaRegressor(const OlrWaaConfig& config);

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Vector predict(const Matrix& x) const override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override;
  std::string name() const override { return "OLR-WAA"; }
  nlohmann::json hyperparameters() const override;

  const std::optional<AdaptiveStep>& last_step() const noexcept { return last_step_; }
  const OlrWaa& model() const noexcept { return model_; }

 private:
  OlrWaaConfig config_;
  std::size_t num_features_ = 0;
  OlrWaa model_;
  std::optional<AdaptiveStep> last_step_;
};

// Least squares on everything seen so far, via accumulated normal equations.
class BatchRegressor : public OnlineRegressor {
 public:
  BatchRegressor() = default;

  void init(std::size_t num_features) override;
  void observe(const Matrix& x, std::span<const double> y) override;
  Hyperplane weights() const override;
  std::size_t state_scalars() const override;
  std::string name() const override { return "Batch"; }
  nlohmann::json hyperparameters() const override { return nlohmann::json::object(); }

 private:
  Matrix gram_;
  Vector rhs_;
  std::size_t rows_seen_ = 0;
  mutable std::optional<Hyperplane> cached_;
};

// ---- construction from configuration ----------------------------------------

struct AlgorithmConfig {
  std::string kind;   // batch, olr_wa, olr_waa, sgd, mbgd, lms, rls, ridge, lasso, pa
  std::string label;  // display name; defaults from kind
  double eta = 0.01;
  std::size_t epochs = 2;
  TrainingMode mode = TrainingMode::Replay;
  double lambda_rls = 0.99;
  double delta_rls = 0.01;
  RlsPrior rls_prior = RlsPrior::Scaled;
  double lambda_reg = 0.1;
  double c = 0.01;
  double epsilon = 0.01;
  PaVariant pa_variant = PaVariant::PA_II;
  double alpha = 0.5;
  double z = 2.0;
  KpiSelector kpi = KpiSelector::R2;
  AdaptMode adapt_mode = AdaptMode::TimeBased;
  std::size_t window_capacity = 0;  // 0: derive from the stream shape

  std::string display_name() const;
};

// Known kinds, in a stable order.
const std::vector<std::string>& algorithm_kinds();

// Throws SpecError for unknown kinds. `window_capacity` is used by OLR-WAA
// when the config leaves it at 0.
std::unique_ptr<OnlineRegressor> make_regressor(const AlgorithmConfig& config, std::uint64_t seed,
                                                std::size_t window_capacity = kWindowLowerBound);

}  // namespace olrwa
