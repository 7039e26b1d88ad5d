#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "olrwa/hyperplane.hpp"
#include "olrwa/linalg.hpp"

namespace olrwa {

enum class StepOutcome { Updated, SkippedCoincident, SkippedDegenerate, ParallelMidpointUsed };

const char* to_string(StepOutcome outcome);

struct StepTrace {
  Vector v_base;  // unit norm
  Vector v_inc;   // unit norm
  Vector v_avg;
  JointPoint p_int;
  Hyperplane inc_model;
  StepOutcome outcome = StepOutcome::Updated;
  bool inc_damped = false;
};

// Weighted-average online linear regression. Each mini-batch is fitted in
// isolation and merged into the running model by averaging unit normals and
// passing the result through the intersection of the two hyperplanes.
class OlrWa {
 public:
  explicit OlrWa(double alpha = 0.5);

  double alpha() const noexcept { return alpha_; }
  bool initialized() const noexcept { return initialized_; }
  std::size_t num_features() const noexcept { return base_.coeffs.size(); }
  std::size_t updates_applied() const noexcept { return updates_applied_; }
  const Hyperplane& base() const noexcept { return base_; }

  // Fits the base model. Throws StateError when already initialized.
  void init_base(const Matrix& x, std::span<const double> y);

  // One update. The returned trace is complete whatever the outcome; fields
  // past the point where the step stopped are left empty.
  StepTrace partial_fit(const Matrix& x, std::span<const double> y);

  Vector predict(const Matrix& x) const;

  // Replaces the base model. Used by the adaptive learner after re-weighting.
  void set_base(Hyperplane base);

  nlohmann::json to_json() const;
  static OlrWa from_json(const nlohmann::json& doc);

  static constexpr int kSchemaVersion = 1;

 private:
  double alpha_;
  Hyperplane base_;
  bool initialized_ = false;
  std::size_t updates_applied_ = 0;
};

// Checks shape and finiteness of a mini-batch against an expected width.
void validate_batch(const Matrix& x, std::span<const double> y, std::size_t num_features,
                    const char* where);

// Least-squares fit of y on [1, x].
Hyperplane fit_hyperplane(const Matrix& x, std::span<const double> y, bool* damped = nullptr);

}  // namespace olrwa
