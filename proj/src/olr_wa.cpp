#include "olrwa/olr_wa.hpp"

#include <json.hpp>

#include "olrwa/errors.hpp"

namespace olrwa {

const char* to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::Updated: return "updated";
    case StepOutcome::SkippedCoincident: return "skipped_coincident";
    case StepOutcome::SkippedDegenerate: return "skipped_degenerate";
    case StepOutcome::ParallelMidpointUsed: return "parallel_midpoint_used";
  }
  return "unknown";
}

void validate_batch(const Matrix& x, std::span<const double> y, std::size_t num_features,
                    const char* where) {
  if (x.rows() == 0) throw ContractViolation(std::string(where) + ": empty mini-batch");
  if (x.cols() != num_features) {
    throw ContractViolation(std::string(where) + ": expected " + std::to_string(num_features) +
                            " features, got " + std::to_string(x.cols()));
  }
  if (y.size() != x.rows()) {
    throw ContractViolation(std::string(where) + ": " + std::to_string(x.rows()) + " rows but " +
                            std::to_string(y.size()) + " targets");
  }
  if (!all_finite(x.data()) || !all_finite(y)) {
    throw InputError(std::string(where) + ": non-finite value in mini-batch");
  }
}

Hyperplane fit_hyperplane(const Matrix& x, std::span<const double> y, bool* damped) {
  LeastSquaresSolution sol = solve_least_squares(with_bias_column(x), y);
  if (damped) *damped = sol.damped;
  Hyperplane h;
  h.intercept = sol.weights[0];
  h.coeffs.assign(sol.weights.begin() + 1, sol.weights.end());
  return h;
}

OlrWa::OlrWa(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ContractViolation("OlrWa: alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

void OlrWa::init_base(const Matrix& x, std::span<const double> y) {
  if (initialized_) throw StateError("OlrWa::init_base: already initialized");
  if (x.cols() == 0) throw ContractViolation("OlrWa::init_base: need at least one feature");
  validate_batch(x, y, x.cols(), "OlrWa::init_base");
  base_ = fit_hyperplane(x, y);
  initialized_ = true;
}

StepTrace OlrWa::partial_fit(const Matrix& x, std::span<const double> y) {
  if (!initialized_) throw StateError("OlrWa::partial_fit: init_base has not been called");
  validate_batch(x, y, num_features(), "OlrWa::partial_fit");

  StepTrace trace;
  trace.inc_model = fit_hyperplane(x, y, &trace.inc_damped);
  trace.v_base = normalize(norm_vector(base_));
  trace.v_inc = normalize(norm_vector(trace.inc_model));

  if (coincide(base_, trace.inc_model)) {
    trace.outcome = StepOutcome::SkippedCoincident;
    return trace;
  }

  IntersectionOutcome where = intersect(base_, trace.inc_model);
  if (auto* p = std::get_if<JointPoint>(&where)) {
    trace.p_int = std::move(*p);
    trace.outcome = StepOutcome::Updated;
  } else {
    trace.p_int = weighted_midpoint(base_, trace.inc_model, alpha_);
    trace.outcome = StepOutcome::ParallelMidpointUsed;
  }

  trace.v_avg = ewma_combine(trace.v_base, trace.v_inc, alpha_);
  try {
    base_ = from_normal_and_point(trace.v_avg, trace.p_int);
  } catch (const VerticalHyperplane&) {
    trace.outcome = StepOutcome::SkippedDegenerate;
    return trace;
  }
  ++updates_applied_;
  return trace;
}

Vector OlrWa::predict(const Matrix& x) const {
  if (!initialized_) throw StateError("OlrWa::predict: model not initialized");
  if (x.cols() != num_features()) {
    throw ContractViolation("OlrWa::predict: expected " + std::to_string(num_features()) +
                            " features, got " + std::to_string(x.cols()));
  }
  Vector out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = base_.intercept + dot(base_.coeffs, x.row(r));
  return out;
}

void OlrWa::set_base(Hyperplane base) {
  if (!initialized_) throw StateError("OlrWa::set_base: model not initialized");
  if (base.coeffs.size() != base_.coeffs.size()) {
    throw ContractViolation("OlrWa::set_base: feature count mismatch");
  }
  base_ = std::move(base);
}

nlohmann::json OlrWa::to_json() const {
  if (!initialized_) throw StateError("OlrWa::to_json: model not initialized");
  return {
      {"schema_version", kSchemaVersion},
      {"num_features", num_features()},
      {"alpha", alpha_},
      {"intercept", base_.intercept},
      {"coeffs", base_.coeffs},
      {"updates_applied", updates_applied_},
  };
}

OlrWa OlrWa::from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw InputError("OlrWa::from_json: unsupported schema_version " + std::to_string(version));
    }
    OlrWa model(doc.at("alpha").get<double>());
    model.base_.intercept = doc.at("intercept").get<double>();
    model.base_.coeffs = doc.at("coeffs").get<Vector>();
    if (model.base_.coeffs.size() != doc.at("num_features").get<std::size_t>()) {
      throw InputError("OlrWa::from_json: num_features does not match coeffs");
    }
    model.updates_applied_ = doc.at("updates_applied").get<std::size_t>();
    model.initialized_ = true;
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("OlrWa::from_json: ") + e.what());
  }
}

}  // namespace olrwa
