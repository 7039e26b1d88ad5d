#include "olrwa/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "olrwa/errors.hpp"

namespace olrwa {

namespace {

// w . (1, x)
double predict_augmented(const Vector& w, std::span<const double> x) {
  double s = w[0];
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i + 1] * x[i];
  return s;
}

void require_width(const Vector& w, std::span<const double> x, const char* where) {
  if (w.size() != x.size() + 1) {
    throw ContractViolation(std::string(where) + ": weight/feature length mismatch");
  }
}

void check_finite(const Vector& w, const std::string& who) {
  if (!all_finite(w)) throw DivergenceError(who + ": weights became non-finite");
}

Hyperplane to_hyperplane(const Vector& w) {
  Hyperplane h;
  h.intercept = w.empty() ? 0.0 : w[0];
  if (!w.empty()) h.coeffs.assign(w.begin() + 1, w.end());
  return h;
}

void require_init(std::size_t num_features, const std::string& who) {
  if (num_features == 0) throw StateError(who + ": init has not been called");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

// ---- update rules ----------------------------------------------------------

void sgd_update(Vector& w, std::span<const double> x, double y, double eta) {
  require_width(w, x, "sgd_update");
  const double err = predict_augmented(w, x) - y;
  w[0] -= eta * err;
  for (std::size_t i = 0; i < x.size(); ++i) w[i + 1] -= eta * (err * x[i]);
}

void mbgd_update(Vector& w, const Matrix& x, std::span<const double> y, double eta) {
  if (x.rows() == 0 || x.rows() != y.size()) throw ContractViolation("mbgd_update: bad batch shape");
  if (w.size() != x.cols() + 1) throw ContractViolation("mbgd_update: weight/feature length mismatch");
  Vector grad(w.size(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const double err = predict_augmented(w, row) - y[r];
    grad[0] += err;
    for (std::size_t i = 0; i < row.size(); ++i) grad[i + 1] += err * row[i];
  }
  const double scale = eta / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * grad[i];
}

void ridge_update(Vector& w, std::span<const double> x, double y, double eta, double lambda_reg) {
  require_width(w, x, "ridge_update");
  const double err = predict_augmented(w, x) - y;
  w[0] -= eta * err;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double g = err * x[i];
    if (lambda_reg != 0.0) g += lambda_reg * w[i + 1];
    w[i + 1] -= eta * g;
  }
}

void lasso_update(Vector& w, std::span<const double> x, double y, double eta, double lambda_reg) {
  require_width(w, x, "lasso_update");
  const double err = predict_augmented(w, x) - y;
  w[0] -= eta * err;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double g = err * x[i];
    if (lambda_reg != 0.0) g += lambda_reg * sign(w[i + 1]);
    w[i + 1] -= eta * g;
  }
}

PaVariant parse_pa_variant(const std::string& name) {
  if (name == "PA") return PaVariant::PA;
  if (name == "PA-I") return PaVariant::PA_I;
  if (name == "PA-II" || name == "PA-III") return PaVariant::PA_II;
  throw SpecError("pa_variant", "unknown passive-aggressive variant '" + name + "'");
}

const char* to_string(PaVariant variant) {
  switch (variant) {
    case PaVariant::PA: return "PA";
    case PaVariant::PA_I: return "PA-I";
    case PaVariant::PA_II: return "PA-II";
  }
  return "PA";
}

void pa_update(Vector& w, std::span<const double> x, double y, double c, double epsilon,
               PaVariant variant) {
  require_width(w, x, "pa_update");
  const double residual = y - predict_augmented(w, x);
  const double loss = std::max(0.0, std::abs(residual) - epsilon);
  if (loss == 0.0) return;
  const double sq_norm = 1.0 + dot(x, x);
  double tau = 0.0;
  switch (variant) {
    case PaVariant::PA: tau = loss / sq_norm; break;
    case PaVariant::PA_I: tau = std::min(c, loss / sq_norm); break;
    case PaVariant::PA_II: tau = loss / (sq_norm + 1.0 / (2.0 * c)); break;
  }
  const double step = sign(residual) * tau;
  w[0] += step;
  for (std::size_t i = 0; i < x.size(); ++i) w[i + 1] += step * x[i];
}

RlsPrior parse_rls_prior(const std::string& name) {
  if (name == "scaled") return RlsPrior::Scaled;
  if (name == "inverse") return RlsPrior::Inverse;
  throw SpecError("rls_prior", "expected 'scaled' or 'inverse', got '" + name + "'");
}

const char* to_string(RlsPrior prior) {
  return prior == RlsPrior::Scaled ? "scaled" : "inverse";
}

RlsState RlsState::make(std::size_t num_features, double delta, RlsPrior prior) {
  if (!(delta > 0.0)) throw ContractViolation("RLS: delta must be positive");
  const std::size_t d = num_features + 1;
  const double diag = prior == RlsPrior::Scaled ? delta : 1.0 / delta;
  RlsState s;
  s.w.assign(d, 0.0);
  s.p = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) s.p(i, i) = diag;
  return s;
}

void rls_update(RlsState& state, std::span<const double> x, double y, double lambda) {
  require_width(state.w, x, "rls_update");
  const std::size_t d = state.w.size();
  Vector xt(d);
  xt[0] = 1.0;
  std::copy(x.begin(), x.end(), xt.begin() + 1);

  Matrix& p = state.p;
  Vector px(d, 0.0);  // P x~
  for (std::size_t i = 0; i < d; ++i) px[i] = dot(p.row(i), xt);
  const double denom = lambda + dot(xt, px);
  Vector g(d);
  for (std::size_t i = 0; i < d; ++i) g[i] = px[i] / denom;

  const double err = y - dot(state.w, xt);
  for (std::size_t i = 0; i < d; ++i) state.w[i] += g[i] * err;

  // P <- (P - g (x~^T P)) / lambda; x~^T P = (P x~)^T for symmetric P.
  double asym = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) p(i, j) = (p(i, j) - g[i] * px[j]) / lambda;
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      asym = std::max(asym, std::abs(p(i, j) - p(j, i)));
      const double m = 0.5 * (p(i, j) + p(j, i));
      p(i, j) = m;
      p(j, i) = m;
    }
  }
  if (asym > 1e-6) state.asymmetry_warning = true;
}

// ---- online interface -------------------------------------------------------

Vector OnlineRegressor::predict(const Matrix& x) const {
  const Hyperplane h = weights();
  if (x.cols() != h.coeffs.size()) {
    throw ContractViolation(name() + "::predict: expected " + std::to_string(h.coeffs.size()) +
                            " features, got " + std::to_string(x.cols()));
  }
  Vector out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = h.intercept + dot(h.coeffs, x.row(r));
  return out;
}

nlohmann::json OnlineRegressor::snapshot() const {
  const Hyperplane h = weights();
  return {
      {"schema_version", OlrWa::kSchemaVersion},
      {"algorithm", name()},
      {"hyperparameters", hyperparameters()},
      {"num_features", h.coeffs.size()},
      {"intercept", h.intercept},
      {"coeffs", h.coeffs},
  };
}

const char* to_string(TrainingMode mode) {
  return mode == TrainingMode::Replay ? "replay" : "strict_streaming";
}

namespace {

nlohmann::json gradient_json(const GradientConfig& c) {
  return {{"eta", c.eta}, {"epochs", c.epochs}, {"mode", to_string(c.mode)}};
}

void validate_gradient(const GradientConfig& c) {
  if (!(c.eta > 0.0)) throw ContractViolation("gradient learner: eta must be positive");
  if (c.epochs == 0) throw ContractViolation("gradient learner: epochs must be >= 1");
}

}  // namespace

PerSampleGradient::PerSampleGradient(const GradientConfig& config)
    : config_(config), rng_(config.seed, 0x5eed) {
  validate_gradient(config);
}

void PerSampleGradient::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation(name() + "::init: need at least one feature");
  num_features_ = num_features;
  w_.assign(num_features + 1, 0.0);
  buffer_x_ = Matrix(0, num_features);
  buffer_y_.clear();
  rng_ = Rng(config_.seed, 0x5eed);
}

void PerSampleGradient::observe(const Matrix& x, std::span<const double> y) {
  require_init(num_features_, name());
  validate_batch(x, y, num_features_, "observe");
  if (config_.mode == TrainingMode::StrictStreaming) {
    for (std::size_t e = 0; e < config_.epochs; ++e) {
      for (std::size_t r = 0; r < x.rows(); ++r) step(x.row(r), y[r]);
    }
  } else {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      buffer_x_.append_row(x.row(r));
      buffer_y_.push_back(y[r]);
    }
    const std::size_t steps = config_.epochs * x.rows();
    for (std::size_t s = 0; s < steps; ++s) {
      const auto i = static_cast<std::size_t>(rng_.below(buffer_y_.size()));
      step(buffer_x_.row(i), buffer_y_[i]);
    }
  }
  check_finite(w_, name());
}

Hyperplane PerSampleGradient::weights() const { return to_hyperplane(w_); }

std::size_t PerSampleGradient::state_scalars() const {
  return w_.size() + buffer_y_.size() * (num_features_ + 1);
}

nlohmann::json PerSampleGradient::hyperparameters() const { return gradient_json(config_); }

OnlineRidge::OnlineRidge(const GradientConfig& config, double lambda_reg)
    : PerSampleGradient(config), lambda_reg_(lambda_reg) {
  if (!(lambda_reg >= 0.0)) throw ContractViolation("ORR: lambda_reg must be >= 0");
}

nlohmann::json OnlineRidge::hyperparameters() const {
  auto j = gradient_json(config_);
  j["lambda_reg"] = lambda_reg_;
  return j;
}

OnlineLasso::OnlineLasso(const GradientConfig& config, double lambda_reg)
    : PerSampleGradient(config), lambda_reg_(lambda_reg) {
  if (!(lambda_reg >= 0.0)) throw ContractViolation("OLR: lambda_reg must be >= 0");
}

nlohmann::json OnlineLasso::hyperparameters() const {
  auto j = gradient_json(config_);
  j["lambda_reg"] = lambda_reg_;
  return j;
}

Mbgd::Mbgd(const GradientConfig& config) : config_(config), rng_(config.seed, 0xb47c) {
  validate_gradient(config);
}

void Mbgd::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("MBGD::init: need at least one feature");
  num_features_ = num_features;
  w_.assign(num_features + 1, 0.0);
  buffer_x_ = Matrix(0, num_features);
  buffer_y_.clear();
  rng_ = Rng(config_.seed, 0xb47c);
}

void Mbgd::observe(const Matrix& x, std::span<const double> y) {
  require_init(num_features_, name());
  validate_batch(x, y, num_features_, "MBGD::observe");
  if (config_.mode == TrainingMode::StrictStreaming) {
    for (std::size_t e = 0; e < config_.epochs; ++e) mbgd_update(w_, x, y, config_.eta);
  } else {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      buffer_x_.append_row(x.row(r));
      buffer_y_.push_back(y[r]);
    }
    std::vector<std::size_t> idx(x.rows());
    Vector by(x.rows());
    for (std::size_t e = 0; e < config_.epochs; ++e) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        idx[k] = static_cast<std::size_t>(rng_.below(buffer_y_.size()));
        by[k] = buffer_y_[idx[k]];
      }
      mbgd_update(w_, buffer_x_.select_rows(idx), by, config_.eta);
    }
  }
  check_finite(w_, name());
}

Hyperplane Mbgd::weights() const { return to_hyperplane(w_); }

std::size_t Mbgd::state_scalars() const {
  return w_.size() + buffer_y_.size() * (num_features_ + 1);
}

nlohmann::json Mbgd::hyperparameters() const { return gradient_json(config_); }

Lms::Lms(double eta) : eta_(eta) {
  if (!(eta > 0.0)) throw ContractViolation("LMS: eta must be positive");
}

void Lms::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("LMS::init: need at least one feature");
  w_.assign(num_features + 1, 0.0);
}

void Lms::observe(const Matrix& x, std::span<const double> y) {
  require_init(w_.size(), name());
  validate_batch(x, y, w_.size() - 1, "LMS::observe");
  for (std::size_t r = 0; r < x.rows(); ++r) sgd_update(w_, x.row(r), y[r], eta_);
  check_finite(w_, name());
}

Hyperplane Lms::weights() const { return to_hyperplane(w_); }

nlohmann::json Lms::hyperparameters() const { return {{"eta", eta_}}; }

Rls::Rls(double lambda, double delta, RlsPrior prior)
    : lambda_(lambda), delta_(delta), prior_(prior) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ContractViolation("RLS: lambda must be in (0, 1]");
  if (!(delta > 0.0)) throw ContractViolation("RLS: delta must be positive");
}

void Rls::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("RLS::init: need at least one feature");
  state_ = RlsState::make(num_features, delta_, prior_);
}

void Rls::observe(const Matrix& x, std::span<const double> y) {
  require_init(state_.w.size(), name());
  validate_batch(x, y, state_.w.size() - 1, "RLS::observe");
  for (std::size_t r = 0; r < x.rows(); ++r) rls_update(state_, x.row(r), y[r], lambda_);
  check_finite(state_.w, name());
  if (!all_finite(state_.p.data())) throw DivergenceError("RLS: covariance became non-finite");
}

Hyperplane Rls::weights() const { return to_hyperplane(state_.w); }

std::size_t Rls::state_scalars() const { return state_.w.size() + state_.p.data().size(); }

nlohmann::json Rls::hyperparameters() const {
  return {{"lambda", lambda_}, {"delta", delta_}, {"prior", to_string(prior_)}};
}

PassiveAggressive::PassiveAggressive(double c, double epsilon, PaVariant variant)
    : c_(c), epsilon_(epsilon), variant_(variant) {
  if (!(c > 0.0)) throw ContractViolation("PA: C must be positive");
  if (!(epsilon >= 0.0)) throw ContractViolation("PA: epsilon must be >= 0");
}

void PassiveAggressive::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("PA::init: need at least one feature");
  w_.assign(num_features + 1, 0.0);
}

void PassiveAggressive::observe(const Matrix& x, std::span<const double> y) {
  require_init(w_.size(), name());
  validate_batch(x, y, w_.size() - 1, "PA::observe");
  for (std::size_t r = 0; r < x.rows(); ++r) pa_update(w_, x.row(r), y[r], c_, epsilon_, variant_);
  check_finite(w_, name());
}

Hyperplane PassiveAggressive::weights() const { return to_hyperplane(w_); }

nlohmann::json PassiveAggressive::hyperparameters() const {
  return {{"C", c_}, {"epsilon", epsilon_}, {"variant", to_string(variant_)}};
}

// ---- adapters ---------------------------------------------------------------

OlrWaRegressor::OlrWaRegressor(double alpha) : alpha_(alpha), model_(alpha) {}

void OlrWaRegressor::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("OLR-WA::init: need at least one feature");
  num_features_ = num_features;
  model_ = OlrWa(alpha_);
  last_trace_.reset();
}

void OlrWaRegressor::observe(const Matrix& x, std::span<const double> y) {
  require_init(num_features_, name());
  validate_batch(x, y, num_features_, "OLR-WA::observe");
  if (!model_.initialized()) {
    model_.init_base(x, y);
    last_trace_.reset();
  } else {
    last_trace_ = model_.partial_fit(x, y);
  }
}

Vector OlrWaRegressor::predict(const Matrix& x) const {
  if (!model_.initialized()) return OnlineRegressor::predict(x);
  return model_.predict(x);
}

Hyperplane OlrWaRegressor::weights() const {
  if (model_.initialized()) return model_.base();
  return Hyperplane{0.0, Vector(num_features_, 0.0)};
}

std::size_t OlrWaRegressor::state_scalars() const { return num_features_ + 2; }

nlohmann::json OlrWaRegressor::hyperparameters() const { return {{"alpha", alpha_}}; }

OlrWaaRegressor::OlrWaaRegressor(const OlrWaaConfig& config) : config_(config), model_(config) {}

void OlrWaaRegressor::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("OLR-WAA::init: need at least one feature");
  num_features_ = num_features;
  model_ = OlrWaa(config_);
  last_step_.reset();
}

void OlrWaaRegressor::observe(const Matrix& x, std::span<const double> y) {
  require_init(num_features_, name());
  validate_batch(x, y, num_features_, "OLR-WAA::observe");
  if (!model_.initialized()) {
    model_.init_base(x, y);
    last_step_.reset();
  } else {
    last_step_ = model_.partial_fit(x, y);
  }
}

Vector OlrWaaRegressor::predict(const Matrix& x) const {
  if (!model_.initialized()) return OnlineRegressor::predict(x);
  return model_.predict(x);
}

Hyperplane OlrWaaRegressor::weights() const {
  if (model_.initialized()) return model_.base();
  return Hyperplane{0.0, Vector(num_features_, 0.0)};
}

std::size_t OlrWaaRegressor::state_scalars() const { return model_.footprint().total(); }

nlohmann::json OlrWaaRegressor::hyperparameters() const {
  return {{"alpha", config_.alpha},
          {"z", config_.z},
          {"kpi", to_string(config_.kpi)},
          {"mode", to_string(config_.mode)},
          {"window_capacity", config_.window_capacity}};
}

void BatchRegressor::init(std::size_t num_features) {
  if (num_features == 0) throw ContractViolation("Batch::init: need at least one feature");
  gram_ = Matrix(num_features + 1, num_features + 1);
  rhs_.assign(num_features + 1, 0.0);
  rows_seen_ = 0;
  cached_.reset();
}

void BatchRegressor::observe(const Matrix& x, std::span<const double> y) {
  require_init(rhs_.size(), name());
  validate_batch(x, y, rhs_.size() - 1, "Batch::observe");
  const std::size_t d = rhs_.size();
  Vector xt(d);
  xt[0] = 1.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), xt.begin() + 1);
    for (std::size_t i = 0; i < d; ++i) {
      rhs_[i] += xt[i] * y[r];
      for (std::size_t j = 0; j <= i; ++j) gram_(i, j) += xt[i] * xt[j];
    }
  }
  rows_seen_ += x.rows();
  cached_.reset();
}

Hyperplane BatchRegressor::weights() const {
  if (rhs_.empty()) return {};
  if (rows_seen_ == 0) return Hyperplane{0.0, Vector(rhs_.size() - 1, 0.0)};
  if (!cached_) {
    Matrix g = gram_;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
    cached_ = to_hyperplane(solve_normal_equations(g, rhs_).weights);
  }
  return *cached_;
}

std::size_t BatchRegressor::state_scalars() const { return gram_.data().size() + rhs_.size(); }

// ---- construction -----------------------------------------------------------

const std::vector<std::string>& algorithm_kinds() {
  static const std::vector<std::string> kinds = {"batch", "olr_wa", "olr_waa", "sgd", "mbgd",
                                                 "lms",   "rls",    "ridge",   "lasso", "pa"};
  return kinds;
}

std::string AlgorithmConfig::display_name() const {
  if (!label.empty()) return label;
  if (kind == "batch") return "Batch";
  if (kind == "olr_wa") return "OLR-WA";
  if (kind == "olr_waa") return "OLR-WAA";
  if (kind == "sgd") return "SGD";
  if (kind == "mbgd") return "MBGD";
  if (kind == "lms") return "LMS";
  if (kind == "rls") return "RLS";
  if (kind == "ridge") return "ORR";
  if (kind == "lasso") return "OLR";
  if (kind == "pa") return to_string(pa_variant);
  return kind;
}

std::unique_ptr<OnlineRegressor> make_regressor(const AlgorithmConfig& c, std::uint64_t seed,
                                                std::size_t window_capacity) {
  const GradientConfig g{c.eta, c.epochs, c.mode, seed};
  if (c.kind == "batch") return std::make_unique<BatchRegressor>();
  if (c.kind == "olr_wa") return std::make_unique<OlrWaRegressor>(c.alpha);
  if (c.kind == "olr_waa") {
    OlrWaaConfig cfg;
    cfg.alpha = c.alpha;
    cfg.z = c.z;
    cfg.kpi = c.kpi;
    cfg.mode = c.adapt_mode;
    cfg.window_capacity = c.window_capacity ? c.window_capacity : window_capacity;
    return std::make_unique<OlrWaaRegressor>(cfg);
  }
  if (c.kind == "sgd") return std::make_unique<Sgd>(g);
  if (c.kind == "mbgd") return std::make_unique<Mbgd>(g);
  if (c.kind == "lms") return std::make_unique<Lms>(c.eta);
  if (c.kind == "rls") return std::make_unique<Rls>(c.lambda_rls, c.delta_rls, c.rls_prior);
  if (c.kind == "ridge") return std::make_unique<OnlineRidge>(g, c.lambda_reg);
  if (c.kind == "lasso") return std::make_unique<OnlineLasso>(g, c.lambda_reg);
  if (c.kind == "pa") return std::make_unique<PassiveAggressive>(c.c, c.epsilon, c.pa_variant);
  throw SpecError("algorithms.kind", "unknown algorithm '" + c.kind + "'");
}

}  // namespace olrwa
