#include "olrwa/metrics.hpp"

#include "olrwa/errors.hpp"

namespace olrwa {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* where) {
  if (a.size() != b.size()) throw ContractViolation(std::string(where) + ": length mismatch");
}

}  // namespace

std::optional<double> r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_length(y_true, y_pred, "r_squared");
  const std::size_t n = y_true.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y_true[i] - y_pred[i];
    const double d = y_true[i] - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (!(ss_tot > 0.0)) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_length(y_true, y_pred, "mse");
  if (y_true.empty()) throw ContractViolation("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    s += r * r;
  }
  return s / static_cast<double>(y_true.size());
}

MetricReport evaluate(std::span<const double> y_true, std::span<const double> y_pred) {
  MetricReport report;
  report.n = y_true.size();
  report.mse = mse(y_true, y_pred);
  if (auto r2 = r_squared(y_true, y_pred)) {
    report.r2 = *r2;
  } else {
    report.r2_undefined = true;
  }
  return report;
}

}  // namespace olrwa
