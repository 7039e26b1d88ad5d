#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace olrwa {

// 1 - SS_res / SS_tot. Empty when fewer than 2 samples or zero target
// variance. Throws ContractViolation on length mismatch.
std::optional<double> r_squared(std::span<const double> y_true, std::span<const double> y_pred);

double mse(std::span<const double> y_true, std::span<const double> y_pred);

struct MetricReport {
  double r2 = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
  bool r2_undefined = false;  // r2 was substituted with 0
};

MetricReport evaluate(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace olrwa
