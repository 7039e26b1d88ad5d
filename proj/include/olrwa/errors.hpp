#pragma once

#include <stdexcept>
#include <string>

namespace olrwa {

// Caller broke a documented precondition (dimension mismatch, bad argument).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Data handed to the library is unusable (NaN/inf, malformed file contents).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A 2-row system whose rows are linearly dependent.
class DegenerateSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVector : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normal vector whose target component vanishes: not a function of x.
class VerticalHyperplane : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong lifecycle state (e.g. init twice).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A learner produced non-finite weights.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid generator or experiment specification. `field` names the offending
// path, e.g. "datasets[0].generator.noise_std".
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace olrwa
