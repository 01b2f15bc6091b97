#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "dsen/tape.h"

namespace dsen {

// Raised when the checked function returns a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Builds a scalar on the given tape. Parameters must enter through
// tape.Param() using the same Tensor objects passed to GradCheck.
using ScalarFn = std::function<Var(Tape&)>;

// Compares reverse-mode gradients with central differences of step eps for
// every entry of every parameter. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult GradCheckDetailed(const ScalarFn& f, std::span<Tensor* const> params,
                                  double eps = 1e-5);

double GradCheck(const ScalarFn& f, std::span<Tensor* const> params, double eps = 1e-5);

}  // namespace dsen
