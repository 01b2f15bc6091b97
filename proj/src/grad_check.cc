#include "dsen/grad_check.h"

#include <algorithm>
#include <cmath>

namespace dsen {
namespace {

double Evaluate(const ScalarFn& f) {
  Tape tape;
  const Var out = f(tape);
  if (out.value().size() != 1) {
    throw ContractError("grad_check: function must return a scalar, got " +
                        ShapeString(out.shape()));
  }
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw EvaluationError("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckResult GradCheckDetailed(const ScalarFn& f, std::span<Tensor* const> params,
                                  double eps) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    const Var out = f(tape);
    if (!std::isfinite(out.value()[0])) {
      throw EvaluationError("grad_check: function value is not finite");
    }
    tape.Backward(out);
    for (Tensor* p : params) analytic.push_back(tape.GradOf(*p));
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = Evaluate(f);
      p[i] = saved - eps;
      const double down = Evaluate(f);
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) {
        result = {err, k, i, a, numeric};
      }
    }
  }
  return result;
}

double GradCheck(const ScalarFn& f, std::span<Tensor* const> params, double eps) {
  return GradCheckDetailed(f, params, eps).max_relative_error;
}

}  // namespace dsen
