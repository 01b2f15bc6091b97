#include "dsen/params.h"

#include <cmath>
#include <random>

namespace dsen {

void InitParams(const ParamList& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const NamedParam& p : params) {
    Tensor& t = *p.tensor;
    if (t.rank() == 2) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(t.shape()[0] + t.shape()[1]));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : t.mutable_data()) v = dist(rng);
    } else {
      for (double& v : t.mutable_data()) v = 0.0;
    }
  }
}

std::size_t CountParams(const ParamList& params) {
  std::size_t n = 0;
  for (const NamedParam& p : params) n += p.tensor->size();
  return n;
}

}  // namespace dsen
