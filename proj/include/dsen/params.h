#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsen/tensor.h"

namespace dsen {

struct NamedParam {
  std::string name;
  Tensor* tensor;
};

// Ordered view over a model's learnable tensors. Order is fixed by the model
// definition and is the order used for checkpoints and optimizer state.
using ParamList = std::vector<NamedParam>;

struct ParamCollector {
  ParamList* out;
  void operator()(const std::string& name, Tensor& t) const { out->push_back({name, &t}); }
};

// Rank-2 tensors: uniform in ±sqrt(6 / (fan_in + fan_out)), with fan_in and
// fan_out the two extents. Everything else (biases) is set to zero.
void InitParams(const ParamList& params, std::uint64_t seed);

std::size_t CountParams(const ParamList& params);

}  // namespace dsen
