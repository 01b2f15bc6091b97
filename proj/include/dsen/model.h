#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dsen/baselines.h"
#include "dsen/params.h"

namespace dsen {

enum class Variant : std::uint32_t {
  kDsen = 0,
  kMlp = 1,
  kGru = 2,
  kAttention = 3,
  kDsenAtt = 4,
};

inline constexpr Variant kAllVariants[] = {Variant::kDsen, Variant::kMlp, Variant::kGru,
                                           Variant::kAttention, Variant::kDsenAtt};

std::string_view VariantName(Variant v);
// Accepts dsen, mlp, gru, attn (or attention), dsen_att (or dsen-att).
Variant ParseVariant(std::string_view name);

// One model of any variant: exactly one parameter bundle is populated.
class Model {
 public:
  using Bundle = std::variant<DsenParams, MlpBaselineParams, GruBaselineParams,
                              AttentionBaselineParams, DsenAttParams>;

  // All parameters zero.
  Model(Variant variant, ModelDims dims);
  static Model Initialized(Variant variant, ModelDims dims, std::uint64_t seed);

  Variant variant() const { return variant_; }
  const ModelDims& dims() const { return dims_; }
  const Bundle& bundle() const { return bundle_; }
  Bundle& bundle() { return bundle_; }

  // batch×1 probabilities.
  Var Forward(Tape& tape, const PairBatch& batch) const;
  std::vector<double> Predict(const PairBatch& batch) const;

  ParamList Params();
  std::vector<const Tensor*> ConstParams() const;
  std::vector<std::string> ParamNames() const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  Variant variant_;
  ModelDims dims_;
  Bundle bundle_;
};

}  // namespace dsen
