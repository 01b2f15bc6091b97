#include "dsen/model.h"

#include <utility>

namespace dsen {
namespace {

Model::Bundle MakeBundle(Variant v, const ModelDims& dims) {
  switch (v) {
    case Variant::kDsen:
      return DsenParams(dims);
    case Variant::kMlp:
      return MlpBaselineParams(dims);
    case Variant::kGru:
      return GruBaselineParams(dims);
    case Variant::kAttention:
      return AttentionBaselineParams(dims);
    case Variant::kDsenAtt:
      return DsenAttParams(dims);
  }
  throw ContractError("unknown model variant");
}

}  // namespace

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kDsen:
      return "dsen";
    case Variant::kMlp:
      return "mlp";
    case Variant::kGru:
      return "gru";
    case Variant::kAttention:
      return "attn";
    case Variant::kDsenAtt:
      return "dsen_att";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  if (name == "dsen") return Variant::kDsen;
  if (name == "mlp") return Variant::kMlp;
  if (name == "gru") return Variant::kGru;
  if (name == "attn" || name == "attention") return Variant::kAttention;
  if (name == "dsen_att" || name == "dsen-att") return Variant::kDsenAtt;
  throw std::invalid_argument("unknown model variant '" + std::string(name) + "'");
}

Model::Model(Variant variant, ModelDims dims)
    : variant_(variant), dims_(std::move(dims)), bundle_(MakeBundle(variant, dims_)) {
  dims_.Validate();
}

Model Model::Initialized(Variant variant, ModelDims dims, std::uint64_t seed) {
  Model m(variant, std::move(dims));
  InitParams(m.Params(), seed);
  return m;
}

Var Model::Forward(Tape& tape, const PairBatch& batch) const {
  if (batch.window() != dims_.window) {
    throw DimensionError("model window " + std::to_string(dims_.window) +
                         " but batch carries " + std::to_string(batch.window()) + " steps");
  }
  return std::visit(
      [&](const auto& p) -> Var {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DsenParams>) {
          return DsenForward(tape, batch, p);
        } else if constexpr (std::is_same_v<T, MlpBaselineParams>) {
          return MlpBaselineForward(tape, batch, p);
        } else if constexpr (std::is_same_v<T, GruBaselineParams>) {
          return GruBaselineForward(tape, batch, p);
        } else if constexpr (std::is_same_v<T, AttentionBaselineParams>) {
          return AttentionBaselineForward(tape, batch, p);
        } else {
          return DsenAttForward(tape, batch, p);
        }
      },
      bundle_);
}

std::vector<double> Model::Predict(const PairBatch& batch) const {
  Tape tape;
  const Tensor& out = Forward(tape, batch).value();
  return out.values();
}

ParamList Model::Params() {
  ParamList list;
  std::visit([&](auto& p) { p.ForEachParam(ParamCollector{&list}); }, bundle_);
  return list;
}

std::vector<const Tensor*> Model::ConstParams() const {
  std::vector<const Tensor*> out;
  for (const NamedParam& p : const_cast<Model*>(this)->Params()) out.push_back(p.tensor);
  return out;
}

std::vector<std::string> Model::ParamNames() const {
  std::vector<std::string> out;
  for (const NamedParam& p : const_cast<Model*>(this)->Params()) out.push_back(p.name);
  return out;
}

bool operator==(const Model& a, const Model& b) {
  if (a.variant_ != b.variant_) return false;
  const auto pa = a.ConstParams();
  const auto pb = b.ConstParams();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(*pa[i] == *pb[i])) return false;
  }
  return true;
}

}  // namespace dsen
