#include "dsen/checkpoint.h"

#include "dsen/binary_io.h"

namespace dsen {
namespace {

constexpr std::string_view kMagic = "DSENCKPT";
// Guards allocation against corrupt headers.
constexpr std::uint64_t kMaxExtent = 1 << 20;
constexpr std::uint32_t kMaxRank = 4;

std::uint64_t Extent(BinaryReader& r, const char* what) {
  const std::size_t at = r.offset();
  const std::uint64_t v = r.U64();
  if (v > kMaxExtent) {
    throw FormatError("checkpoint: " + std::string(what) + " = " + std::to_string(v) +
                      " at offset " + std::to_string(at) + " is implausible");
  }
  return v;
}

}  // namespace

std::string SerializeCheckpoint(const Model& model) {
  const ModelDims& d = model.dims();
  BinaryWriter w;
  w.Bytes(kMagic);
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(model.variant()));
  w.U64(d.embedding_width());
  w.U64(d.views);
  w.U64(d.window);
  w.U64(d.evolution_hidden);
  w.U64(d.link_features);
  w.U64(d.seq_features);
  w.U64(d.profile_features);
  w.U64(d.gru_hidden);
  w.U64(d.gru_layers);
  w.U64(d.attention_heads);
  w.U64(d.mlp_hidden.size());
  for (std::size_t h : d.mlp_hidden) w.U64(h);

  const auto names = model.ParamNames();
  const auto tensors = model.ConstParams();
  w.U64(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.String(names[i]);
    const Tensor& t = *tensors[i];
    w.U32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) w.U64(e);
    w.F64Array(t.values());
  }
  return w.Release();
}

Model DeserializeCheckpoint(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.Bytes(kMagic.size()) != kMagic) throw FormatError("not a checkpoint: bad magic");
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " unsupported (expected " + std::to_string(kCheckpointVersion) +
                       ")");
  }
  const std::uint32_t tag = r.U32();
  if (tag > static_cast<std::uint32_t>(Variant::kDsenAtt)) {
    throw FormatError("checkpoint: unknown variant tag " + std::to_string(tag));
  }
  ModelDims d;
  const std::uint64_t m = Extent(r, "m");
  d.views = Extent(r, "k");
  d.window = Extent(r, "t");
  d.evolution_hidden = Extent(r, "h_evo");
  d.link_features = Extent(r, "d_l");
  d.seq_features = Extent(r, "seq_features");
  d.profile_features = Extent(r, "profile_features");
  d.gru_hidden = Extent(r, "gru_hidden");
  d.gru_layers = Extent(r, "gru_layers");
  d.attention_heads = Extent(r, "attention_heads");
  d.mlp_hidden.resize(Extent(r, "mlp layer count"));
  for (auto& h : d.mlp_hidden) h = Extent(r, "mlp width");
  if (m != d.embedding_width()) {
    throw FormatError("checkpoint: embedding width " + std::to_string(m) +
                      " inconsistent with gru_hidden + profile_features");
  }
  try {
    d.Validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  Model model(static_cast<Variant>(tag), d);
  const ParamList params = model.Params();
  const std::uint64_t count = r.U64();
  if (count != params.size()) {
    throw FormatError("checkpoint: " + std::to_string(count) + " tensors, model expects " +
                      std::to_string(params.size()));
  }
  for (const NamedParam& p : params) {
    const std::size_t at = r.offset();
    const std::string name = r.String();
    if (name != p.name) {
      throw FormatError("checkpoint: tensor '" + name + "' at offset " +
                        std::to_string(at) + ", expected '" + p.name + "'");
    }
    const std::uint32_t rank = r.U32();
    if (rank > kMaxRank) {
      throw FormatError("checkpoint: tensor '" + name + "' has rank " + std::to_string(rank));
    }
    Shape shape(rank);
    for (auto& e : shape) e = Extent(r, "tensor extent");
    std::vector<double> values = r.F64Array();
    if (shape != p.tensor->shape()) {
      throw FormatError("checkpoint: tensor '" + name + "' has shape " +
                        ShapeString(shape) + ", expected " +
                        ShapeString(p.tensor->shape()));
    }
    *p.tensor = Tensor(shape, std::move(values));
  }
  if (!r.AtEnd()) {
    throw FormatError("checkpoint: trailing bytes at offset " + std::to_string(r.offset()));
  }
  return model;
}

void SaveCheckpoint(const Model& model, const std::string& path) {
  WriteFile(path, SerializeCheckpoint(model));
}

Model LoadCheckpoint(const std::string& path) { return DeserializeCheckpoint(ReadFile(path)); }

}  // namespace dsen
