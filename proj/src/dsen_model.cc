#include "dsen/dsen_model.h"

#include <algorithm>
#include <cmath>

namespace dsen {
namespace {

Tensor AsRow(const Tensor& v) { return v.Reshaped({1, v.size()}); }

}  // namespace

ModelDims ModelDims::PaperScale() { return ModelDims{}; }

ModelDims ModelDims::DeskScale() {
  ModelDims d;
  d.gru_hidden = 16;
  d.views = 8;
  d.evolution_hidden = 16;
  d.mlp_hidden = {32, 16, 8};
  return d;
}

void ModelDims::Validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ContractError(std::string("model dims: ") + name + " must be >= 1");
  };
  positive(seq_features, "seq_features");
  positive(profile_features, "profile_features");
  positive(window, "window");
  positive(gru_hidden, "gru_hidden");
  positive(gru_layers, "gru_layers");
  positive(views, "views");
  positive(evolution_hidden, "evolution_hidden");
  positive(attention_heads, "attention_heads");
  for (std::size_t h : mlp_hidden) positive(h, "mlp_hidden");
}

DsenParams::DsenParams(const ModelDims& dims)
    : gru(MakeGruStack(dims.seq_features, dims.gru_hidden, dims.gru_layers)),
      views({dims.embedding_width(), dims.views}),
      view_bias({dims.views}),
      evolution(dims.views, dims.evolution_hidden),
      head_weight({dims.evolution_hidden + dims.link_features, 1}),
      head_bias({1}) {}

std::vector<Var> EmbedTimesteps(const TowerInput& tower, const GruStack& gru) {
  const std::vector<Var> hidden = GruSequence(tower.steps, gru);
  std::vector<Var> out;
  out.reserve(hidden.size());
  for (Var h : hidden) {
    const Var parts[] = {h, tower.profile};
    out.push_back(ConcatCols(parts));
  }
  return out;
}

Var MultiviewPreActivation(Var e_i, Var e_j, Var views, Var bias) {
  if (e_i.shape() != e_j.shape()) {
    throw DimensionError("multiview: embeddings differ, " + ShapeString(e_i.shape()) +
                         " vs " + ShapeString(e_j.shape()));
  }
  return AddBias(MatMul(Hadamard(e_i, e_j), views), bias);
}

Var MultiviewSimilarity(Var e_i, Var e_j, Var views, Var bias) {
  return Relu(MultiviewPreActivation(e_i, e_j, views, bias));
}

std::vector<Var> SimilaritySequence(Tape& tape, const PairBatch& batch,
                                    const GruStack& gru, const Tensor& views,
                                    const Tensor& view_bias) {
  const std::vector<Var> e_i = EmbedTimesteps(SourceTower(tape, batch), gru);
  const std::vector<Var> e_j = EmbedTimesteps(TargetTower(tape, batch), gru);
  const Var v = tape.Param(views);
  const Var b = tape.Param(view_bias);
  std::vector<Var> g;
  g.reserve(e_i.size());
  for (std::size_t s = 0; s < e_i.size(); ++s) {
    g.push_back(MultiviewSimilarity(e_i[s], e_j[s], v, b));
  }
  return g;
}

Var SimilarityEvolution(std::span<const Var> similarity, const LstmParams& p) {
  return LstmSequence(similarity, p);
}

Var PredictProbability(Var evolution, Var link, Var weight, Var bias) {
  const Var parts[] = {evolution, link};
  const Var joined = ConcatCols(parts);
  if (weight.value().rows() != joined.value().cols()) {
    throw DimensionError("predict: head weight " + ShapeString(weight.shape()) +
                         " does not match input " + ShapeString(joined.shape()));
  }
  return Sigmoid(AddBias(MatMul(joined, weight), bias));
}

Var DsenForward(Tape& tape, const PairBatch& batch, const DsenParams& p) {
  const std::vector<Var> g =
      SimilaritySequence(tape, batch, p.gru, p.views, p.view_bias);
  const Var evo = SimilarityEvolution(g, p.evolution);
  return PredictProbability(evo, tape.Constant(batch.link), tape.Param(p.head_weight),
                            tape.Param(p.head_bias));
}

Tensor EmbedTimesteps(const Tensor& sequence, const Tensor& profile,
                      const DsenParams& p, std::size_t window) {
  if (p.gru.empty()) throw ContractError("embed: empty GRU stack");
  if (sequence.rank() != 2 || sequence.cols() != p.gru.front().input_size()) {
    throw DimensionError("embed: sequence " + ShapeString(sequence.shape()) +
                         " does not match GRU input width " +
                         std::to_string(p.gru.front().input_size()));
  }
  const std::size_t profile_width = p.views.rows() - p.gru.back().hidden_size();
  if (profile.size() != profile_width) {
    throw DimensionError("embed: profile " + ShapeString(profile.shape()) +
                         " does not match expected width " + std::to_string(profile_width));
  }
  const Tensor windowed = WindowSequence(sequence, window);
  const Tensor hidden = GruSequence(windowed, p.gru);
  std::vector<Tensor> rows;
  for (std::size_t s = 0; s < window; ++s) {
    const Tensor parts[] = {hidden.Row(s), profile.Reshaped({profile.size()})};
    rows.push_back(ConcatCols(parts));
  }
  return StackRows(rows);
}

Tensor MultiviewSimilarity(const Tensor& e_i, const Tensor& e_j, const Tensor& views,
                           const Tensor& bias) {
  if (views.rank() != 2 || e_i.size() != views.rows() || bias.size() != views.cols()) {
    throw DimensionError("multiview: e " + ShapeString(e_i.shape()) + ", V " +
                         ShapeString(views.shape()) + ", b " + ShapeString(bias.shape()));
  }
  Tape tape;
  const Var g = MultiviewSimilarity(tape.Constant(AsRow(e_i)), tape.Constant(AsRow(e_j)),
                                    tape.Constant(views), tape.Constant(bias));
  return g.value().Reshaped({views.cols()});
}

Tensor SimilarityEvolution(const Tensor& similarity, const LstmParams& p) {
  return LstmSequence(similarity, p);
}

double PredictProbability(const Tensor& evolution, const Tensor& link,
                          const Tensor& weight, const Tensor& bias) {
  Tape tape;
  return PredictProbability(tape.Constant(AsRow(evolution)), tape.Constant(AsRow(link)),
                            tape.Constant(weight), tape.Constant(bias))
      .value()[0];
}

double DsenForward(const PairFeatures& pair, const DsenParams& p) {
  const PairFeatures one[] = {pair};
  const PairBatch batch = MakeBatch(one);
  Tape tape;
  return DsenForward(tape, batch, p).value()[0];
}

double BceLoss(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.size() != labels.size()) {
    throw ContractError("bce: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw ContractError("bce: empty input");
  double loss = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], 1e-12, 1.0 - 1e-12);
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return loss / static_cast<double>(predictions.size());
}

}  // namespace dsen
