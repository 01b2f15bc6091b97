#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dsen/batch.h"
#include "dsen/layers.h"

namespace dsen {

// Sizes shared by every model variant.
struct ModelDims {
  std::size_t seq_features = 55;
  std::size_t profile_features = 68;
  std::size_t window = 15;
  std::size_t link_features = 8;

  std::size_t gru_hidden = 64;
  std::size_t gru_layers = 2;
  std::size_t views = 32;
  // Width of the top-level representation fed to the prediction layer.
  std::size_t evolution_hidden = 64;
  std::size_t attention_heads = 2;
  std::vector<std::size_t> mlp_hidden = {128, 64, 32};

  // Parameter-table sizes.
  static ModelDims PaperScale();
  // Proportional shrink used for laptop-sized runs.
  static ModelDims DeskScale();

  // Per-timestep user embedding width: GRU hidden + profile.
  std::size_t embedding_width() const { return gru_hidden + profile_features; }
  void Validate() const;
};

struct DsenParams {
  GruStack gru;           // shared by the source and target towers
  Tensor views;           // embedding_width × views
  Tensor view_bias;       // views
  LstmParams evolution;   // views → evolution_hidden
  Tensor head_weight;     // (evolution_hidden + link_features) × 1
  Tensor head_bias;       // [1]

  DsenParams() = default;
  explicit DsenParams(const ModelDims& dims);

  template <class F>
  void ForEachParam(F&& f) {
    dsen::ForEachParam(gru, "gru.", f);
    f("views", views);
    f("view_bias", view_bias);
    evolution.ForEachParam("evolution.", f);
    f("head.weight", head_weight);
    f("head.bias", head_bias);
  }
};

// Per-step embeddings e(t) = [GRU hidden(t) ∥ profile].
std::vector<Var> EmbedTimesteps(const TowerInput& tower, const GruStack& gru);

// z = e_i ⊙ e_j, g = ReLU(zᵀ V + b). With V's column k read as the diagonal of
// a bilinear form W_k, column k of the pre-activation is e_iᵀ diag(v_k) e_j.
Var MultiviewSimilarity(Var e_i, Var e_j, Var views, Var bias);
Var MultiviewPreActivation(Var e_i, Var e_j, Var views, Var bias);

// Per-step similarity vectors for a batch (shared by DSEN and DSEN-ATT).
std::vector<Var> SimilaritySequence(Tape& tape, const PairBatch& batch,
                                    const GruStack& gru, const Tensor& views,
                                    const Tensor& view_bias);

Var SimilarityEvolution(std::span<const Var> similarity, const LstmParams& p);

// p = σ(Wᵀ [g ∥ link] + b)
Var PredictProbability(Var evolution, Var link, Var weight, Var bias);

// batch×1 probabilities.
Var DsenForward(Tape& tape, const PairBatch& batch, const DsenParams& p);

// Unbatched forms.
Tensor EmbedTimesteps(const Tensor& sequence, const Tensor& profile,
                      const DsenParams& p, std::size_t window);
Tensor MultiviewSimilarity(const Tensor& e_i, const Tensor& e_j, const Tensor& views,
                           const Tensor& bias);
Tensor SimilarityEvolution(const Tensor& similarity, const LstmParams& p);
double PredictProbability(const Tensor& evolution, const Tensor& link,
                          const Tensor& weight, const Tensor& bias);
double DsenForward(const PairFeatures& pair, const DsenParams& p);

// -(1/N) Σ [y log p + (1-y) log(1-p)] with p clamped to [1e-12, 1-1e-12].
double BceLoss(std::span<const double> predictions, std::span<const double> labels);

}  // namespace dsen
