#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsen/config.h"
#include "dsen/data.h"
#include "dsen/model.h"

namespace dsen {

// Non-finite training loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch, double loss);
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

struct TrainConfig {
  std::size_t batch_size = 256;
  double learning_rate = 0.01;
  std::size_t max_epochs = 8;
  std::size_t patience = 2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  // Desk-scale model sizes; false selects the full-size tables.
  bool desk_scale = true;

  // Batch size 16384 and full model sizes.
  static TrainConfig PaperScale();
  void Validate() const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static AdamState For(std::span<Tensor* const> params);
};

// θ ← θ − lr · m̂ / (√v̂ + ε) with bias-corrected moments.
void AdamStep(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
              const TrainConfig& config);

struct TrainHistory {
  std::vector<double> loss;     // mean training loss per epoch
  std::vector<double> val_auc;  // validation AUC per epoch
  std::size_t best_epoch = 0;   // 1-based
  std::size_t stopped_epoch = 0;
  double wall_seconds = 0.0;

  // "epoch loss val_auc" lines; wall time is left out so logs compare
  // byte-for-byte across runs.
  std::string Format() const;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  TrainHistory history;
};

// Validation AUC after each epoch (1-based). The default computes AUC over
// the validation samples.
using ValidationHook = std::function<double(const Model&, std::size_t epoch)>;

ModelDims DimsFor(const FeatureSchema& schema, bool desk_scale);

double ValidationAuc(const Model& model, const Dataset& dataset);

TrainResult Train(Model initial, const Dataset& dataset, const TrainConfig& config,
                  const ValidationHook& hook = {});
TrainResult Train(Variant variant, const ModelDims& dims, const Dataset& dataset,
                  const TrainConfig& config, const ValidationHook& hook = {});

}  // namespace dsen
