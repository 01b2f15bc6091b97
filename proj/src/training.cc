#include "dsen/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "dsen/evaluation.h"
#include "dsen/rng.h"

namespace dsen {

DivergenceError::DivergenceError(std::size_t epoch, std::size_t batch, double loss)
    : std::runtime_error(fmt::format("training diverged: loss {} at epoch {}, batch {}", loss,
                                     epoch, batch)),
      epoch_(epoch),
      batch_(batch) {}

TrainConfig TrainConfig::PaperScale() {
  TrainConfig c;
  c.batch_size = 16384;
  c.desk_scale = false;
  return c;
}

void TrainConfig::Validate() const {
  if (batch_size == 0) throw ValidationError("batch_size", "must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate", "must be > 0");
  }
  if (max_epochs == 0) throw ValidationError("epochs", "must be >= 1");
  if (patience == 0) throw ValidationError("patience", "must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1", "must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2", "must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon", "must be > 0");
}

AdamState AdamState::For(std::span<Tensor* const> params) {
  AdamState s;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

void AdamStep(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
              const TrainConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ContractError(fmt::format("adam: {} params, {} grads, {} moment slots", params.size(),
                                    grads.size(), state.m.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i]->shape() || state.m[i].shape() != params[i]->shape()) {
      throw ContractError(fmt::format("adam: parameter {} has shape {} but gradient {}", i,
                                      ShapeString(params[i]->shape()),
                                      ShapeString(grads[i].shape())));
    }
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->mutable_data();
    auto m = state.m[i].mutable_data();
    auto v = state.v[i].mutable_data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1, v_hat = v[j] / c2;
      theta[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

std::string TrainHistory::Format() const {
  std::ostringstream out;
  out << "# epoch loss val_auc\n";
  for (std::size_t e = 0; e < loss.size(); ++e) {
    out << fmt::format("{} {:.17g} {:.17g}\n", e + 1, loss[e], val_auc[e]);
  }
  out << fmt::format("# best_epoch {} stopped_epoch {}\n", best_epoch, stopped_epoch);
  return out.str();
}

ModelDims DimsFor(const FeatureSchema& schema, bool desk_scale) {
  ModelDims d = desk_scale ? ModelDims::DeskScale() : ModelDims::PaperScale();
  d.seq_features = schema.seq_features;
  d.profile_features = schema.profile_features;
  d.window = schema.window;
  d.link_features = schema.link_features;
  return d;
}

double ValidationAuc(const Model& model, const Dataset& dataset) {
  const std::vector<Sample> val = dataset.SamplesIn(Split::kVal);
  if (val.empty()) throw ContractError("training: empty validation split");
  std::vector<double> labels;
  for (const Sample& s : val) labels.push_back(s.label);
  return Auc(ModelScorer(model, dataset)(val), labels);
}

TrainResult Train(Model initial, const Dataset& dataset, const TrainConfig& config,
                  const ValidationHook& hook) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Sample> train = dataset.SamplesIn(Split::kTrain);
  if (train.empty()) throw ContractError("training: empty train split");
  if (!hook && dataset.SamplesIn(Split::kVal).empty()) {
    throw ContractError("training: empty validation split");
  }

  Model model = std::move(initial);
  const ParamList named = model.Params();
  std::vector<Tensor*> params;
  for (const NamedParam& p : named) params.push_back(p.tensor);
  AdamState adam = AdamState::For(params);

  TrainResult result{model, {}};
  TrainHistory& h = result.history;
  double best_auc = -1.0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::vector<Sample> batch_samples;
  std::vector<Tensor> grads(params.size());

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng = StreamRng(config.seed, {0x7261696eULL, epoch});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch_samples.clear();
      for (std::size_t i = begin; i < end; ++i) batch_samples.push_back(train[order[i]]);
      const PairBatch batch = dataset.Batch(batch_samples);

      Tape tape;
      const Var loss = BinaryCrossEntropy(model.Forward(tape, batch), batch.labels);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw DivergenceError(epoch, batch_index + 1, value);
      tape.Backward(loss);
      for (std::size_t i = 0; i < params.size(); ++i) grads[i] = tape.GradOf(*params[i]);
      AdamStep(params, grads, adam, config);
      loss_sum += value * static_cast<double>(end - begin);
    }
    h.loss.push_back(loss_sum / static_cast<double>(train.size()));

    const double auc = hook ? hook(model, epoch) : ValidationAuc(model, dataset);
    h.val_auc.push_back(auc);
    h.stopped_epoch = epoch;
    if (auc > best_auc) {
      best_auc = auc;
      h.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  h.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult Train(Variant variant, const ModelDims& dims, const Dataset& dataset,
                  const TrainConfig& config, const ValidationHook& hook) {
  return Train(Model::Initialized(variant, dims, config.seed), dataset, config, hook);
}

}  // namespace dsen
