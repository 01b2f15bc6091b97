#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "dsen/checkpoint.h"
#include "dsen/params.h"
#include "dsen/tape.h"
#include "dsen/training.h"

namespace dsen {
namespace {

TEST(InitTest, FanAverageVariance) {
  Tensor w({512, 512});
  Tensor b({512});
  b.mutable_data()[3] = 7.0;
  InitParams({{"w", &w}, {"b", &b}}, 9);
  double mean = 0.0, sq = 0.0;
  const double bound = std::sqrt(6.0 / 1024.0);
  for (double x : w.data()) {
    ASSERT_LE(std::abs(x), bound);
    mean += x;
  }
  mean /= static_cast<double>(w.size());
  for (double x : w.data()) sq += (x - mean) * (x - mean);
  const double var = sq / static_cast<double>(w.size() - 1);
  EXPECT_NEAR(var / (2.0 / 1024.0), 1.0, 0.10);
  for (double x : b.data()) EXPECT_EQ(x, 0.0);
}

TEST(InitTest, SeedDeterminesValues) {
  Tensor a({20, 30}), b({20, 30}), c({20, 30});
  InitParams({{"w", &a}}, 4);
  InitParams({{"w", &b}}, 4);
  InitParams({{"w", &c}}, 5);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(AdamTest, HandStep) {
  // f = θ², θ = 1: g = 2, m̂ = 2, v̂ = 4, update = 0.01 · 2 / (2 + ε).
  Tensor theta({1});
  theta.mutable_data()[0] = 1.0;
  Tensor* params[] = {&theta};
  Tensor g({1});
  g.mutable_data()[0] = 2.0;
  AdamState state = AdamState::For(params);
  TrainConfig config;
  AdamStep(params, std::vector{g}, state, config);
  EXPECT_NEAR(theta[0], 1.0 - 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(theta[0], 0.99, 1e-9);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamTest, ZeroGradientLeavesParams) {
  Tensor theta = Tensor::Matrix(2, 2, {1, -2, 3, 0.5});
  const Tensor before = theta;
  Tensor* params[] = {&theta};
  AdamState state = AdamState::For(params);
  AdamStep(params, std::vector{Tensor({2, 2})}, state, TrainConfig{});
  EXPECT_EQ(theta, before);
}

TEST(AdamTest, FirstStepOpposesGradient) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor theta({16}), g({16});
    for (double& x : theta.mutable_data()) x = n(rng);
    for (double& x : g.mutable_data()) x = n(rng) * std::pow(10.0, trial % 7 - 3);
    const Tensor before = theta;
    Tensor* params[] = {&theta};
    AdamState state = AdamState::For(params);
    AdamStep(params, std::vector{g}, state, TrainConfig{});
    for (std::size_t i = 0; i < 16; ++i) {
      const double delta = theta[i] - before[i];
      EXPECT_LT(delta * g[i], 0.0);
    }
  }
}

TEST(AdamTest, ShapeMismatch) {
  Tensor theta({3});
  Tensor* params[] = {&theta};
  AdamState state = AdamState::For(params);
  EXPECT_THROW(AdamStep(params, std::vector{Tensor({4})}, state, TrainConfig{}), ContractError);
  EXPECT_THROW(AdamStep(params, std::vector<Tensor>{}, state, TrainConfig{}), ContractError);
}

TEST(TrainConfigTest, ValidationNamesKey) {
  const auto key_of = [](TrainConfig c) {
    try {
      c.Validate();
    } catch (const ValidationError& e) {
      return e.key();
    }
    return std::string();
  };
  TrainConfig c;
  EXPECT_EQ(key_of(c), "");
  c.batch_size = 0;
  EXPECT_EQ(key_of(c), "batch_size");
  c = {};
  c.learning_rate = 0.0;
  EXPECT_EQ(key_of(c), "learning_rate");
  c = {};
  c.patience = 0;
  EXPECT_EQ(key_of(c), "patience");
  EXPECT_EQ(TrainConfig::PaperScale().batch_size, 16384u);
  EXPECT_EQ(TrainConfig{}.max_epochs, 8u);
  EXPECT_EQ(TrainConfig{}.patience, 2u);
}

class TrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    GeneratorConfig c;
    c.users = 300;
    c.days = 18;
    c.active_per_day = 30;
    c.exposures_per_user = 20;
    c.seed = 6;
    dataset_ = new Dataset(GenerateSynthetic(FeatureSchema::Default(), c));
  }
  static void TearDownTestSuite() { delete dataset_; }
  static const Dataset& ds() { return *dataset_; }

  static ModelDims Dims() {
    ModelDims d = DimsFor(ds().schema(), true);
    d.gru_hidden = 4;
    d.views = 2;
    d.evolution_hidden = 4;
    d.mlp_hidden = {8, 4};
    return d;
  }
  static TrainConfig Config() {
    TrainConfig c;
    c.batch_size = 128;
    c.seed = 2;
    return c;
  }
  static Dataset* dataset_;
};

Dataset* TrainTest::dataset_ = nullptr;

TEST_F(TrainTest, EarlyStopReturnsBestEpoch) {
  const std::vector<double> aucs = {0.60, 0.70, 0.70, 0.69, 0.99, 0.99, 0.99, 0.99};
  std::vector<Model> snapshots;
  const ValidationHook hook = [&](const Model& m, std::size_t epoch) {
    snapshots.push_back(m);
    return aucs.at(epoch - 1);
  };
  const TrainResult r = Train(Variant::kMlp, Dims(), ds(), Config(), hook);
  EXPECT_EQ(r.history.stopped_epoch, 4u);
  EXPECT_EQ(r.history.best_epoch, 2u);
  ASSERT_EQ(snapshots.size(), 4u);
  EXPECT_EQ(r.history.loss.size(), 4u);
  EXPECT_EQ(r.history.val_auc, (std::vector<double>{0.60, 0.70, 0.70, 0.69}));
  EXPECT_TRUE(r.model == snapshots[1]);
  EXPECT_FALSE(r.model == snapshots[3]);
}

TEST_F(TrainTest, IncreasingAucRunsAllEpochs) {
  const ValidationHook hook = [](const Model&, std::size_t epoch) {
    return 0.5 + 0.01 * static_cast<double>(epoch);
  };
  std::vector<Model> snapshots;
  const TrainResult r = Train(Variant::kMlp, Dims(), ds(), Config(),
                              [&](const Model& m, std::size_t e) {
                                snapshots.push_back(m);
                                return hook(m, e);
                              });
  EXPECT_EQ(r.history.stopped_epoch, 8u);
  EXPECT_EQ(r.history.best_epoch, 8u);
  EXPECT_EQ(r.history.loss.size(), 8u);
  EXPECT_TRUE(r.model == snapshots.back());
}

TEST_F(TrainTest, BestEpochHasHighestAuc) {
  TrainConfig c = Config();
  c.max_epochs = 5;
  const TrainResult r = Train(Variant::kDsen, Dims(), ds(), c);
  const auto& auc = r.history.val_auc;
  ASSERT_GE(r.history.best_epoch, 1u);
  for (double a : auc) EXPECT_LE(a, auc[r.history.best_epoch - 1]);
  EXPECT_DOUBLE_EQ(ValidationAuc(r.model, ds()), auc[r.history.best_epoch - 1]);
}

TEST_F(TrainTest, FrozenBatchLossDecreases) {
  const std::vector<Sample> train = ds().SamplesIn(Split::kTrain);
  const PairBatch batch = ds().Batch(std::span(train).first(64));
  TrainConfig c = Config();
  c.learning_rate = 1e-4;
  for (Variant v : {Variant::kDsen, Variant::kMlp, Variant::kGru, Variant::kAttention,
                    Variant::kDsenAtt}) {
    Model m = Model::Initialized(v, Dims(), 12);
    const ParamList named = m.Params();
    std::vector<Tensor*> params;
    for (const NamedParam& p : named) params.push_back(p.tensor);
    AdamState state = AdamState::For(params);

    Tape tape;
    const Var loss = BinaryCrossEntropy(m.Forward(tape, batch), batch.labels);
    const double before = loss.value()[0];
    tape.Backward(loss);
    std::vector<Tensor> grads;
    for (Tensor* p : params) grads.push_back(tape.GradOf(*p));
    AdamStep(params, grads, state, c);

    Tape after_tape;
    const double after =
        BinaryCrossEntropy(m.Forward(after_tape, batch), batch.labels).value()[0];
    EXPECT_LT(after, before) << VariantName(v);
  }
}

TEST_F(TrainTest, LossFallsForEveryVariant) {
  TrainConfig c = Config();
  c.max_epochs = 3;
  c.patience = 3;
  for (Variant v : {Variant::kDsen, Variant::kMlp, Variant::kGru, Variant::kAttention,
                    Variant::kDsenAtt}) {
    const TrainResult r = Train(v, Dims(), ds(), c);
    ASSERT_EQ(r.history.loss.size(), 3u);
    EXPECT_LT(r.history.loss.back(), r.history.loss.front()) << VariantName(v);
    for (double a : r.history.val_auc) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
}

TEST_F(TrainTest, Deterministic) {
  TrainConfig c = Config();
  c.max_epochs = 2;
  const TrainResult a = Train(Variant::kDsen, Dims(), ds(), c);
  const TrainResult b = Train(Variant::kDsen, Dims(), ds(), c);
  EXPECT_EQ(a.history.Format(), b.history.Format());
  EXPECT_EQ(SerializeCheckpoint(a.model), SerializeCheckpoint(b.model));
  c.seed = 3;
  const TrainResult other = Train(Variant::kDsen, Dims(), ds(), c);
  EXPECT_NE(SerializeCheckpoint(a.model), SerializeCheckpoint(other.model));
}

TEST_F(TrainTest, HistoryFormat) {
  TrainHistory h;
  h.loss = {0.5, 0.25};
  h.val_auc = {0.6, 0.75};
  h.best_epoch = 2;
  h.stopped_epoch = 2;
  h.wall_seconds = 12.5;
  EXPECT_EQ(h.Format(), "# epoch loss val_auc\n1 0.5 0.59999999999999998\n2 0.25 0.75\n"
                        "# best_epoch 2 stopped_epoch 2\n");
}

TEST_F(TrainTest, NonFiniteLossIsDivergence) {
  Model m = Model::Initialized(Variant::kMlp, Dims(), 1);
  m.Params().front().tensor->mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    Train(m, ds(), Config());
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1u);
    EXPECT_EQ(e.batch(), 1u);
  }
}

TEST_F(TrainTest, EmptySplitsAreContractErrors) {
  Dataset no_train = ds();
  std::erase_if(no_train.samples(), [](const Sample& s) { return s.split == Split::kTrain; });
  EXPECT_THROW(Train(Variant::kMlp, Dims(), no_train, Config()), ContractError);
  Dataset no_val = ds();
  std::erase_if(no_val.samples(), [](const Sample& s) { return s.split == Split::kVal; });
  EXPECT_THROW(Train(Variant::kMlp, Dims(), no_val, Config()), ContractError);
}

}  // namespace
}  // namespace dsen
