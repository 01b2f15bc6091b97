#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dsen/dsen_model.h"
#include "dsen/grad_check.h"
#include "test_util.h"

namespace dsen {
namespace {

using testing::BundleTensors;
using testing::RandomizeBundle;
using testing::RandomTensor;

ModelDims ToyDims() {
  ModelDims d;
  d.seq_features = 3;
  d.profile_features = 2;
  d.window = 3;
  d.link_features = 2;
  d.gru_hidden = 3;
  d.gru_layers = 2;
  d.views = 2;
  d.evolution_hidden = 3;
  d.mlp_hidden = {4, 3};
  return d;
}

PairFeatures RandomPair(const ModelDims& d, std::mt19937_64& rng) {
  return {RandomTensor({d.window, d.seq_features}, rng), RandomTensor({d.profile_features}, rng),
          RandomTensor({d.window, d.seq_features}, rng), RandomTensor({d.profile_features}, rng),
          RandomTensor({d.link_features}, rng)};
}

Tensor PreActivation(const Tensor& e_i, const Tensor& e_j, const Tensor& v, const Tensor& b) {
  Tape tape;
  return MultiviewPreActivation(tape.Constant(e_i.Reshaped({1, e_i.size()})),
                                tape.Constant(e_j.Reshaped({1, e_j.size()})),
                                tape.Constant(v), tape.Constant(b))
      .value();
}

TEST(EmbedTimestepsTest, PaperScaleShape) {
  std::mt19937_64 rng(1);
  const ModelDims dims = ModelDims::PaperScale();
  DsenParams p(dims);
  RandomizeBundle(p, rng, 0.1);
  const Tensor e = EmbedTimesteps(RandomTensor({15, 55}, rng), RandomTensor({68}, rng), p, 15);
  EXPECT_EQ(e.shape(), (Shape{15, 132}));
}

TEST(EmbedTimestepsTest, ZeroParamsRepeatProfile) {
  const ModelDims dims = ToyDims();
  const DsenParams p(dims);
  const Tensor profile = Tensor::Vector({0.3, -1.2});
  const Tensor e = EmbedTimesteps(Tensor({3, 3}), profile, p, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(e.Row(r), Tensor::Vector({0, 0, 0, 0.3, -1.2}));
  }
}

TEST(EmbedTimestepsTest, DimensionMismatch) {
  const DsenParams p(ToyDims());
  EXPECT_THROW(EmbedTimesteps(Tensor({3, 4}), Tensor({2}), p, 3), DimensionError);
  EXPECT_THROW(EmbedTimesteps(Tensor({3, 3}), Tensor({5}), p, 3), DimensionError);
}

TEST(WindowSequenceTest, KeepsMostRecentDays) {
  Tensor days({20, 2});
  for (std::size_t d = 0; d < 20; ++d) {
    days.at(d, 0) = static_cast<double>(d);
    days.at(d, 1) = -static_cast<double>(d);
  }
  const Tensor w = WindowSequence(days, 15);
  ASSERT_EQ(w.shape(), (Shape{15, 2}));
  for (std::size_t r = 0; r < 15; ++r) EXPECT_EQ(w.at(r, 0), static_cast<double>(r + 5));
}

TEST(WindowSequenceTest, LeftPadsShortSequences) {
  const Tensor days = Tensor::Matrix(2, 2, {1, 2, 3, 4});
  const Tensor w = WindowSequence(days, 4);
  EXPECT_EQ(w, Tensor::Matrix(4, 2, {0, 0, 0, 0, 1, 2, 3, 4}));
}

TEST(MultiviewTest, HandExample) {
  const Tensor g = MultiviewSimilarity(Tensor::Vector({1, 2}), Tensor::Vector({3, 4}),
                                       Tensor::Matrix(2, 1, {1, 1}), Tensor::Vector({0}));
  EXPECT_EQ(g, Tensor::Vector({11}));
  EXPECT_EQ(PreActivation(Tensor::Vector({1, 2}), Tensor::Vector({3, 4}),
                          Tensor::Matrix(2, 1, {1, 1}), Tensor::Vector({0})),
            Tensor::Matrix(1, 1, {11}));
}

TEST(MultiviewTest, ZeroProductsGiveZero) {
  std::mt19937_64 rng(2);
  const Tensor v = RandomTensor({2, 3}, rng);
  EXPECT_EQ(MultiviewSimilarity(Tensor({2}), RandomTensor({2}, rng), v, Tensor({3})),
            Tensor({3}));
  EXPECT_EQ(MultiviewSimilarity(Tensor::Vector({1, 0}), Tensor::Vector({0, 1}), v, Tensor({3})),
            Tensor({3}));
}

TEST(MultiviewTest, ShapeMismatch) {
  EXPECT_THROW(MultiviewSimilarity(Tensor({2}), Tensor({2}), Tensor({3, 1}), Tensor({1})),
               DimensionError);
  Tape tape;
  EXPECT_THROW(MultiviewSimilarity(tape.Constant(Tensor({1, 2})), tape.Constant(Tensor({1, 3})),
                                   tape.Constant(Tensor({2, 1})), tape.Constant(Tensor({1}))),
               DimensionError);
}

TEST(MultiviewTest, MatchesDiagonalBilinearBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> m_dist(1, 10), k_dist(1, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = m_dist(rng), k = k_dist(rng);
    const Tensor e_i = RandomTensor({m}, rng, 2.0), e_j = RandomTensor({m}, rng, 2.0);
    const Tensor v = RandomTensor({m, k}, rng, 2.0);
    const Tensor pre = PreActivation(e_i, e_j, v, Tensor({k}));
    for (std::size_t view = 0; view < k; ++view) {
      double oracle = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < m; ++q) {
          const double w = p == q ? v.at(p, view) : 0.0;
          oracle += e_i[p] * w * e_j[q];
        }
      }
      EXPECT_LE(std::abs(pre[view] - oracle), 1e-10 * std::max(1.0, std::abs(oracle)));
    }
  }
}

TEST(MultiviewTest, ScaleAndSymmetry) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> alpha_dist(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor e_i = RandomTensor({6}, rng), e_j = RandomTensor({6}, rng);
    const Tensor v = RandomTensor({6, 3}, rng);
    const Tensor zero({3});
    const double alpha = alpha_dist(rng);
    const Tensor base = PreActivation(e_i, e_j, v, zero);
    EXPECT_LE(MaxAbsDiff(PreActivation(Scale(e_i, alpha), e_j, v, zero), Scale(base, alpha)),
              1e-12);
    EXPECT_EQ(PreActivation(e_j, e_i, v, zero), base);
  }
}

TEST(SimilarityEvolutionTest, BaseCaseZeroParamsAndOrder) {
  std::mt19937_64 rng(5);
  LstmParams p(3, 4);
  RandomizeBundle(p, rng);
  const Tensor g1 = RandomTensor({1, 3}, rng);
  EXPECT_EQ(SimilarityEvolution(g1, p), LstmCell(g1.Row(0), Tensor({4}), Tensor({4}), p).first);
  EXPECT_EQ(SimilarityEvolution(RandomTensor({5, 3}, rng), LstmParams(3, 4)), Tensor({4}));

  const Tensor g = RandomTensor({6, 3}, rng);
  Tensor reversed({6, 3});
  for (std::size_t s = 0; s < 6; ++s) {
    for (std::size_t c = 0; c < 3; ++c) reversed.at(s, c) = g.at(5 - s, c);
  }
  EXPECT_GT(MaxAbsDiff(SimilarityEvolution(g, p), SimilarityEvolution(reversed, p)), 1e-6);
}

TEST(PredictTest, Examples) {
  const Tensor g = Tensor::Vector({0.4, -0.3}), link = Tensor::Vector({1.0});
  EXPECT_EQ(PredictProbability(g, link, Tensor({3, 1}), Tensor({1})), 0.5);
  EXPECT_NEAR(PredictProbability(g, link, Tensor({3, 1}), Tensor::Vector({2})), 0.88079708,
              1e-8);
  EXPECT_THROW(PredictProbability(g, link, Tensor({2, 1}), Tensor({1})), DimensionError);
}

TEST(PredictTest, MonotoneInPositiveWeightEntries) {
  std::mt19937_64 rng(6);
  const Tensor w = Tensor::Matrix(3, 1, {0.7, -0.2, 0.4});
  Tensor g = RandomTensor({2}, rng);
  const Tensor link = Tensor::Vector({0.1});
  double prev = PredictProbability(g, link, w, Tensor({1}));
  for (int step = 0; step < 10; ++step) {
    g.mutable_data()[0] += 0.25;
    const double next = PredictProbability(g, link, w, Tensor({1}));
    EXPECT_GT(next, prev);
    prev = next;
  }
}

TEST(DsenForwardTest, PaperScaleShapePath) {
  std::mt19937_64 rng(7);
  const ModelDims dims = ModelDims::PaperScale();
  DsenParams p(dims);
  RandomizeBundle(p, rng, 0.1);
  const PairFeatures pair = RandomPair(dims, rng);
  const PairFeatures one[] = {pair};
  const PairBatch batch = MakeBatch(one);
  Tape tape;
  const auto e = EmbedTimesteps(SourceTower(tape, batch), p.gru);
  ASSERT_EQ(e.size(), 15u);
  EXPECT_EQ(e[0].shape(), (Shape{1, 132}));
  const auto g = SimilaritySequence(tape, batch, p.gru, p.views, p.view_bias);
  ASSERT_EQ(g.size(), 15u);
  EXPECT_EQ(g[0].shape(), (Shape{1, 32}));
  const Var evo = SimilarityEvolution(g, p.evolution);
  EXPECT_EQ(evo.shape(), (Shape{1, 64}));
  const Var out = DsenForward(tape, batch, p);
  EXPECT_EQ(out.shape(), (Shape{1, 1}));
  EXPECT_EQ(out.value()[0], DsenForward(pair, p));
}

TEST(DsenForwardTest, SwapSymmetryWithZeroLink) {
  std::mt19937_64 rng(8);
  const ModelDims dims = ToyDims();
  for (int trial = 0; trial < 20; ++trial) {
    DsenParams p(dims);
    RandomizeBundle(p, rng, 1.0);
    PairFeatures pair = RandomPair(dims, rng);
    pair.link = Tensor({dims.link_features});
    PairFeatures swapped = pair;
    std::swap(swapped.source_sequence, swapped.target_sequence);
    std::swap(swapped.source_profile, swapped.target_profile);
    EXPECT_EQ(DsenForward(pair, p), DsenForward(swapped, p));
  }
}

TEST(DsenForwardTest, ZeroSampleZeroParams) {
  const ModelDims dims = ToyDims();
  const PairFeatures pair{Tensor({3, 3}), Tensor({2}), Tensor({3, 3}), Tensor({2}), Tensor({2})};
  EXPECT_EQ(DsenForward(pair, DsenParams(dims)), 0.5);
}

TEST(DsenForwardTest, OutputsAreProbabilities) {
  std::mt19937_64 rng(9);
  const ModelDims dims = ToyDims();
  for (int trial = 0; trial < 50; ++trial) {
    DsenParams p(dims);
    RandomizeBundle(p, rng, 3.0);
    const double prob = DsenForward(RandomPair(dims, rng), p);
    EXPECT_GT(prob, 0.0);
    EXPECT_LT(prob, 1.0);
  }
}

TEST(BceLossTest, Examples) {
  const double half[] = {0.5}, one[] = {1.0}, zero[] = {0.0};
  EXPECT_NEAR(BceLoss(half, one), 0.6931471805599453, 1e-12);
  EXPECT_NEAR(BceLoss(one, one), 0.0, 1e-11);
  EXPECT_NEAR(BceLoss(zero, zero), 0.0, 1e-11);
  EXPECT_TRUE(std::isfinite(BceLoss(zero, one)));
  const double two[] = {0.5, 0.5};
  EXPECT_THROW(BceLoss(two, one), ContractError);
  EXPECT_THROW(BceLoss({}, {}), ContractError);
}

TEST(BceLossTest, LabelSymmetryAndNonNegative) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(5), y(5), q(5), z(5);
    for (int i = 0; i < 5; ++i) {
      p[i] = u(rng);
      y[i] = u(rng) < 0.5 ? 0.0 : 1.0;
      q[i] = 1.0 - p[i];
      z[i] = 1.0 - y[i];
    }
    EXPECT_NEAR(BceLoss(p, y), BceLoss(q, z), 1e-12);
    EXPECT_GE(BceLoss(p, y), 0.0);
  }
}

TEST(DsenGradTest, EndToEndLossGradient) {
  std::mt19937_64 rng(11);
  const ModelDims dims = ToyDims();
  DsenParams p(dims);
  RandomizeBundle(p, rng, 0.8);
  const PairFeatures pairs[] = {RandomPair(dims, rng), RandomPair(dims, rng)};
  PairBatch batch = MakeBatch(pairs);
  batch.labels = {1.0, 0.0};
  const auto params = BundleTensors(p);
  const double err = GradCheck(
      [&](Tape& t) { return BinaryCrossEntropy(DsenForward(t, batch, p), batch.labels); },
      params);
  EXPECT_LT(err, 1e-4);
}

}  // namespace
}  // namespace dsen
