#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dsen/grad_check.h"
#include "dsen/tape.h"
#include "test_util.h"

namespace dsen {
namespace {

using testing::RandomTensor;

TEST(BackwardTest, GradientOfSumIsOnes) {
  std::mt19937_64 rng(1);
  const Tensor x = RandomTensor({3, 4}, rng);
  Tape tape;
  const Var loss = SumAll(tape.Param(x));
  tape.Backward(loss);
  EXPECT_EQ(tape.GradOf(x), Tensor(x.shape(), 1.0));
}

TEST(BackwardTest, SigmoidSlopeAtZero) {
  const Tensor x = Tensor::Vector({0.0});
  Tape tape;
  tape.Backward(SumAll(Sigmoid(tape.Param(x))));
  EXPECT_DOUBLE_EQ(tape.GradOf(x)[0], 0.25);
}

TEST(BackwardTest, NonScalarSeedIsContractError) {
  const Tensor x = Tensor::Vector({1.0, 2.0});
  Tape tape;
  const Var y = Sigmoid(tape.Param(x));
  EXPECT_THROW(tape.Backward(y), ContractError);
}

TEST(BackwardTest, SharedParameterAccumulatesAcrossUses) {
  const Tensor x = Tensor::Vector({1.5, -2.0});
  Tape tape;
  const Var a = tape.Param(x);
  const Var b = tape.Param(x);
  EXPECT_EQ(a.id(), b.id());
  // d/dx Σ x⊙x = 2x
  tape.Backward(SumAll(Hadamard(a, b)));
  EXPECT_EQ(tape.GradOf(x), Tensor::Vector({3.0, -4.0}));
}

TEST(BackwardTest, UnusedParameterHasZeroGradient) {
  const Tensor x = Tensor::Vector({1.0});
  const Tensor unused = Tensor::Vector({5.0, 6.0});
  Tape tape;
  tape.Backward(SumAll(tape.Param(x)));
  EXPECT_EQ(tape.GradOf(unused), Tensor(unused.shape()));
}

// grad(a f + b g) = a grad f + b grad g on random composites.
TEST(BackwardTest, Linearity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    Tensor w = RandomTensor({4, 3}, rng);
    Tensor x = RandomTensor({2, 4}, rng);
    const double a = coef(rng), b = coef(rng);
    auto f = [&](Tape& t) { return SumAll(Tanh(MatMul(t.Param(x), t.Param(w)))); };
    auto g = [&](Tape& t) {
      const Var xw = MatMul(t.Param(x), t.Param(w));
      return SumAll(Hadamard(Sigmoid(xw), xw));
    };
    auto grads = [&](auto fn) {
      Tape t;
      t.Backward(fn(t));
      return std::pair{t.GradOf(w), t.GradOf(x)};
    };
    const auto [fw, fx] = grads(f);
    const auto [gw, gx] = grads(g);
    const auto [cw, cx] = grads([&](Tape& t) { return Add(Scale(f(t), a), Scale(g(t), b)); });
    EXPECT_LE(MaxAbsDiff(cw, Add(Scale(fw, a), Scale(gw, b))), 1e-10);
    EXPECT_LE(MaxAbsDiff(cx, Add(Scale(fx, a), Scale(gx, b))), 1e-10);
  }
}

TEST(GradCheckTest, LinearFunctionIsExact) {
  Tensor x = Tensor::Vector({0.7});
  Tensor* params[] = {&x};
  const double err = GradCheck([&](Tape& t) { return Scale(SumAll(t.Param(x)), 3.0); },
                               params, 1e-5);
  EXPECT_LE(err, 1e-9);
}

TEST(GradCheckTest, SquareAtOne) {
  Tensor x = Tensor::Vector({1.0});
  Tensor* params[] = {&x};
  const auto r = GradCheckDetailed(
      [&](Tape& t) {
        const Var v = t.Param(x);
        return SumAll(Hadamard(v, v));
      },
      params, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradCheckTest, NonFiniteFunctionIsEvaluationError) {
  Tensor x = Tensor::Vector({1.0});
  Tensor* params[] = {&x};
  EXPECT_THROW(GradCheck(
                   [&](Tape& t) {
                     return Scale(SumAll(t.Param(x)),
                                  std::numeric_limits<double>::infinity());
                   },
                   params),
               EvaluationError);
}

// Each differentiable primitive, composed with a random linear read-out so
// gradients are not degenerate.
class PrimitiveGradTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng{99};

  double Check(const std::function<Var(Tape&)>& build, std::vector<Tensor*> params) {
    Tensor readout;
    const ScalarFn f = [&](Tape& t) {
      const Var out = build(t);
      if (readout.shape() != out.shape()) readout = RandomTensor(out.shape(), rng);
      return SumAll(Hadamard(out, t.Constant(readout)));
    };
    {
      Tape probe;
      f(probe);
    }
    return GradCheck(f, params, 1e-5);
  }
};

TEST_F(PrimitiveGradTest, AllPrimitivesPass) {
  Tensor a = RandomTensor({3, 4}, rng);
  Tensor b = RandomTensor({4, 2}, rng);
  Tensor c = RandomTensor({3, 4}, rng);
  Tensor d = RandomTensor({5, 4}, rng);
  Tensor bias = RandomTensor({4}, rng);
  Tensor col = RandomTensor({3, 1}, rng);

  EXPECT_LT(Check([&](Tape& t) { return MatMul(t.Param(a), t.Param(b)); }, {&a, &b}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return MatMulTransposedB(t.Param(a), t.Param(d)); },
                  {&a, &d}),
            1e-4);
  EXPECT_LT(Check([&](Tape& t) { return AddBias(t.Param(a), t.Param(bias)); }, {&a, &bias}),
            1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Add(t.Param(a), t.Param(c)); }, {&a, &c}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Sub(t.Param(a), t.Param(c)); }, {&a, &c}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Hadamard(t.Param(a), t.Param(c)); }, {&a, &c}),
            1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Scale(t.Param(a), -1.7); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return OneMinus(t.Param(a)); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Sigmoid(t.Param(a)); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Tanh(t.Param(a)); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return Relu(t.Param(a)); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return SoftmaxRows(t.Param(a)); }, {&a}), 1e-4);
  EXPECT_LT(Check(
                [&](Tape& t) {
                  const Var parts[] = {t.Param(a), t.Param(c)};
                  return ConcatCols(parts);
                },
                {&a, &c}),
            1e-4);
  EXPECT_LT(Check([&](Tape& t) { return SliceCols(t.Param(a), 1, 3); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return SumAll(t.Param(a)); }, {&a}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return RowDot(t.Param(a), t.Param(c)); }, {&a, &c}), 1e-4);
  EXPECT_LT(Check([&](Tape& t) { return ScaleRows(t.Param(a), t.Param(col)); }, {&a, &col}),
            1e-4);

  Tensor probs = Sigmoid(RandomTensor({6, 1}, rng, 2.0));
  const std::vector<double> labels = {1, 0, 0, 1, 1, 0};
  Tensor* pp[] = {&probs};
  EXPECT_LT(GradCheck([&](Tape& t) { return BinaryCrossEntropy(t.Param(probs), labels); },
                      pp),
            1e-4);
}

TEST(TapeTest, BackwardVisitsNodesInReverseOrder) {
  std::vector<std::size_t> visited;
  const Tensor x = Tensor::Vector({1.0, 2.0});
  Tape tape;
  Var v = tape.Param(x);
  for (int i = 0; i < 4; ++i) {
    const Var in = v;
    v = tape.Record(v.value(), {in}, [&visited, id = tape.size(), in](Tape& t,
                                                                        const Tensor& g) {
      visited.push_back(id);
      t.Accumulate(in.id(), g);
    });
  }
  tape.Backward(SumAll(v));
  ASSERT_EQ(visited.size(), 4u);
  for (std::size_t i = 1; i < visited.size(); ++i) EXPECT_GT(visited[i - 1], visited[i]);
  EXPECT_EQ(tape.GradOf(x), Tensor(x.shape(), 1.0));
}

}  // namespace
}  // namespace dsen
