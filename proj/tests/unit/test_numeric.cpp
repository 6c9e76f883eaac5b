#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "distract/core/gradcheck.hpp"
#include "distract/core/graph.hpp"
#include "distract/core/math.hpp"
#include "distract/model/network.hpp"
#include "distract/model/parameters.hpp"
#include "support/fixtures.hpp"

namespace distract {
namespace {

using testing::ref_softmax;

TEST(Softmax, ZerosAreUniform) {
  const auto p = softmax(std::vector<double>{0, 0, 0});
  for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
}

TEST(Softmax, SingleElementIsOne) {
  for (double x : {-1e3, 0.0, 42.0, 7e2}) EXPECT_EQ(softmax(std::vector<double>{x})[0], 1.0);
}

TEST(Softmax, MatchesScalarReference) {
  const std::vector<double> v{1, 2, 3};
  const auto p = softmax(v);
  const auto ref = ref_softmax(v);
  // Frozen from a direct exp/sum evaluation.
  const double frozen[] = {0.09003057317038046, 0.24472847105479764, 0.6652409557748218};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(p[i], ref[i], 1e-15);
    EXPECT_NEAR(p[i], frozen[i], 1e-15);
  }
}

TEST(Softmax, EmptyInputIsUsageError) {
  EXPECT_THROW(softmax(std::vector<double>{}), UsageError);
}

TEST(Softmax, LargeInputsDoNotOverflow) {
  const auto p = softmax(std::vector<double>{1000, 1001});
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  EXPECT_GT(p[0], 0.0);
}

TEST(Softmax, ShiftInvariance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = testing::random_vec(rng, 1 + static_cast<std::size_t>(trial % 9), 5.0);
    auto w = v;
    const double k = shift(rng);
    for (double& x : w) x += k;
    const auto a = softmax(v);
    const auto b = softmax(w);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LT(std::abs(a[i] - b[i]), 1e-12);
      EXPECT_GT(a[i], 0.0);
      total += a[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Softmax, MaskedPositionsGetExactlyZero) {
  const std::vector<unsigned char> mask{1, 0, 1};
  const auto p = softmax(std::vector<double>{1, 50, 1}, mask);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_THROW(softmax(std::vector<double>{1, 2}, std::vector<unsigned char>{0, 0}), UsageError);
}

TEST(Nonlinearity, SymmetryPoints) {
  EXPECT_EQ(nonlinearity(std::vector<double>{0.0}, Nonlinearity::kSigmoid)[0], 0.5);
  EXPECT_EQ(nonlinearity(std::vector<double>{0.0}, Nonlinearity::kTanh)[0], 0.0);
}

TEST(Nonlinearity, SigmoidOfTwo) {
  const double s = nonlinearity(std::vector<double>{2.0}, Nonlinearity::kSigmoid)[0];
  EXPECT_NEAR(s, testing::ref_sigmoid(2.0), 1e-16);
  EXPECT_NEAR(s, 0.8807970779778823, 1e-15);
}

TEST(Nonlinearity, RangesAndRejection) {
  std::mt19937_64 rng(3);
  const auto v = testing::random_vec(rng, 100, 10.0);
  for (double x : nonlinearity(v, Nonlinearity::kSigmoid)) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  for (double x : nonlinearity(v, Nonlinearity::kTanh)) {
    EXPECT_GT(x, -1.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_THROW(nonlinearity(std::vector<double>{NAN}, Nonlinearity::kTanh), UsageError);
  EXPECT_THROW(nonlinearity(std::vector<double>{INFINITY}, Nonlinearity::kSigmoid), UsageError);
}

TEST(Backward, SumOfParameterGivesOnes) {
  Tensor p({2, 3}, {1, -2, 3, 4, 5, -6});
  Tensor grad({2, 3});
  ad::Graph g;
  const auto loss = g.sum_all(g.param(p, &grad));
  g.backward(loss);
  for (double x : grad.data()) EXPECT_EQ(x, 1.0);
}

TEST(Backward, TanhOfScaledInput) {
  for (double w : {-1.3, 0.0, 0.4, 2.5}) {
    Tensor weight({1, 1}, {w});
    Tensor grad({1, 1});
    ad::Graph g;
    const auto loss = g.tanh(g.matvec(g.param(weight, &grad), g.input({1.0})));
    g.backward(loss);
    EXPECT_NEAR(grad[0], 1.0 - std::tanh(w) * std::tanh(w), 1e-15);
  }
}

TEST(Backward, NonScalarLossIsUsageError) {
  ad::Graph g;
  const auto v = g.input({1.0, 2.0});
  EXPECT_THROW(g.backward(g.tanh(v)), UsageError);
}

TEST(Graph, ShapeMismatchIsUsageError) {
  Tensor m({2, 3});
  ad::Graph g;
  EXPECT_THROW(g.matvec(g.param(m), g.input({1.0, 2.0})), UsageError);
  EXPECT_THROW(g.add(g.input({1.0}), g.input({1.0, 2.0})), UsageError);
}

TEST(Graph, NodesOnlyReadEarlierNodes) {
  ad::Graph g;
  const auto a = g.input({1.0, 2.0});
  const auto b = g.tanh(a);
  const auto c = g.add(a, b);
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_EQ(g.size(), 3u);
}

// Every primitive against central differences, through a scalar loss that
// mixes all outputs with fixed random weights.
TEST(Backward, EveryPrimitiveMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  ParameterSet params;
  params.emplace("M", Tensor({3, 4}, testing::random_vec(rng, 12)));
  params.emplace("B", Tensor({5, 4}, testing::random_vec(rng, 20)));
  params.emplace("x", Tensor({4}, testing::random_vec(rng, 4)));
  params.emplace("y", Tensor({3}, testing::random_vec(rng, 3)));
  params.emplace("z", Tensor({3}, testing::random_vec(rng, 3)));
  params.emplace("w", Tensor({4}, testing::random_vec(rng, 4)));
  const auto mix = testing::random_vec(rng, 64);

  auto build = [&](ad::Graph& g, ParameterSet* grads) {
    auto bind = [&](const char* n) { return g.param(params.at(n), grads ? &grads->at(n) : nullptr); };
    const auto M = bind("M"), B = bind("B"), x = bind("x"), y = bind("y"), z = bind("z"), w = bind("w");
    const auto mx = g.matvec(M, x);                  // 3
    const auto mty = g.mattvec(M, y);                // 4
    const auto mbt = g.matmul_bt(M, B);              // 3 x 5
    const auto ar = g.tanh(g.add_row(M, w));         // 3 x 4
    const auto outer = g.outer(z, w);                // 3 x 4
    const auto prod = g.mul(g.sigmoid(mx), g.sub(y, z));
    const auto cat = g.concat(prod, mty);            // 7
    const auto sm = g.softmax(cat);
    const auto nl = g.neg_log_at(sm, 2);
    const auto rows = g.stack_rows(std::vector<ad::NodeId>{y, z, mx});  // 3 x 3
    const auto look = g.lookup(B, 3);
    std::vector<ad::NodeId> terms = {
        g.scale(nl, mix[0]),
        g.scale(g.sum_all(g.mul(ar, outer)), mix[1]),
        g.scale(g.sum_all(g.tanh(mbt)), mix[2]),
        g.scale(g.sum_all(g.mul(rows, rows)), mix[3]),
        g.scale(g.sum_all(g.mul(look, mty)), mix[4]),
    };
    return g.add_n(terms);
  };

  ParameterSet grads = zeros_like(params);
  ad::Graph g;
  g.backward(build(g, &grads));
  const auto report = check_gradients(params, grads, [&](const ParameterSet&) {
    ad::Graph fg;
    return fg.scalar(build(fg, nullptr));
  });
  EXPECT_LT(report.max_relative_error, 1e-7) << report.parameter << "[" << report.index << "]";
}

TEST(Backward, MaskedSoftmaxPassesNoGradientToMaskedScores) {
  Tensor scores({3}, {0.2, -0.4, 1.1});
  Tensor grad({3});
  ad::Graph g;
  const auto p = g.softmax(g.param(scores, &grad), {1, 0, 1});
  g.backward(g.neg_log_at(p, 0));
  EXPECT_EQ(grad[1], 0.0);
  EXPECT_NE(grad[0], 0.0);
}

TEST(Backward, FloorStopsGradientOfVanishingProbability) {
  Tensor logits({2}, {0.0, 800.0});
  Tensor grad({2});
  ad::Graph g;
  const auto loss = g.neg_log_at(g.softmax(g.param(logits, &grad)), 0);
  EXPECT_NEAR(g.scalar(loss), -std::log(kProbabilityFloor), 1e-9);
  g.backward(loss);
  EXPECT_EQ(grad[0], 0.0);
  EXPECT_EQ(grad[1], 0.0);
}

TEST(Backward, DeterministicForFixedInputs) {
  const ModelConfig config = testing::tiny_config();
  const ParameterSet params = init_parameters(config, 5, 0.3);
  const std::vector<int> src{4, 5, 2, 6, 3}, tgt{5, 6, 3};
  auto run = [&] {
    ParameterSet grads = zeros_like(params);
    ad::Graph g;
    const ModelNodes m = bind_model(g, config, params, &grads);
    g.backward(sequence_nll(g, m, config, src, tgt));
    return grads;
  };
  EXPECT_EQ(run(), run());
}

TEST(GradientCheck, TinyModelOneStep) {
  const ModelConfig config = testing::tiny_config();
  ParameterSet params = init_parameters(config, 21, 0.5);
  const std::vector<int> src{4, 5, 6, 2, 4, 3};
  const std::vector<int> tgt{6};
  ParameterSet grads = zeros_like(params);
  ad::Graph g;
  const ModelNodes m = bind_model(g, config, params, &grads);
  g.backward(sequence_nll(g, m, config, src, tgt));
  const auto report = check_gradients(params, grads, [&](const ParameterSet& p) {
    return evaluate_nll(config, p, src, tgt);
  });
  EXPECT_LT(report.max_relative_error, 1e-4)
      << report.parameter << "[" << report.index << "] analytic=" << report.analytic
      << " numeric=" << report.numeric;
}

}  // namespace
}  // namespace distract
