#include <gtest/gtest.h>

#include "test_util.hpp"

namespace ugraph {
namespace {

// A 1-node, 1-layer GCN whose first tensor holds the scalar under test.
ModelParams scalar_model(double theta) {
  ModelParams p = init_params(ModelShape{Arch::kGcn, 1, 1, 1, 1}, std::uint64_t{0});
  p.layer_weights[0](0, 0) = theta;
  p.classifier_weight(0, 0) = 0.0;
  p.classifier_bias = {0.0};
  return p;
}

TEST(AdamTest, ZeroGradientLeavesParamsUnchanged) {
  std::mt19937_64 rng(1);
  ModelParams p = testing::random_params(rng, Arch::kGin, 3, 4, 2);
  const ModelParams before = p;
  AdamState state;
  for (int i = 0; i < 5; ++i) update_params(p, p.zeros_like(), state, 0.1);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step, 5u);
}

// Trajectory from tests/oracles/scalar_oracles.py.
TEST(AdamTest, ScalarTrajectoryMatchesOracle) {
  ModelParams p = scalar_model(1.0);
  ModelParams g = p.zeros_like();
  g.layer_weights[0](0, 0) = 0.5;
  AdamState state;
  const double expected[] = {0.900000002, 0.8000000040000006, 0.7000000060000006, 0.6000000080000011,
                             0.5000000100000013};
  for (double e : expected) {
    update_params(p, g, state, 0.1);
    EXPECT_NEAR(p.layer_weights[0](0, 0), e, 1e-12);
  }
}

TEST(AdamTest, ZeroLearningRateOnlyAdvancesMoments) {
  std::mt19937_64 rng(2);
  ModelParams p = testing::random_params(rng, Arch::kGcn, 3, 4, 2);
  const ModelParams before = p;
  ModelParams g = testing::random_params(rng, Arch::kGcn, 3, 4, 2);
  AdamState state;
  update_params(p, g, state, 0.0);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step, 1u);
  EXPECT_THROW(update_params(p, g, state, -1.0), ContractViolation);
}

TEST(AdamTest, NonFiniteGradientRaisesDivergenceWithoutMutating) {
  std::mt19937_64 rng(3);
  ModelParams p = testing::random_params(rng, Arch::kGcn, 3, 4, 2);
  const ModelParams before = p;
  ModelParams g = p.zeros_like();
  g.classifier_bias[1] = std::numeric_limits<double>::infinity();
  AdamState state;
  EXPECT_THROW(update_params(p, g, state, 0.1), DivergenceError);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step, 0u);
}

TEST(AdamTest, RejectsStructureMismatch) {
  std::mt19937_64 rng(4);
  ModelParams p = testing::random_params(rng, Arch::kGcn, 3, 4, 2);
  const ModelParams g = testing::random_params(rng, Arch::kGin, 3, 4, 2);
  AdamState state;
  EXPECT_THROW(update_params(p, g, state, 0.1), ContractViolation);
}

}  // namespace
}  // namespace ugraph
