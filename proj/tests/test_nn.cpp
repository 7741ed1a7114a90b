#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "roep/checkpoint.hpp"
#include "roep/gradcheck.hpp"
#include "roep/nn.hpp"
#include "toy_reinforce.hpp"

using namespace roep;
using namespace roep::nn;

TEST(Tensor, ShapeAndIndexing) {
  Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_EQ(t.row(1)[0], 4.0);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Affine, IdentityAndConstant) {
  Tensor w({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor b({2}, std::vector<double>{0, 0});
  const std::vector<double> x{3, -4};
  EXPECT_EQ(affine_forward(w, b, x), x);
  Tensor zero({2, 2});
  Tensor c({2}, std::vector<double>{0.5, -1});
  EXPECT_EQ(affine_forward(zero, c, x), (std::vector<double>{0.5, -1}));
}

TEST(Recurrent, ZeroWeightsGiveReluOfBias) {
  Tensor rec({2, 2});
  Tensor in({2, 3});
  Tensor bias({2}, std::vector<double>{0.7, -0.7});
  const std::vector<double> m{1, 2};
  const std::vector<double> c{1, 2, 3};
  EXPECT_EQ(recurrent_cell_forward({rec, in, bias}, m, c), (std::vector<double>{0.7, 0.0}));
}

TEST(Softmax, StableAndUniform) {
  const std::vector<double> equal{2, 2, 2};
  for (double p : softmax(equal)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  const std::vector<double> huge{1000, 0};
  const auto p = softmax(huge);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(p[1]));
  const std::vector<double> bad{1, std::nan("")};
  EXPECT_THROW(softmax(bad), std::invalid_argument);
}

TEST(Softmax, CategoricalFrequencies) {
  Rng rng(3);
  const std::vector<double> logits{std::log(0.2), std::log(0.5), std::log(0.3)};
  std::vector<int> counts(3, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    const auto draw = softmax_categorical(logits, rng);
    ++counts[draw.index];
    EXPECT_NEAR(draw.log_probability, logits[draw.index], 1e-12);
  }
  EXPECT_NEAR(counts[0] / double(n), 0.2, 0.01);
  EXPECT_NEAR(counts[1] / double(n), 0.5, 0.01);
}

TEST(Losses, KnownValues) {
  EXPECT_NEAR(bce(true, 0.5), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isfinite(bce(true, 0.0)));
  const std::vector<double> logits{0.0, 0.0};
  EXPECT_NEAR(bce_loss(false, logits).loss, std::log(2.0), 1e-15);

  const std::vector<std::vector<double>> step_logits{{0.1, 0.2, 0.3}};
  const std::vector<std::size_t> actions{1};
  const std::vector<double> r{0.8};
  const auto zero = reinforce_loss(step_logits, actions, r, r);
  EXPECT_EQ(zero.loss, 0.0);
  for (double g : zero.logit_grads[0]) EXPECT_EQ(g, 0.0);
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(reinforce_loss(step_logits, actions, r, two), std::invalid_argument);

  const std::vector<double> ret{1.5};
  const std::vector<double> base{0.0};
  EXPECT_DOUBLE_EQ(baseline_loss(ret, base).loss, 2.25);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Parameter p("w", Tensor({3}, std::vector<double>{1, 1, 1}));
  p.grad[0] = 5.0;
  p.grad[1] = -0.01;
  p.grad[2] = 0.0;
  Adam adam;
  std::vector<Parameter*> params{&p};
  adam.step(params, 1e-3);
  EXPECT_NEAR(p.value[0], 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(p.value[1], 1.0 + 1e-3, 1e-8);
  EXPECT_EQ(p.value[2], 1.0);
  EXPECT_EQ(adam.steps(), 1);
  for (double g : p.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Adam, ZeroGradientAfterDecayLeavesParameterAlone) {
  Parameter p("w", Tensor({1}, std::vector<double>{2.0}));
  Adam adam;
  std::vector<Parameter*> params{&p};
  p.grad[0] = 1.0;
  adam.step(params, 1e-2);
  for (int i = 0; i < 20000; ++i) adam.step(params, 1e-2);
  const double settled = p.value[0];
  adam.step(params, 1e-2);
  EXPECT_EQ(p.value[0], settled);
  EXPECT_EQ(p.adam_m[0], 0.0);
}

TEST(Gradcheck, EveryLayerAndLossMatchesFiniteDifferences) {
  Rng rng(21);
  const auto entries = layer_gradchecks(rng, 20);
  EXPECT_EQ(entries.size(), 8u);
  for (const auto& e : entries) EXPECT_TRUE(e.passed()) << e.name << " " << e.max_relative_error;
}

TEST(Gradcheck, NumericGradientOfQuadratic) {
  std::vector<double> x{1.0, -2.0};
  const auto g = numeric_gradient([&x] { return x[0] * x[0] + 3.0 * x[1]; }, x);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g[1], 3.0, 1e-8);
  EXPECT_EQ(x, (std::vector<double>{1.0, -2.0}));
}

TEST(Reinforce, EstimatorIsUnbiasedOnEnumerableProblem) {
  const auto toy = roep::testing::default_toy_problem();
  Rng rng(17);
  const auto stats = roep::testing::sample_reinforce_gradient(toy, 20000, rng);
  EXPECT_LT(roep::testing::worst_z_score(toy, stats), 4.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(2);
  Tensor a({3, 4});
  init_uniform(a, 1.0, rng);
  a[5] = -0.0;
  a[6] = 1e-310;
  const std::vector<NamedTensor> tensors{{"layer.weight", a}, {"step", Tensor({1}, std::vector<double>{7})}};
  std::stringstream buffer;
  write_checkpoint(buffer, tensors);
  const auto back = read_checkpoint(buffer);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back, tensors);
  EXPECT_TRUE(std::signbit(back[0].tensor[5]));
}

TEST(Checkpoint, MalformedStreamsThrow) {
  std::stringstream bad_magic("NOPE");
  EXPECT_THROW(read_checkpoint(bad_magic), std::runtime_error);
  std::stringstream buffer;
  write_checkpoint(buffer, {{"w", Tensor({4}, 1.0)}});
  const std::string full = buffer.str();
  std::stringstream truncated(full.substr(0, full.size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), std::runtime_error);
  EXPECT_THROW(load_checkpoint(std::filesystem::temp_directory_path() / "roep-missing.ckpt"), std::runtime_error);
}
