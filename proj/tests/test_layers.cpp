#include <gtest/gtest.h>

#include <cmath>

#include "oracles/direct_conv.hpp"
#include "oracles/finite_difference.hpp"
#include "oracles/random_tensors.hpp"
#include "sgrt/layers.hpp"

namespace sgrt {
namespace {

using oracle::check_gradient;
using oracle::dot;
using oracle::fill_normal;
using oracle::random_batch;

SeparableConvParams<double> random_conv(int in, int out, int stride, Rng& rng) {
  auto p = SeparableConvParams<double>::zeros(in, out, stride);
  fill_normal(p.depthwise, rng);
  fill_normal(p.pointwise, rng);
  fill_normal(p.bias, rng);
  return p;
}

// --- separable convolution ---------------------------------------------------

TEST(SeparableConv, IdentityKernelsReproduceInput) {
  Rng rng(1);
  const auto in = random_batch<float>(2, {5, 6, 3}, rng);
  const auto out = separable_conv_forward(in, SeparableConvParams<float>::identity(3));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], in[0]);
  EXPECT_EQ(out[1], in[1]);
}

TEST(SeparableConv, OnesKernelCountsCoveredTaps) {
  auto p = SeparableConvParams<float>::zeros(1, 1, 1);
  std::fill(p.depthwise.begin(), p.depthwise.end(), 1.0f);
  p.pointwise[0] = 2.0f;
  const Tensor in = tensor_filled({3, 3, 1}, 1.0f);
  const Tensor out = separable_conv_forward(in, p);
  EXPECT_FLOAT_EQ(out.at(1, 1, 0), 18.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), 8.0f);
  EXPECT_FLOAT_EQ(out.at(0, 2, 0), 8.0f);
  EXPECT_FLOAT_EQ(out.at(2, 0, 0), 8.0f);
  EXPECT_FLOAT_EQ(out.at(2, 2, 0), 8.0f);
  EXPECT_FLOAT_EQ(out.at(0, 1, 0), 12.0f);
}

TEST(SeparableConv, Stride2MatchesDirectConvolution) {
  Rng rng(7);
  const auto p = random_conv(4, 6, 2, rng);
  const auto in = random_batch<double>(1, {8, 8, 4}, rng).front();
  const auto expected = oracle::direct_separable_conv(in, p);
  const auto actual = separable_conv_forward(in.cast<float>(), p.cast<float>());
  ASSERT_EQ(actual.shape(), (Shape{4, 4, 6}));
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(actual[i], expected[i], 1e-5 * std::max(1.0, std::abs(expected[i])));
}

TEST(SeparableConv, Stride1MatchesDirectConvolution) {
  Rng rng(8);
  const auto p = random_conv(3, 5, 1, rng);
  const auto in = random_batch<double>(1, {7, 5, 3}, rng).front();
  const auto expected = oracle::direct_separable_conv(in, p);
  const auto actual = separable_conv_forward(in, p);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(actual[i], expected[i], 1e-12);
}

TEST(SeparableConv, SpatialDimsPreservedOrHalved) {
  for (auto [h, w] : {std::pair{4, 4}, std::pair{6, 10}, std::pair{8, 2}}) {
    const Tensor in({h, w, 2});
    EXPECT_EQ(separable_conv_forward(in, SeparableConvParams<float>::zeros(2, 3, 1)).shape(), (Shape{h, w, 3}));
    EXPECT_EQ(separable_conv_forward(in, SeparableConvParams<float>::zeros(2, 3, 2)).shape(), (Shape{h / 2, w / 2, 3}));
  }
}

TEST(SeparableConv, Errors) {
  const Batch in{Tensor({4, 4, 3})};
  EXPECT_THROW(separable_conv_forward(in, SeparableConvParams<float>::zeros(2, 3, 1)), ShapeError);
  const Batch odd{Tensor({5, 4, 2})};
  EXPECT_THROW(separable_conv_forward(odd, SeparableConvParams<float>::zeros(2, 3, 2)), PreconditionError);
  EXPECT_THROW(SeparableConvParams<float>::zeros(2, 3, 3), PreconditionError);
}

TEST(SeparableConvBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(3);
  const auto p = random_conv(2, 3, 1, rng);
  const auto in = random_batch<double>(2, {4, 4, 2}, rng);
  const BasicBatch<double> zero(2, BasicTensor<double>(Shape{4, 4, 3}));
  const auto [gx, gp] = separable_conv_backward(in, p, zero);
  for (const auto& t : gx)
    for (double v : t.values()) EXPECT_EQ(v, 0.0);
  for (double v : gp.depthwise) EXPECT_EQ(v, 0.0);
  for (double v : gp.pointwise) EXPECT_EQ(v, 0.0);
  for (double v : gp.bias) EXPECT_EQ(v, 0.0);
}

TEST(SeparableConvBackward, IdentityParamsPassGradientThrough) {
  Rng rng(4);
  const auto in = random_batch<double>(1, {4, 5, 3}, rng);
  const auto g = random_batch<double>(1, {4, 5, 3}, rng);
  const auto [gx, gp] = separable_conv_backward(in, SeparableConvParams<double>::identity(3), g);
  for (std::size_t i = 0; i < g[0].size(); ++i) EXPECT_DOUBLE_EQ(gx[0][i], g[0][i]);
}

void check_conv_gradients(int stride, std::uint64_t seed) {
  Rng rng(seed);
  auto p = random_conv(2, 3, stride, rng);
  auto in = random_batch<double>(2, {4, 4, 2}, rng);
  const Shape out_shape = separable_conv_output_shape({4, 4, 2}, 3, stride);
  const auto probe = random_batch<double>(2, out_shape, rng);
  auto loss = [&] { return dot(separable_conv_forward(in, p), probe); };
  const auto [gx, gp] = separable_conv_backward(in, p, probe);

  EXPECT_LT(check_gradient(p.depthwise, gp.depthwise, loss).max_relative_error, 1e-5);
  EXPECT_LT(check_gradient(p.pointwise, gp.pointwise, loss).max_relative_error, 1e-5);
  EXPECT_LT(check_gradient(p.bias, gp.bias, loss).max_relative_error, 1e-5);
  for (std::size_t n = 0; n < in.size(); ++n)
    EXPECT_LT(check_gradient(in[n].values(), gx[n].values(), loss).max_relative_error, 1e-5);
}

TEST(SeparableConvBackward, MatchesFiniteDifferencesStride1) { check_conv_gradients(1, 11); }
TEST(SeparableConvBackward, MatchesFiniteDifferencesStride2) { check_conv_gradients(2, 12); }

TEST(SeparableConvBackward, RejectsWrongUpstreamShape) {
  const BasicBatch<double> in{BasicTensor<double>({4, 4, 2})};
  const BasicBatch<double> g{BasicTensor<double>({4, 4, 2})};
  EXPECT_THROW(separable_conv_backward(in, SeparableConvParams<double>::zeros(2, 3, 1), g), ShapeError);
}

// --- batch norm --------------------------------------------------------------

TEST(BatchNorm, InferIdentity) {
  Rng rng(5);
  const auto in = random_batch<float>(2, {3, 3, 2}, rng);
  const auto out = batch_norm_forward(in, BatchNormParams<float>::identity(2, 0.0f), Mode::kInfer);
  EXPECT_EQ(out.output, in);
}

TEST(BatchNorm, InferDirectSubstitution) {
  BatchNormParams<float> p;
  p.gamma = {2.0f};
  p.beta = {3.0f};
  p.running_mean = {1.0f};
  p.running_var = {4.0f};
  p.epsilon = 0.0f;
  const Batch in{tensor_filled({1, 1, 1}, 5.0f)};
  EXPECT_FLOAT_EQ(batch_norm_forward(in, p, Mode::kInfer).output[0][0], 7.0f);
}

TEST(BatchNorm, TrainStandardizes) {
  Rng rng(6);
  auto in = random_batch<double>(3, {4, 5, 2}, rng);
  for (auto& t : in)
    for (std::size_t i = 0; i < t.size(); i += 2) t[i] = 3.0 * t[i] + 5.0;
  const auto r = batch_norm_forward(in, BatchNormParams<double>::identity(2), Mode::kTrain);
  for (int c = 0; c < 2; ++c) {
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const auto& t : r.output)
      for (std::size_t i = c; i < t.size(); i += 2) {
        sum += t[i];
        sq += t[i] * t[i];
        count += 1.0;
      }
    const double mean = sum / count;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / count - mean * mean, 1.0, 1e-4);
  }
}

TEST(BatchNorm, TrainUpdatesRunningStatsWithMomentum) {
  const Batch in{Tensor(Shape{1, 2, 1}, std::vector<float>{1.0f, 3.0f})};
  const auto p = BatchNormParams<float>::identity(1);
  const auto r = batch_norm_forward(in, p, Mode::kTrain);
  EXPECT_FLOAT_EQ(r.stats.mean[0], 2.0f);
  EXPECT_FLOAT_EQ(r.stats.variance[0], 1.0f);
  EXPECT_FLOAT_EQ(r.updated_running_mean[0], 0.9f * 0.0f + 0.1f * 2.0f);
  EXPECT_FLOAT_EQ(r.updated_running_var[0], 0.9f * 1.0f + 0.1f * 1.0f);
  // Parameters themselves are untouched.
  EXPECT_EQ(p.running_mean[0], 0.0f);
}

TEST(BatchNorm, ChannelMismatch) {
  const Batch in{Tensor({2, 2, 3})};
  EXPECT_THROW(batch_norm_forward(in, BatchNormParams<float>::identity(2), Mode::kInfer), ShapeError);
}

TEST(BatchNormBackward, ZeroUpstream) {
  Rng rng(9);
  const auto in = random_batch<double>(2, {3, 3, 2}, rng);
  auto p = BatchNormParams<double>::identity(2);
  const auto fwd = batch_norm_forward(in, p, Mode::kTrain);
  const BasicBatch<double> zero(2, BasicTensor<double>({3, 3, 2}));
  const auto [gx, gp] = batch_norm_backward(in, p, fwd.stats, zero);
  for (const auto& t : gx)
    for (double v : t.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(gp.gamma, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(gp.beta, (std::vector<double>{0.0, 0.0}));
}

TEST(BatchNormBackward, ConstantUpstreamBetaGradientIsSum) {
  Rng rng(10);
  const auto in = random_batch<double>(2, {3, 3, 2}, rng);
  const auto p = BatchNormParams<double>::identity(2);
  const auto fwd = batch_norm_forward(in, p, Mode::kTrain);
  const BasicBatch<double> g(2, BasicTensor<double>({3, 3, 2}, 0.5));
  const auto [gx, gp] = batch_norm_backward(in, p, fwd.stats, g);
  EXPECT_DOUBLE_EQ(gp.beta[0], 0.5 * 18);
  EXPECT_DOUBLE_EQ(gp.beta[1], 0.5 * 18);
}

TEST(BatchNormBackward, MatchesFiniteDifferences) {
  Rng rng(13);
  auto in = random_batch<double>(2, {3, 3, 2}, rng);
  auto p = BatchNormParams<double>::identity(2);
  fill_normal(p.gamma, rng);
  fill_normal(p.beta, rng);
  const auto probe = random_batch<double>(2, {3, 3, 2}, rng);
  auto loss = [&] { return dot(batch_norm_forward(in, p, Mode::kTrain).output, probe); };
  const auto fwd = batch_norm_forward(in, p, Mode::kTrain);
  const auto [gx, gp] = batch_norm_backward(in, p, fwd.stats, probe);
  EXPECT_LT(check_gradient(p.gamma, gp.gamma, loss).max_relative_error, 1e-5);
  EXPECT_LT(check_gradient(p.beta, gp.beta, loss).max_relative_error, 1e-5);
  for (std::size_t n = 0; n < in.size(); ++n)
    EXPECT_LT(check_gradient(in[n].values(), gx[n].values(), loss).max_relative_error, 1e-5);
}

TEST(BatchNormBackward, RequiresTrainStats) {
  const BasicBatch<double> in{BasicTensor<double>({2, 2, 1})};
  EXPECT_THROW(batch_norm_backward(in, BatchNormParams<double>::identity(1), BatchNormStats<double>{}, in), StateError);
}

// --- LeakyReLU, upsample, concat, sigmoid ------------------------------------

TEST(LeakyRelu, Values) {
  const Tensor t(Shape{1, 3, 1}, std::vector<float>{1.0f, -2.0f, 0.0f});
  const Tensor out = leaky_relu_forward(t, 0.01f);
  EXPECT_EQ(out[0], 1.0f);
  EXPECT_FLOAT_EQ(out[1], -0.02f);
  EXPECT_EQ(out[2], 0.0f);
  const Tensor g = leaky_relu_backward(t, tensor_filled({1, 3, 1}, 2.0f), 0.01f);
  EXPECT_EQ(g[0], 2.0f);
  EXPECT_FLOAT_EQ(g[1], 0.02f);
  EXPECT_EQ(g[2], 2.0f);
}

TEST(LeakyRelu, MatchesFiniteDifferences) {
  Rng rng(14);
  auto in = random_batch<double>(1, {4, 4, 3}, rng);
  const auto probe = random_batch<double>(1, {4, 4, 3}, rng);
  auto loss = [&] { return dot(BasicBatch<double>{leaky_relu_forward(in[0], 0.01)}, probe); };
  const auto g = leaky_relu_backward(in[0], probe[0], 0.01);
  EXPECT_LT(check_gradient(in[0].values(), g.values(), loss).max_relative_error, 1e-5);
}

TEST(Upsample, ReplicatesNearestNeighbor) {
  const Tensor t(Shape{2, 2, 1}, std::vector<float>{1, 2, 3, 4});
  const Tensor u = upsample2x_forward(t);
  ASSERT_EQ(u.shape(), (Shape{4, 4, 1}));
  const std::vector<float> expected{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  EXPECT_EQ(std::vector<float>(u.values().begin(), u.values().end()), expected);
  EXPECT_EQ(upsample2x_forward(Tensor({3, 5, 7})).shape(), (Shape{6, 10, 7}));
}

TEST(Upsample, BackwardSumsBlocks) {
  const Tensor g = upsample2x_backward(tensor_filled({4, 4, 1}, 1.0f));
  ASSERT_EQ(g.shape(), (Shape{2, 2, 1}));
  for (float v : g.values()) EXPECT_EQ(v, 4.0f);
}

TEST(Upsample, MatchesFiniteDifferences) {
  Rng rng(15);
  auto in = random_batch<double>(1, {2, 3, 2}, rng);
  const auto probe = random_batch<double>(1, {4, 6, 2}, rng);
  auto loss = [&] { return dot(BasicBatch<double>{upsample2x_forward(in[0])}, probe); };
  const auto g = upsample2x_backward(probe[0]);
  EXPECT_LT(check_gradient(in[0].values(), g.values(), loss).max_relative_error, 1e-5);
}

TEST(Concat, ChannelCountsFromArchitecture) {
  EXPECT_EQ(concat_channels(Tensor({2, 3, 24}), Tensor({2, 3, 16})).channels(), 40);
  EXPECT_EQ(concat_channels(Tensor({2, 3, 16}), Tensor({2, 3, 8})).channels(), 24);
  EXPECT_THROW(concat_channels(Tensor({2, 3, 1}), Tensor({2, 4, 1})), ShapeError);
}

TEST(Concat, SplitRecoversInputs) {
  Rng rng(16);
  const auto a = oracle::random_normal<float>({3, 2, 4}, rng);
  const auto b = oracle::random_normal<float>({3, 2, 3}, rng);
  const auto cat = concat_channels(a, b);
  EXPECT_EQ(cat.at(1, 1, 0), a.at(1, 1, 0));
  EXPECT_EQ(cat.at(1, 1, 4), b.at(1, 1, 0));
  const auto [a2, b2] = split_channels(cat, 4);
  EXPECT_EQ(a2, a);
  EXPECT_EQ(b2, b);
}

TEST(Sigmoid, Values) {
  const Tensor t(Shape{1, 4, 1}, std::vector<float>{0.0f, 100.0f, -100.0f, 3.0f});
  const Tensor s = sigmoid(t);
  EXPECT_EQ(s[0], 0.5f);
  EXPECT_NEAR(s[1], 1.0f, 1e-6);
  EXPECT_GE(s[2], 0.0f);
  for (float x : {0.1f, 0.7f, 2.5f, 6.0f}) {
    const Tensor p = sigmoid(Tensor(Shape{1, 2, 1}, std::vector<float>{x, -x}));
    EXPECT_NEAR(p[1], 1.0f - p[0], 1e-7);
  }
}

TEST(Sigmoid, OpenUnitIntervalForModerateInputs) {
  for (float x = -15.0f; x <= 15.0f; x += 0.25f) {
    const float s = sigmoid(tensor_filled({1, 1, 1}, x))[0];
    EXPECT_GT(s, 0.0f);
    EXPECT_LT(s, 1.0f);
  }
}

// --- loss ------------------------------------------------------------------

TEST(BceLoss, HalfProbabilityGivesLn2) {
  Rng rng(17);
  Batch targets(2, Tensor({2, 2, 5}));
  for (auto& t : targets)
    for (auto& v : t.values()) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  const Batch p(2, tensor_filled({2, 2, 5}, 0.5f));
  EXPECT_NEAR(bce_loss(p, targets).loss, std::log(2.0), 1e-6);
}

TEST(BceLoss, PerfectPredictionIsNearZero) {
  Batch y{Tensor(Shape{1, 4, 1}, std::vector<float>{0, 1, 1, 0})};
  EXPECT_LE(bce_loss(y, y).loss, 1e-6f);
  const auto r = bce_loss(y, y);
  for (float v : r.grad[0].values()) EXPECT_EQ(v, 0.0f);  // clamped
  EXPECT_TRUE(std::isfinite(r.loss));
}

TEST(BceLoss, ShapeMismatch) {
  EXPECT_THROW(bce_loss(Batch{Tensor({2, 2, 5})}, Batch{Tensor({2, 2, 4})}), ShapeError);
  EXPECT_THROW(bce_with_logits(Batch{Tensor({2, 2, 5})}, Batch{}), ShapeError);
}

BasicBatch<double> random_targets(Rng& rng) {
  BasicBatch<double> y(1, BasicTensor<double>({2, 2, 5}));
  for (auto& v : y[0].values()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
  return y;
}

TEST(BceLoss, ProbabilityGradientMatchesFiniteDifferences) {
  Rng rng(18);
  const auto y = random_targets(rng);
  BasicBatch<double> p(1, BasicTensor<double>({2, 2, 5}));
  for (auto& v : p[0].values()) v = rng.uniform(0.05, 0.95);
  auto loss = [&] { return bce_loss(p, y).loss; };
  const auto g = bce_loss(p, y).grad;
  EXPECT_LT(check_gradient(p[0].values(), g[0].values(), loss).max_relative_error, 1e-5);
}

TEST(BceLoss, LogitGradientMatchesFiniteDifferences) {
  Rng rng(19);
  const auto y = random_targets(rng);
  auto z = random_batch<double>(1, {2, 2, 5}, rng);
  auto loss = [&] { return bce_with_logits(z, y).loss; };
  const auto g = bce_with_logits(z, y).grad;
  EXPECT_LT(check_gradient(z[0].values(), g[0].values(), loss).max_relative_error, 1e-5);

  // Chained form agrees with the fused form.
  BasicBatch<double> p{sigmoid(z[0])};
  const auto chained = sigmoid_backward(p[0], bce_loss(p, y).grad[0]);
  for (std::size_t i = 0; i < chained.size(); ++i) EXPECT_NEAR(chained[i], g[0][i], 1e-12);
  EXPECT_NEAR(bce_loss(p, y).loss, bce_with_logits(z, y).loss, 1e-12);
}

// --- folding ---------------------------------------------------------------

TEST(FoldBatchNorm, IdentityBatchNormLeavesConvUnchanged) {
  Rng rng(20);
  const auto conv = random_conv(3, 4, 1, rng).cast<float>();
  EXPECT_EQ(fold_batch_norm(conv, BatchNormParams<float>::identity(4, 0.0f)), conv);
}

TEST(FoldBatchNorm, GammaTwoDoublesPointwiseAndBias) {
  Rng rng(21);
  const auto conv = random_conv(3, 4, 1, rng).cast<float>();
  auto bn = BatchNormParams<float>::identity(4, 0.0f);
  std::fill(bn.gamma.begin(), bn.gamma.end(), 2.0f);
  const auto folded = fold_batch_norm(conv, bn);
  EXPECT_EQ(folded.depthwise, conv.depthwise);
  for (std::size_t i = 0; i < conv.pointwise.size(); ++i) EXPECT_EQ(folded.pointwise[i], 2.0f * conv.pointwise[i]);
  for (std::size_t i = 0; i < conv.bias.size(); ++i) EXPECT_EQ(folded.bias[i], 2.0f * conv.bias[i]);
}

TEST(FoldBatchNorm, FoldedPathMatchesConvThenBatchNorm) {
  Rng rng(22);
  for (int stride : {1, 2}) {
    const auto conv = random_conv(5, 6, stride, rng).cast<float>();
    auto bn = BatchNormParams<float>::identity(6);
    for (int c = 0; c < 6; ++c) {
      bn.gamma[c] = static_cast<float>(rng.uniform(0.5, 2.0));
      bn.beta[c] = static_cast<float>(rng.normal());
      bn.running_mean[c] = static_cast<float>(rng.normal());
      bn.running_var[c] = static_cast<float>(rng.uniform(0.2, 3.0));
    }
    const auto in = random_batch<float>(2, {8, 8, 5}, rng);
    const auto reference = batch_norm_forward(separable_conv_forward(in, conv), bn, Mode::kInfer).output;
    const auto folded = separable_conv_forward(in, fold_batch_norm(conv, bn));
    double worst = 0.0;
    for (std::size_t n = 0; n < in.size(); ++n)
      for (std::size_t i = 0; i < folded[n].size(); ++i)
        worst = std::max(worst, static_cast<double>(std::abs(folded[n][i] - reference[n][i])));
    EXPECT_LT(worst, 1e-5);
  }
}

TEST(FoldBatchNorm, ChannelMismatch) {
  EXPECT_THROW(fold_batch_norm(SeparableConvParams<float>::zeros(2, 3, 1), BatchNormParams<float>::identity(4)),
               ShapeError);
}

}  // namespace
}  // namespace sgrt
