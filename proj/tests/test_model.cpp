#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "oracles/finite_difference.hpp"
#include "oracles/param_count.hpp"
#include "oracles/random_tensors.hpp"
#include "oracles/reference_interpreter.hpp"
#include "sgrt/model.hpp"

namespace sgrt {
namespace {

namespace fs = std::filesystem;
using oracle::random_batch;

// Running statistics and affine terms away from identity so batch norm matters.
template <typename T>
void randomize_batch_norm(BasicSegModel<T>& model, Rng& rng) {
  // nodes() is const; round-trip through the node list.
  auto nodes = model.nodes();
  for (auto& n : nodes) {
    if (!n.bn) continue;
    for (int c = 0; c < n.bn->channels(); ++c) {
      n.bn->gamma[c] = static_cast<T>(rng.uniform(0.5, 1.5));
      n.bn->beta[c] = static_cast<T>(0.2 * rng.normal());
      n.bn->running_mean[c] = static_cast<T>(0.3 * rng.normal());
      n.bn->running_var[c] = static_cast<T>(rng.uniform(0.5, 2.0));
    }
  }
  const Shape in = model.input_shape();
  const Mode mode = model.mode();
  model = BasicSegModel<T>(in.height, in.width, model.leaky_slope(), std::move(nodes));
  model.set_mode(mode);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, static_cast<double>(std::abs(a[i] - b[i])));
  return worst;
}

TEST(BuildModel, CameraResolutionOutputShape) {
  auto model = SegModel::build(88, 120, 1);
  model.set_mode(Mode::kInfer);
  const Tensor out = model.predict(Tensor({88, 120, 3}));
  EXPECT_EQ(out.shape(), (Shape{88, 120, 5}));
}

TEST(BuildModel, MinimumSize) {
  auto model = SegModel::build(4, 4, 1);
  EXPECT_EQ(model.forward(Batch{Tensor({4, 4, 3})}).front().shape(), (Shape{4, 4, 5}));
}

TEST(BuildModel, RejectsSizesNotDivisibleByFour) {
  EXPECT_THROW(SegModel::build(5, 4, 1), PreconditionError);
  EXPECT_THROW(SegModel::build(4, 6, 1), PreconditionError);
  EXPECT_THROW(SegModel::build(0, 0, 1), PreconditionError);
}

TEST(BuildModel, StructureMatchesArchitectureTable) {
  for (auto [h, w] : {std::pair{4, 4}, std::pair{32, 40}, std::pair{88, 120}}) {
    const auto model = SegModel::build(h, w, 3);
    const auto& nodes = model.nodes();
    const auto& shapes = model.node_shapes();
    int strided = 0, upsamples = 0;
    std::vector<int> concat_channels;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].kind == NodeKind::kConvBlock && nodes[i].conv.stride == 2) ++strided;
      if (nodes[i].kind == NodeKind::kUpsample2x) ++upsamples;
      if (nodes[i].kind == NodeKind::kConcat) concat_channels.push_back(shapes[i].channels);
      if (nodes[i].kind == NodeKind::kConvBlock) {
        EXPECT_TRUE(nodes[i].bn.has_value());
        EXPECT_TRUE(nodes[i].activation);
      }
    }
    EXPECT_EQ(strided, 2);
    EXPECT_EQ(upsamples, 2);
    EXPECT_EQ(concat_channels, (std::vector<int>{40, 24}));
    EXPECT_EQ(shapes.back(), (Shape{h, w, 5}));
    // Filter sequence read off the table rows.
    std::vector<int> filters;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == NodeKind::kConvBlock) filters.push_back(nodes[i].conv.out_channels);
    EXPECT_EQ(filters, (std::vector<int>{8, 8, 8, 16, 16, 16, 24, 24, 24, 24, 24, 24, 16, 16, 16, 8, 8, 8, 5}));
  }
}

TEST(BuildModel, SeedDeterminesWeights) {
  EXPECT_EQ(SegModel::build(8, 8, 42).nodes(), SegModel::build(8, 8, 42).nodes());
  EXPECT_NE(SegModel::build(8, 8, 42).nodes(), SegModel::build(8, 8, 43).nodes());
}

// --- parameter count ---------------------------------------------------------

TEST(CountParameters, FirstLayerArithmetic) {
  const auto count = count_parameters(SegModel::build(8, 8, 1));
  const auto& first = count.layers.front();
  EXPECT_EQ(first.in_channels, 3);
  EXPECT_EQ(first.out_channels, 8);
  EXPECT_EQ(first.trainable(), 27u + 24u + 8u + 8u + 8u);
  EXPECT_EQ(first.running_stats, 16u);
}

TEST(CountParameters, MatchesHandSummation) {
  const auto count = count_parameters(SegModel::build(8, 8, 1));
  EXPECT_EQ(count.trainable, oracle::hand_count_trainable());
  EXPECT_EQ(count.trainable, 9282u);
  EXPECT_EQ(count.running_stats, 2 * oracle::total_filters());
  EXPECT_EQ(count.layers.size(), oracle::kTableRows.size());
}

TEST(CountParameters, RemovingBatchNormDropsTwoPerFilter) {
  const auto with = count_parameters(SegModel::build(8, 8, 1));
  const auto without = count_parameters(SegModel::build(8, 8, 1, ModelOptions{.batch_norm = false}));
  EXPECT_EQ(with.trainable - without.trainable, 2 * oracle::total_filters());
  EXPECT_EQ(without.running_stats, 0u);
}

TEST(CountParameters, ParameterSpansCoverTrainableCount) {
  auto model = SegModel::build(8, 8, 1);
  std::size_t total = 0;
  for (auto s : model.parameters()) total += s.size();
  EXPECT_EQ(total, count_parameters(model).trainable);
  const auto slots = model.parameter_slots();
  ASSERT_EQ(slots.size(), model.parameters().size());
  EXPECT_EQ(slots.front().name, "node0.depthwise");
}

// --- forward -------------------------------------------------------------------

TEST(Forward, ZeroNetworkGivesZeroLogits) {
  auto nodes = SegModel::build(8, 8, 1).nodes();
  for (auto& n : nodes) {
    std::fill(n.conv.depthwise.begin(), n.conv.depthwise.end(), 0.0f);
    std::fill(n.conv.pointwise.begin(), n.conv.pointwise.end(), 0.0f);
  }
  SegModel model(8, 8, 0.01f, nodes);
  model.set_mode(Mode::kInfer);
  Rng rng(2);
  const Tensor logits = model.predict(oracle::random_normal<float>({8, 8, 3}, rng));
  for (float v : logits.values()) EXPECT_EQ(v, 0.0f);
  const Tensor probs = sigmoid(logits);
  for (float v : probs.values()) EXPECT_EQ(v, 0.5f);
}

TEST(Forward, MatchesReferenceInterpreter) {
  Rng rng(3);
  auto model = SegModel::build(8, 8, 99);
  randomize_batch_norm(model, rng);
  model.set_mode(Mode::kInfer);
  const Tensor in = oracle::random_normal<float>({8, 8, 3}, rng);
  const Tensor expected = oracle::reference_forward_infer(model, in);
  const Tensor actual = model.predict(in);
  ASSERT_EQ(actual.shape(), expected.shape());
  EXPECT_LT(max_abs_diff(actual, expected), 1e-5);
}

TEST(Forward, TrainModeMatchesReferenceWhenBatchStatsEqualRunningStats) {
  // With batch norm removed the two modes coincide.
  auto model = SegModel::build(8, 12, 5, ModelOptions{.batch_norm = false});
  Rng rng(4);
  const Tensor in = oracle::random_normal<float>({8, 12, 3}, rng);
  const Tensor train = model.forward(Batch{in}).front();
  model.set_mode(Mode::kInfer);
  EXPECT_EQ(train, model.predict(in));
  EXPECT_LT(max_abs_diff(train, oracle::reference_forward_infer(model, in)), 1e-5);
}

TEST(Forward, DeterministicBitIdentical) {
  auto model = SegModel::build(16, 20, 6);
  model.set_mode(Mode::kInfer);
  Rng rng(5);
  const Tensor in = oracle::random_normal<float>({16, 20, 3}, rng);
  const Tensor a = model.predict(in);
  const Tensor b = model.predict(in);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)), 0);
}

TEST(Forward, TrainModeUpdatesRunningStats) {
  auto model = SegModel::build(8, 8, 7);
  Rng rng(6);
  const auto before = model.nodes().front().bn->running_mean;
  model.forward(random_batch<float>(2, {8, 8, 3}, rng));
  EXPECT_NE(model.nodes().front().bn->running_mean, before);
  EXPECT_TRUE(model.has_cached_forward());
}

TEST(Forward, RejectsWrongInputShape) {
  auto model = SegModel::build(8, 8, 7);
  EXPECT_THROW(model.forward(Batch{Tensor({8, 12, 3})}), ShapeError);
  model.set_mode(Mode::kInfer);
  EXPECT_THROW(model.predict(Tensor({8, 8, 4})), ShapeError);
}

// --- inference preparation -------------------------------------------------------

TEST(PrepareInference, FreshModelFoldsExactly) {
  auto model = SegModel::build(16, 16, 8);
  model.set_mode(Mode::kInfer);
  const auto folded = prepare_inference(model);
  EXPECT_EQ(folded.batch_norm_count(), 0);
  EXPECT_EQ(model.batch_norm_count(), 19);
  Rng rng(9);
  const Tensor in = oracle::random_normal<float>({16, 16, 3}, rng);
  EXPECT_LT(max_abs_diff(model.predict(in), folded.predict(in)), 1e-5);
}

TEST(PrepareInference, RandomStatisticsAgreeWithinTolerance) {
  Rng rng(10);
  auto model = SegModel::build(16, 24, 11);
  randomize_batch_norm(model, rng);
  model.set_mode(Mode::kInfer);
  const auto folded = prepare_inference(model);
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor in = oracle::random_normal<float>({16, 24, 3}, rng);
    EXPECT_LT(max_abs_diff(model.predict(in), folded.predict(in)), 1e-4);
  }
}

TEST(PrepareInference, Idempotent) {
  auto model = SegModel::build(8, 8, 12);
  model.set_mode(Mode::kInfer);
  const auto once = prepare_inference(model);
  const auto twice = prepare_inference(once);
  EXPECT_EQ(once.nodes(), twice.nodes());
}

TEST(PrepareInference, RequiresInferMode) {
  const auto model = SegModel::build(8, 8, 12);
  EXPECT_THROW(prepare_inference(model), PreconditionError);
}

// --- backward ------------------------------------------------------------------

TEST(Backward, RequiresCachedForward) {
  auto model = SegModel::build(4, 4, 1);
  EXPECT_THROW(model.backward(Batch{Tensor({4, 4, 5})}), StateError);
}

TEST(Backward, ZeroLossGradientGivesZeroGradients) {
  auto model = SegModel::build(8, 8, 2);
  Rng rng(11);
  model.forward(random_batch<float>(2, {8, 8, 3}, rng));
  const auto grads = model.backward(Batch(2, Tensor({8, 8, 5})));
  for (const auto& g : grads)
    for (float v : g) EXPECT_EQ(v, 0.0f);
}

BasicSegModel<double> gradient_check_model(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  auto model = SegModel::build(h, w, seed).cast<double>();
  randomize_batch_norm(model, rng);
  model.set_mode(Mode::kTrain);
  return model;
}

// A pointwise bias feeding a train-mode batch norm cancels in the batch mean,
// so its exact gradient is zero and it is compared in absolute terms.
bool bias_before_batch_norm(const BasicSegModel<double>& model, const ParameterSlot& slot) {
  return slot.name.ends_with(".bias") && model.nodes()[slot.node].bn.has_value();
}

// Batch 8 keeps the 1x1 maps at quarter scale from degenerating in batch norm
// (two samples normalize to exactly +-1 whatever the input). With 19 LeakyReLU
// layers some pre-activation usually sits near its kink, so each entry is
// checked at several steps.
TEST(Backward, EndToEndMatchesFiniteDifferences) {
  auto model = gradient_check_model(4, 4, 21);
  Rng rng(12);
  auto input = random_batch<double>(8, {4, 4, 3}, rng);
  const auto probe = random_batch<double>(8, {4, 4, 5}, rng);
  auto loss = [&] { return oracle::dot(model.forward(input), probe); };

  loss();
  BasicBatch<double> input_grad;
  const auto grads = model.backward(probe, &input_grad);
  auto params = model.parameters();
  const auto slots = model.parameter_slots();
  ASSERT_EQ(grads.size(), params.size());
  double grad_scale = 0.0;
  for (const auto& g : grads)
    for (double v : g) grad_scale = std::max(grad_scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto r = oracle::check_gradient_multistep(params[k], grads[k], loss);
    if (bias_before_batch_norm(model, slots[k])) {
      for (double g : grads[k]) EXPECT_NEAR(g, 0.0, 1e-10) << slots[k].name;
      EXPECT_LT(std::abs(r.worst_numeric), 1e-4 * grad_scale) << slots[k].name;
      continue;
    }
    worst = std::max(worst, r.max_relative_error);
    EXPECT_LT(r.max_relative_error, 1e-4) << slots[k].name << "[" << r.worst_index << "] analytic "
                                          << r.worst_analytic << " numeric " << r.worst_numeric;
  }
  for (std::size_t n = 0; n < input.size(); ++n)
    worst = std::max(worst, oracle::check_gradient_multistep(input[n].values(), input_grad[n].values(), loss).max_relative_error);
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, EveryParameterReceivesGradient) {
  auto model = gradient_check_model(8, 8, 22);
  Rng rng(13);
  const auto input = random_batch<double>(2, {8, 8, 3}, rng);
  const auto probe = random_batch<double>(2, {8, 8, 5}, rng);
  model.forward(input);
  const auto grads = model.backward(probe);
  const auto slots = model.parameter_slots();
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (bias_before_batch_norm(model, slots[k])) continue;
    for (std::size_t i = 0; i < grads[k].size(); ++i)
      EXPECT_NE(grads[k][i], 0.0) << slots[k].name << "[" << i << "]";
  }
}

// --- weight file ---------------------------------------------------------------

class WeightFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sgrt_weights_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<char> read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  void write(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  WeightFileFault fault_of(const fs::path& p) {
    try {
      load_weights(p);
    } catch (const WeightFileError& e) {
      return e.fault();
    }
    ADD_FAILURE() << "load succeeded";
    return WeightFileFault::kCorruptHeader;
  }

  fs::path dir_;
};

TEST_F(WeightFile, RoundTripIsBitIdentical) {
  Rng rng(14);
  auto model = SegModel::build(16, 20, 15);
  randomize_batch_norm(model, rng);
  const fs::path p = dir_ / "w.sgrt";
  save_weights(model, p);
  const auto w = load_weights(p);
  EXPECT_EQ(w.input_height, 16);
  EXPECT_EQ(w.input_width, 20);
  EXPECT_EQ(w.class_names, (std::vector<std::string>{"field", "line", "robot", "ball", "goal_post"}));
  ASSERT_EQ(w.nodes.size(), model.nodes().size());
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    const auto& a = w.nodes[i].conv;
    const auto& b = model.nodes()[i].conv;
    EXPECT_EQ(std::memcmp(a.pointwise.data(), b.pointwise.data(), a.pointwise.size() * sizeof(float)), 0);
  }
  EXPECT_EQ(w.nodes, model.nodes());
  EXPECT_EQ(encode_weights(w), encode_weights(weights_of(model)));
}

TEST_F(WeightFile, FoldedModelRoundTrips) {
  auto model = SegModel::build(8, 8, 16);
  model.set_mode(Mode::kInfer);
  const auto folded = prepare_inference(model);
  save_weights(folded, dir_ / "f.sgrt");
  EXPECT_EQ(load_model(dir_ / "f.sgrt").nodes(), folded.nodes());
}

TEST_F(WeightFile, WrongMagic) {
  save_weights(SegModel::build(8, 8, 1), dir_ / "w.sgrt");
  auto bytes = read(dir_ / "w.sgrt");
  bytes[0] = 'X';
  write(dir_ / "bad.sgrt", bytes);
  EXPECT_EQ(fault_of(dir_ / "bad.sgrt"), WeightFileFault::kCorruptHeader);
}

TEST_F(WeightFile, TruncatedByOneByte) {
  save_weights(SegModel::build(8, 8, 1), dir_ / "w.sgrt");
  auto bytes = read(dir_ / "w.sgrt");
  bytes.pop_back();
  write(dir_ / "short.sgrt", bytes);
  EXPECT_EQ(fault_of(dir_ / "short.sgrt"), WeightFileFault::kTruncated);
}

TEST_F(WeightFile, VersionMismatch) {
  save_weights(SegModel::build(8, 8, 1), dir_ / "w.sgrt");
  auto bytes = read(dir_ / "w.sgrt");
  bytes[4] = 9;
  write(dir_ / "v.sgrt", bytes);
  EXPECT_EQ(fault_of(dir_ / "v.sgrt"), WeightFileFault::kVersionMismatch);
}

TEST_F(WeightFile, FlippedPayloadByteFailsChecksum) {
  save_weights(SegModel::build(8, 8, 1), dir_ / "w.sgrt");
  auto bytes = read(dir_ / "w.sgrt");
  bytes[bytes.size() / 2] ^= 0x01;
  write(dir_ / "c.sgrt", bytes);
  EXPECT_EQ(fault_of(dir_ / "c.sgrt"), WeightFileFault::kChecksum);
}

TEST_F(WeightFile, MissingFileIsIoError) { EXPECT_THROW(load_weights(dir_ / "nope.sgrt"), IoError); }

TEST(WeightEncoding, HeaderLayout) {
  const auto bytes = encode_weights(weights_of(SegModel::build(8, 12, 1)));
  ASSERT_GT(bytes.size(), 28u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SGRT");
  auto u32 = [&](std::size_t at) {
    return bytes[at] | (bytes[at + 1] << 8) | (bytes[at + 2] << 16) | (static_cast<std::uint32_t>(bytes[at + 3]) << 24);
  };
  EXPECT_EQ(u32(4), kWeightFormatVersion);
  EXPECT_EQ(u32(8), 8u);
  EXPECT_EQ(u32(12), 12u);
  EXPECT_EQ(u32(16), 5u);
  EXPECT_EQ(u32(20), 23u);
}

}  // namespace
}  // namespace sgrt
