#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgrt/layers.hpp"

namespace sgrt {

/// Output channel order of the segmentation head.
inline constexpr int kClassCount = 5;
inline constexpr std::array<std::string_view, kClassCount> kClassNames = {"field", "line", "robot", "ball",
                                                                          "goal_post"};

enum class NodeKind : std::uint8_t { kConvBlock = 1, kUpsample2x = 2, kConcat = 3 };

/// One step of the layer graph. Every node reads the output of the node
/// before it; a concat node additionally reads `skip_source` and appends its
/// channels after the previous node's.
template <typename T>
struct ModelNode {
  NodeKind kind = NodeKind::kConvBlock;
  SeparableConvParams<T> conv;
  std::optional<BatchNormParams<T>> bn;
  bool activation = true;
  int skip_source = -1;

  template <typename U>
  ModelNode<U> cast() const {
    ModelNode<U> n;
    n.kind = kind;
    n.conv = conv.template cast<U>();
    if (bn) n.bn = bn->template cast<U>();
    n.activation = activation;
    n.skip_source = skip_source;
    return n;
  }
  friend bool operator==(const ModelNode&, const ModelNode&) = default;
};

struct ModelOptions {
  double leaky_slope = kDefaultLeakySlope;
  bool batch_norm = true;
};

/// Gradients in the order of BasicSegModel::parameters().
template <typename T>
using ModelGradients = std::vector<std::vector<T>>;

struct ParameterSlot {
  int node = 0;
  std::string name;  // e.g. "node3.pointwise"
  std::size_t size = 0;
};

/// The encoder-decoder segmentation network:
///
///   scale 1    conv 3->8 [skip A]
///   scale 1      conv 8->8, conv 8->8 stride 2
///   scale 1/2      conv 8->16, conv 16->16 [skip B], conv 16->16 stride 2
///   scale 1/4      conv 16->24, 5x conv 24->24, up2x
///   scale 1/2    concat with B (40), conv 40->16, 2x conv 16->16, up2x
///   scale 1    concat with A (24), conv 24->8, 2x conv 8->8, conv 8->5
///
/// Every conv is separable and followed by batch norm and LeakyReLU. The
/// head emits logits; the sigmoid is applied by the loss and by inference
/// post-processing.
template <typename T>
class BasicSegModel {
 public:
  BasicSegModel(int input_height, int input_width, T leaky_slope, std::vector<ModelNode<T>> nodes);

  static BasicSegModel build(int input_height, int input_width, std::uint64_t seed, const ModelOptions& options = {});

  Shape input_shape() const { return input_; }
  Shape output_shape() const { return Shape{input_.height, input_.width, kClassCount}; }
  T leaky_slope() const { return slope_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode mode);

  const std::vector<ModelNode<T>>& nodes() const { return nodes_; }
  /// Output shape of every node for the model's input size.
  const std::vector<Shape>& node_shapes() const { return shapes_; }
  int batch_norm_count() const;

  /// Train mode: batch statistics, running stats updated, activations cached.
  /// Infer mode: running statistics, nothing cached.
  BasicBatch<T> forward(const BasicBatch<T>& input);
  BasicTensor<T> predict(const BasicTensor<T>& input) const;
  BasicBatch<T> predict(const BasicBatch<T>& input) const;

  /// Reverse pass through the whole graph for the most recent train-mode forward.
  ModelGradients<T> backward(const BasicBatch<T>& loss_grad);
  /// Like backward but also returns the gradient with respect to the model input.
  ModelGradients<T> backward(const BasicBatch<T>& loss_grad, BasicBatch<T>* input_grad);
  bool has_cached_forward() const { return cache_.has_value(); }

  /// Trainable tensors in graph order: per conv node depthwise, pointwise,
  /// bias, then (with batch norm) gamma and beta.
  std::vector<std::span<T>> parameters();
  std::vector<ParameterSlot> parameter_slots() const;

  template <typename U>
  BasicSegModel<U> cast() const {
    std::vector<ModelNode<U>> nodes;
    nodes.reserve(nodes_.size());
    for (const auto& n : nodes_) nodes.push_back(n.template cast<U>());
    BasicSegModel<U> out(input_.height, input_.width, static_cast<U>(slope_), std::move(nodes));
    out.set_mode(mode_);
    return out;
  }

 private:
  struct NodeCache {
    BasicBatch<T> input;             // conv input
    BasicBatch<T> conv_out;          // pre batch norm
    BatchNormStats<T> stats;
    BasicBatch<T> pre_activation;    // post batch norm
  };
  struct ForwardCache {
    std::vector<NodeCache> nodes;
    std::size_t batch = 0;
  };

  void infer_shapes();

  Shape input_{};
  T slope_ = T(kDefaultLeakySlope);
  Mode mode_ = Mode::kTrain;
  std::vector<ModelNode<T>> nodes_;
  std::vector<Shape> shapes_;
  std::optional<ForwardCache> cache_;
};

using SegModel = BasicSegModel<float>;

/// Folds every batch norm into its convolution. Requires infer mode.
template <typename T>
BasicSegModel<T> prepare_inference(const BasicSegModel<T>& model);

struct LayerParameterCount {
  int node = 0;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  std::size_t depthwise = 0;
  std::size_t pointwise = 0;
  std::size_t bias = 0;
  std::size_t bn_affine = 0;      // gamma + beta
  std::size_t running_stats = 0;  // mean + variance, not trainable
  std::size_t trainable() const { return depthwise + pointwise + bias + bn_affine; }
};

struct ParameterCount {
  std::size_t trainable = 0;
  std::size_t running_stats = 0;
  std::vector<LayerParameterCount> layers;
};

template <typename T>
ParameterCount count_parameters(const BasicSegModel<T>& model);

// --- weight file --------------------------------------------------------------

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Everything stored in a weight file.
struct ModelWeights {
  std::uint32_t version = kWeightFormatVersion;
  int input_height = 0;
  int input_width = 0;
  float leaky_slope = static_cast<float>(kDefaultLeakySlope);
  std::vector<std::string> class_names;
  std::vector<ModelNode<float>> nodes;

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

ModelWeights weights_of(const SegModel& model);
SegModel model_from_weights(const ModelWeights& weights);

std::vector<std::uint8_t> encode_weights(const ModelWeights& weights);
ModelWeights decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const SegModel& model, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);
SegModel load_model(const std::filesystem::path& path);

}  // namespace sgrt
