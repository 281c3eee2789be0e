#pragma once

#include <utility>
#include <vector>

#include "sgrt/tensor.hpp"

namespace sgrt {

/// 3x3 depthwise convolution followed by a 1x1 pointwise mix and a bias.
///
/// Layouts:
///   depthwise[(ky * 3 + kx) * in_channels + c]
///   pointwise[ci * out_channels + co]
///
/// Padding is "same" with zeros. For stride 2 the padding follows the
/// TensorFlow convention: total padding max((out - 1) * s + 3 - in, 0), split
/// with the smaller half on the top/left. For even inputs that means the
/// window of output (oy, ox) starts at input row 2 * oy.
template <typename T>
struct SeparableConvParams {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  std::vector<T> depthwise;
  std::vector<T> pointwise;
  std::vector<T> bias;

  static SeparableConvParams zeros(int in_channels, int out_channels, int stride);
  /// Depthwise center tap 1, pointwise identity, zero bias. Requires in == out.
  static SeparableConvParams identity(int channels);

  void validate() const;

  template <typename U>
  SeparableConvParams<U> cast() const {
    return {in_channels, out_channels, stride, {depthwise.begin(), depthwise.end()},
            {pointwise.begin(), pointwise.end()}, {bias.begin(), bias.end()}};
  }
  friend bool operator==(const SeparableConvParams&, const SeparableConvParams&) = default;
};

template <typename T>
struct SeparableConvGrads {
  std::vector<T> depthwise;
  std::vector<T> pointwise;
  std::vector<T> bias;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// running <- momentum * running + (1 - momentum) * batch_stat.
template <typename T>
struct BatchNormParams {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T epsilon = T(kBatchNormEpsilon);
  T momentum = T(kBatchNormMomentum);

  static BatchNormParams identity(int channels, T epsilon = T(kBatchNormEpsilon));
  int channels() const { return static_cast<int>(gamma.size()); }
  void validate() const;

  template <typename U>
  BatchNormParams<U> cast() const {
    return {{gamma.begin(), gamma.end()},
            {beta.begin(), beta.end()},
            {running_mean.begin(), running_mean.end()},
            {running_var.begin(), running_var.end()},
            static_cast<U>(epsilon),
            static_cast<U>(momentum)};
  }
  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

template <typename T>
struct BatchNormGrads {
  std::vector<T> gamma;
  std::vector<T> beta;
};

/// Per-channel statistics of one train-mode pass, kept for backward.
template <typename T>
struct BatchNormStats {
  std::vector<T> mean;
  std::vector<T> variance;  // biased, over batch and spatial positions
  std::vector<T> inv_std;
};

enum class Mode { kTrain, kInfer };

template <typename T>
struct BatchNormResult {
  BasicBatch<T> output;
  BatchNormStats<T> stats;             // empty in infer mode
  std::vector<T> updated_running_mean;  // equals the input running stats in infer mode
  std::vector<T> updated_running_var;
};

// --- separable convolution -------------------------------------------------

Shape separable_conv_output_shape(const Shape& input, int out_channels, int stride);

template <typename T>
BasicBatch<T> separable_conv_forward(const BasicBatch<T>& input, const SeparableConvParams<T>& params);

template <typename T>
BasicTensor<T> separable_conv_forward(const BasicTensor<T>& input, const SeparableConvParams<T>& params);

template <typename T>
std::pair<BasicBatch<T>, SeparableConvGrads<T>> separable_conv_backward(
    const BasicBatch<T>& input, const SeparableConvParams<T>& params, const BasicBatch<T>& upstream_grad);

// --- batch normalization ---------------------------------------------------

template <typename T>
BatchNormResult<T> batch_norm_forward(const BasicBatch<T>& input, const BatchNormParams<T>& params, Mode mode);

template <typename T>
std::pair<BasicBatch<T>, BatchNormGrads<T>> batch_norm_backward(const BasicBatch<T>& input,
                                                                const BatchNormParams<T>& params,
                                                                const BatchNormStats<T>& stats,
                                                                const BasicBatch<T>& upstream_grad);

/// Inference-mode normalization of one tensor in place.
template <typename T>
void batch_norm_infer_inplace(BasicTensor<T>& t, const BatchNormParams<T>& params);

// --- activations, resampling, joins ------------------------------------------

// The 5-channel head also ends in LeakyReLU, so negative logits are scaled by
// this slope; at 0.01 confident negatives need pre-activations in the hundreds.
inline constexpr double kDefaultLeakySlope = 0.3;

template <typename T>
BasicTensor<T> leaky_relu_forward(const BasicTensor<T>& input, T alpha);
template <typename T>
void leaky_relu_inplace(BasicTensor<T>& t, T alpha);
/// Gradient gate uses the forward input: slope 1 where input >= 0, alpha otherwise.
template <typename T>
BasicTensor<T> leaky_relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& upstream, T alpha);

/// Nearest-neighbor 2x replication.
template <typename T>
BasicTensor<T> upsample2x_forward(const BasicTensor<T>& input);
/// Sums each 2x2 block of the upstream gradient into its source pixel.
template <typename T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// Inverse of concat_channels: the first `first_channels` go to the first tensor.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, int first_channels);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input);
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output, const BasicTensor<T>& upstream);

// --- loss ------------------------------------------------------------------

inline constexpr double kBceClamp = 1e-7;

template <typename T>
struct LossResult {
  T loss = T(0);
  BasicBatch<T> grad;
};

/// Mean binary cross entropy over every batch, pixel and channel slot.
/// Gradient is with respect to the probabilities; it is zero wherever the
/// clamp to [eps, 1 - eps] is active.
template <typename T>
LossResult<T> bce_loss(const BasicBatch<T>& probabilities, const BasicBatch<T>& targets);

/// Sigmoid and BCE fused; gradient is with respect to the logits.
template <typename T>
LossResult<T> bce_with_logits(const BasicBatch<T>& logits, const BasicBatch<T>& targets);

// --- inference optimization ------------------------------------------------

/// Absorbs inference-mode batch norm into the pointwise kernel and bias.
template <typename T>
SeparableConvParams<T> fold_batch_norm(const SeparableConvParams<T>& conv, const BatchNormParams<T>& bn);

}  // namespace sgrt
