#include "sgrt/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sgrt {
namespace {

struct ConvGeometry {
  int in_h, in_w, out_h, out_w, stride, pad_top, pad_left;
};

int same_pad_before(int in, int out, int stride) {
  const int total = std::max((out - 1) * stride + 3 - in, 0);
  return total / 2;
}

ConvGeometry conv_geometry(const Shape& in, int stride) {
  ConvGeometry g{};
  g.in_h = in.height;
  g.in_w = in.width;
  g.stride = stride;
  g.out_h = in.height / stride;
  g.out_w = in.width / stride;
  g.pad_top = same_pad_before(in.height, g.out_h, stride);
  g.pad_left = same_pad_before(in.width, g.out_w, stride);
  return g;
}

void check_conv_input(const Shape& in, int in_channels, int stride) {
  if (in.channels != in_channels)
    throw ShapeError("separable conv expects " + std::to_string(in_channels) + " input channels, got " +
                     std::to_string(in.channels));
  if (stride == 2 && (in.height % 2 != 0 || in.width % 2 != 0))
    throw PreconditionError("stride-2 separable conv needs even input dims, got " + in.str());
}

// Depthwise stage for one tensor: returns out_h x out_w x C.
template <typename T>
BasicTensor<T> depthwise_forward(const BasicTensor<T>& in, const std::vector<T>& kernel, const ConvGeometry& g) {
  const int c_count = in.channels();
  BasicTensor<T> out(Shape{g.out_h, g.out_w, c_count});
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      T* acc = out.pixel(oy, ox);
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * g.stride + ky - g.pad_top;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = ox * g.stride + kx - g.pad_left;
          if (ix < 0 || ix >= g.in_w) continue;
          const T* src = in.pixel(iy, ix);
          const T* w = kernel.data() + (ky * 3 + kx) * c_count;
          for (int c = 0; c < c_count; ++c) acc[c] += src[c] * w[c];
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> pointwise_forward(const BasicTensor<T>& mid, const SeparableConvParams<T>& p) {
  const int ci_count = p.in_channels;
  const int co_count = p.out_channels;
  BasicTensor<T> out(Shape{mid.height(), mid.width(), co_count});
  const std::size_t pixels = mid.shape().pixels();
  const T* src = mid.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < pixels; ++i, src += ci_count, dst += co_count) {
    std::copy(p.bias.begin(), p.bias.end(), dst);
    for (int ci = 0; ci < ci_count; ++ci) {
      const T v = src[ci];
      const T* w = p.pointwise.data() + static_cast<std::size_t>(ci) * co_count;
      for (int co = 0; co < co_count; ++co) dst[co] += v * w[co];
    }
  }
  return out;
}

template <typename T>
void check_same_length(const std::vector<T>& v, std::size_t n, const char* what) {
  if (v.size() != n)
    throw ShapeError(std::string(what) + " has " + std::to_string(v.size()) + " elements, expected " +
                     std::to_string(n));
}

}  // namespace

// --- SeparableConvParams -----------------------------------------------------

template <typename T>
SeparableConvParams<T> SeparableConvParams<T>::zeros(int in_channels, int out_channels, int stride) {
  SeparableConvParams p;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  p.stride = stride;
  p.depthwise.assign(static_cast<std::size_t>(9) * in_channels, T(0));
  p.pointwise.assign(static_cast<std::size_t>(in_channels) * out_channels, T(0));
  p.bias.assign(out_channels, T(0));
  p.validate();
  return p;
}

template <typename T>
SeparableConvParams<T> SeparableConvParams<T>::identity(int channels) {
  auto p = zeros(channels, channels, 1);
  for (int c = 0; c < channels; ++c) {
    p.depthwise[4 * channels + c] = T(1);
    p.pointwise[static_cast<std::size_t>(c) * channels + c] = T(1);
  }
  return p;
}

template <typename T>
void SeparableConvParams<T>::validate() const {
  if (in_channels < 1 || out_channels < 1) throw PreconditionError("separable conv channel counts must be >= 1");
  if (stride != 1 && stride != 2) throw PreconditionError("separable conv stride must be 1 or 2");
  check_same_length(depthwise, static_cast<std::size_t>(9) * in_channels, "depthwise kernel");
  check_same_length(pointwise, static_cast<std::size_t>(in_channels) * out_channels, "pointwise kernel");
  check_same_length(bias, static_cast<std::size_t>(out_channels), "bias");
}

Shape separable_conv_output_shape(const Shape& input, int out_channels, int stride) {
  return Shape{input.height / stride, input.width / stride, out_channels};
}

template <typename T>
BasicTensor<T> separable_conv_forward(const BasicTensor<T>& input, const SeparableConvParams<T>& params) {
  check_conv_input(input.shape(), params.in_channels, params.stride);
  const auto g = conv_geometry(input.shape(), params.stride);
  return pointwise_forward(depthwise_forward(input, params.depthwise, g), params);
}

template <typename T>
BasicBatch<T> separable_conv_forward(const BasicBatch<T>& input, const SeparableConvParams<T>& params) {
  params.validate();
  batch_shape(input);
  BasicBatch<T> out;
  out.reserve(input.size());
  for (const auto& t : input) out.push_back(separable_conv_forward(t, params));
  return out;
}

template <typename T>
std::pair<BasicBatch<T>, SeparableConvGrads<T>> separable_conv_backward(const BasicBatch<T>& input,
                                                                        const SeparableConvParams<T>& params,
                                                                        const BasicBatch<T>& upstream_grad) {
  params.validate();
  const Shape in_shape = batch_shape(input);
  check_conv_input(in_shape, params.in_channels, params.stride);
  const Shape out_shape = separable_conv_output_shape(in_shape, params.out_channels, params.stride);
  if (upstream_grad.size() != input.size())
    throw ShapeError("upstream gradient batch size does not match the input batch");
  for (const auto& g : upstream_grad) assert_shape(g, out_shape);

  const auto geo = conv_geometry(in_shape, params.stride);
  const int ci_count = params.in_channels;
  const int co_count = params.out_channels;

  SeparableConvGrads<T> grads;
  grads.depthwise.assign(params.depthwise.size(), T(0));
  grads.pointwise.assign(params.pointwise.size(), T(0));
  grads.bias.assign(params.bias.size(), T(0));

  BasicBatch<T> input_grad;
  input_grad.reserve(input.size());
  std::vector<T> mid_grad(ci_count);

  for (std::size_t n = 0; n < input.size(); ++n) {
    const auto& in = input[n];
    const auto& up = upstream_grad[n];
    const auto mid = depthwise_forward(in, params.depthwise, geo);
    BasicTensor<T> in_grad(in_shape);

    for (int oy = 0; oy < geo.out_h; ++oy) {
      for (int ox = 0; ox < geo.out_w; ++ox) {
        const T* g = up.pixel(oy, ox);
        const T* m = mid.pixel(oy, ox);
        for (int co = 0; co < co_count; ++co) grads.bias[co] += g[co];
        for (int ci = 0; ci < ci_count; ++ci) {
          const T* w = params.pointwise.data() + static_cast<std::size_t>(ci) * co_count;
          T* gw = grads.pointwise.data() + static_cast<std::size_t>(ci) * co_count;
          T acc = T(0);
          for (int co = 0; co < co_count; ++co) {
            gw[co] += m[ci] * g[co];
            acc += w[co] * g[co];
          }
          mid_grad[ci] = acc;
        }
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * geo.stride + ky - geo.pad_top;
          if (iy < 0 || iy >= geo.in_h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * geo.stride + kx - geo.pad_left;
            if (ix < 0 || ix >= geo.in_w) continue;
            const std::size_t k = static_cast<std::size_t>(ky * 3 + kx) * ci_count;
            const T* src = in.pixel(iy, ix);
            T* dst = in_grad.pixel(iy, ix);
            for (int c = 0; c < ci_count; ++c) {
              grads.depthwise[k + c] += mid_grad[c] * src[c];
              dst[c] += mid_grad[c] * params.depthwise[k + c];
            }
          }
        }
      }
    }
    input_grad.push_back(std::move(in_grad));
  }
  return {std::move(input_grad), std::move(grads)};
}

// --- BatchNormParams ---------------------------------------------------------

template <typename T>
BatchNormParams<T> BatchNormParams<T>::identity(int channels, T epsilon) {
  BatchNormParams p;
  p.gamma.assign(channels, T(1));
  p.beta.assign(channels, T(0));
  p.running_mean.assign(channels, T(0));
  p.running_var.assign(channels, T(1));
  p.epsilon = epsilon;
  return p;
}

template <typename T>
void BatchNormParams<T>::validate() const {
  const std::size_t c = gamma.size();
  if (c == 0) throw PreconditionError("batch norm needs at least one channel");
  check_same_length(beta, c, "batch norm beta");
  check_same_length(running_mean, c, "batch norm running mean");
  check_same_length(running_var, c, "batch norm running variance");
  if (!(epsilon >= T(0))) throw PreconditionError("batch norm epsilon must be non-negative");
  if (!(momentum > T(0) && momentum < T(1))) throw PreconditionError("batch norm momentum must lie in (0, 1)");
  for (T v : running_var)
    if (v < T(0)) throw PreconditionError("batch norm running variance must be non-negative");
}

template <typename T>
void batch_norm_infer_inplace(BasicTensor<T>& t, const BatchNormParams<T>& p) {
  const int c_count = p.channels();
  if (t.channels() != c_count)
    throw ShapeError("batch norm expects " + std::to_string(c_count) + " channels, got " +
                     std::to_string(t.channels()));
  std::vector<T> scale(c_count), shift(c_count);
  for (int c = 0; c < c_count; ++c) {
    scale[c] = p.gamma[c] / std::sqrt(p.running_var[c] + p.epsilon);
    shift[c] = p.beta[c] - p.running_mean[c] * scale[c];
  }
  T* v = t.data();
  const std::size_t pixels = t.shape().pixels();
  for (std::size_t i = 0; i < pixels; ++i, v += c_count)
    for (int c = 0; c < c_count; ++c) v[c] = v[c] * scale[c] + shift[c];
}

template <typename T>
BatchNormResult<T> batch_norm_forward(const BasicBatch<T>& input, const BatchNormParams<T>& params, Mode mode) {
  params.validate();
  const Shape shape = batch_shape(input);
  const int c_count = params.channels();
  if (shape.channels != c_count)
    throw ShapeError("batch norm expects " + std::to_string(c_count) + " channels, got " +
                     std::to_string(shape.channels));

  BatchNormResult<T> result;
  result.updated_running_mean = params.running_mean;
  result.updated_running_var = params.running_var;

  if (mode == Mode::kInfer) {
    result.output = input;
    for (auto& t : result.output) batch_norm_infer_inplace(t, params);
    return result;
  }

  const std::size_t pixels = shape.pixels();
  const double count = static_cast<double>(pixels * input.size());
  std::vector<double> sum(c_count, 0.0), sq(c_count, 0.0);
  for (const auto& t : input) {
    const T* v = t.data();
    for (std::size_t i = 0; i < pixels; ++i, v += c_count)
      for (int c = 0; c < c_count; ++c) sum[c] += v[c];
  }
  auto& stats = result.stats;
  stats.mean.resize(c_count);
  stats.variance.resize(c_count);
  stats.inv_std.resize(c_count);
  for (int c = 0; c < c_count; ++c) stats.mean[c] = static_cast<T>(sum[c] / count);
  for (const auto& t : input) {
    const T* v = t.data();
    for (std::size_t i = 0; i < pixels; ++i, v += c_count)
      for (int c = 0; c < c_count; ++c) {
        const double d = static_cast<double>(v[c]) - stats.mean[c];
        sq[c] += d * d;
      }
  }
  std::vector<T> scale(c_count), shift(c_count);
  for (int c = 0; c < c_count; ++c) {
    stats.variance[c] = static_cast<T>(sq[c] / count);
    stats.inv_std[c] = T(1) / std::sqrt(stats.variance[c] + params.epsilon);
    scale[c] = params.gamma[c] * stats.inv_std[c];
    shift[c] = params.beta[c] - stats.mean[c] * scale[c];
    result.updated_running_mean[c] =
        params.momentum * params.running_mean[c] + (T(1) - params.momentum) * stats.mean[c];
    result.updated_running_var[c] =
        params.momentum * params.running_var[c] + (T(1) - params.momentum) * stats.variance[c];
  }

  result.output = input;
  for (auto& t : result.output) {
    T* v = t.data();
    for (std::size_t i = 0; i < pixels; ++i, v += c_count)
      for (int c = 0; c < c_count; ++c) v[c] = v[c] * scale[c] + shift[c];
  }
  return result;
}

template <typename T>
std::pair<BasicBatch<T>, BatchNormGrads<T>> batch_norm_backward(const BasicBatch<T>& input,
                                                                const BatchNormParams<T>& params,
                                                                const BatchNormStats<T>& stats,
                                                                const BasicBatch<T>& upstream_grad) {
  const Shape shape = batch_shape(input);
  const int c_count = params.channels();
  if (shape.channels != c_count) throw ShapeError("batch norm backward: channel mismatch");
  if (stats.mean.size() != static_cast<std::size_t>(c_count))
    throw StateError("batch norm backward needs train-mode statistics");
  if (upstream_grad.size() != input.size()) throw ShapeError("batch norm backward: batch size mismatch");
  for (const auto& g : upstream_grad) assert_shape(g, shape);

  const std::size_t pixels = shape.pixels();
  const T count = static_cast<T>(pixels * input.size());

  // dgamma = sum(g * xhat), dbeta = sum(g);
  // dx = gamma * inv_std / M * (M * g - dbeta - xhat * dgamma)
  BatchNormGrads<T> grads;
  grads.gamma.assign(c_count, T(0));
  grads.beta.assign(c_count, T(0));
  for (std::size_t n = 0; n < input.size(); ++n) {
    const T* x = input[n].data();
    const T* g = upstream_grad[n].data();
    for (std::size_t i = 0; i < pixels; ++i, x += c_count, g += c_count)
      for (int c = 0; c < c_count; ++c) {
        const T xhat = (x[c] - stats.mean[c]) * stats.inv_std[c];
        grads.gamma[c] += g[c] * xhat;
        grads.beta[c] += g[c];
      }
  }

  BasicBatch<T> input_grad;
  input_grad.reserve(input.size());
  for (std::size_t n = 0; n < input.size(); ++n) {
    BasicTensor<T> dx(shape);
    const T* x = input[n].data();
    const T* g = upstream_grad[n].data();
    T* out = dx.data();
    for (std::size_t i = 0; i < pixels; ++i, x += c_count, g += c_count, out += c_count)
      for (int c = 0; c < c_count; ++c) {
        const T xhat = (x[c] - stats.mean[c]) * stats.inv_std[c];
        out[c] = params.gamma[c] * stats.inv_std[c] / count *
                 (count * g[c] - grads.beta[c] - xhat * grads.gamma[c]);
      }
    input_grad.push_back(std::move(dx));
  }
  return {std::move(input_grad), std::move(grads)};
}

// --- activations and joins ---------------------------------------------------

template <typename T>
void leaky_relu_inplace(BasicTensor<T>& t, T alpha) {
  for (auto& v : t.values()) v = v >= T(0) ? v : alpha * v;
}

template <typename T>
BasicTensor<T> leaky_relu_forward(const BasicTensor<T>& input, T alpha) {
  BasicTensor<T> out = input;
  leaky_relu_inplace(out, alpha);
  return out;
}

template <typename T>
BasicTensor<T> leaky_relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& upstream, T alpha) {
  assert_shape(upstream, input.shape());
  BasicTensor<T> out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (input[i] < T(0)) out[i] *= alpha;
  return out;
}

template <typename T>
BasicTensor<T> upsample2x_forward(const BasicTensor<T>& input) {
  const int c_count = input.channels();
  BasicTensor<T> out(Shape{input.height() * 2, input.width() * 2, c_count});
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const T* src = input.pixel(y / 2, x / 2);
      std::copy(src, src + c_count, out.pixel(y, x));
    }
  return out;
}

template <typename T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& upstream) {
  if (upstream.height() % 2 != 0 || upstream.width() % 2 != 0)
    throw ShapeError("upsample backward needs even gradient dims, got " + upstream.shape().str());
  const int c_count = upstream.channels();
  BasicTensor<T> out(Shape{upstream.height() / 2, upstream.width() / 2, c_count});
  for (int y = 0; y < upstream.height(); ++y)
    for (int x = 0; x < upstream.width(); ++x) {
      const T* src = upstream.pixel(y, x);
      T* dst = out.pixel(y / 2, x / 2);
      for (int c = 0; c < c_count; ++c) dst[c] += src[c];
    }
  return out;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeError("concat needs equal spatial dims, got " + a.shape().str() + " and " + b.shape().str());
  const int ca = a.channels(), cb = b.channels();
  BasicTensor<T> out(Shape{a.height(), a.width(), ca + cb});
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      T* dst = out.pixel(y, x);
      std::copy(a.pixel(y, x), a.pixel(y, x) + ca, dst);
      std::copy(b.pixel(y, x), b.pixel(y, x) + cb, dst + ca);
    }
  return out;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, int first_channels) {
  const int total = t.channels();
  if (first_channels < 1 || first_channels >= total)
    throw ShapeError("split point " + std::to_string(first_channels) + " outside (0, " + std::to_string(total) + ")");
  BasicTensor<T> a(Shape{t.height(), t.width(), first_channels});
  BasicTensor<T> b(Shape{t.height(), t.width(), total - first_channels});
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) {
      const T* src = t.pixel(y, x);
      std::copy(src, src + first_channels, a.pixel(y, x));
      std::copy(src + first_channels, src + total, b.pixel(y, x));
    }
  return {std::move(a), std::move(b)};
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input) {
  return map_elementwise(input, [](T v) {
    // Written so that exp never overflows.
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  });
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output, const BasicTensor<T>& upstream) {
  assert_shape(upstream, output.shape());
  BasicTensor<T> out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= output[i] * (T(1) - output[i]);
  return out;
}

// --- loss ------------------------------------------------------------------

namespace {

template <typename T>
std::size_t check_loss_shapes(const BasicBatch<T>& pred, const BasicBatch<T>& targets) {
  const Shape s = batch_shape(pred);
  if (targets.size() != pred.size()) throw ShapeError("loss: prediction and target batch sizes differ");
  for (const auto& t : targets) assert_shape(t, s);
  return s.size() * pred.size();
}

template <typename T>
double bce_term(double p, T y) {
  p = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace

template <typename T>
LossResult<T> bce_loss(const BasicBatch<T>& probabilities, const BasicBatch<T>& targets) {
  const std::size_t slots = check_loss_shapes(probabilities, targets);
  const T lo = T(kBceClamp), hi = T(1.0 - kBceClamp);
  LossResult<T> r;
  double total = 0.0;
  r.grad.reserve(probabilities.size());
  for (std::size_t n = 0; n < probabilities.size(); ++n) {
    BasicTensor<T> g(probabilities[n].shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T p = probabilities[n][i];
      const T y = targets[n][i];
      total += bce_term(static_cast<double>(p), y);
      if (p > lo && p < hi) g[i] = (p - y) / (p * (T(1) - p)) / static_cast<T>(slots);
    }
    r.grad.push_back(std::move(g));
  }
  r.loss = static_cast<T>(total / static_cast<double>(slots));
  return r;
}

template <typename T>
LossResult<T> bce_with_logits(const BasicBatch<T>& logits, const BasicBatch<T>& targets) {
  const std::size_t slots = check_loss_shapes(logits, targets);
  LossResult<T> r;
  double total = 0.0;
  r.grad.reserve(logits.size());
  for (std::size_t n = 0; n < logits.size(); ++n) {
    BasicTensor<T> p = sigmoid(logits[n]);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const T y = targets[n][i];
      total += bce_term(static_cast<double>(p[i]), y);
      p[i] = (p[i] - y) / static_cast<T>(slots);
    }
    r.grad.push_back(std::move(p));
  }
  r.loss = static_cast<T>(total / static_cast<double>(slots));
  return r;
}

// --- folding ---------------------------------------------------------------

template <typename T>
SeparableConvParams<T> fold_batch_norm(const SeparableConvParams<T>& conv, const BatchNormParams<T>& bn) {
  conv.validate();
  bn.validate();
  if (bn.channels() != conv.out_channels)
    throw ShapeError("cannot fold batch norm with " + std::to_string(bn.channels()) + " channels into a conv with " +
                     std::to_string(conv.out_channels) + " outputs");
  SeparableConvParams<T> out = conv;
  for (int co = 0; co < conv.out_channels; ++co) {
    const T scale = bn.gamma[co] / std::sqrt(bn.running_var[co] + bn.epsilon);
    for (int ci = 0; ci < conv.in_channels; ++ci) out.pointwise[static_cast<std::size_t>(ci) * conv.out_channels + co] *= scale;
    out.bias[co] = (conv.bias[co] - bn.running_mean[co]) * scale + bn.beta[co];
  }
  return out;
}

// --- instantiations ------------------------------------------------------------

#define SGRT_INSTANTIATE_LAYERS(T)                                                                              \
  template struct SeparableConvParams<T>;                                                                       \
  template struct BatchNormParams<T>;                                                                           \
  template BasicBatch<T> separable_conv_forward(const BasicBatch<T>&, const SeparableConvParams<T>&);           \
  template BasicTensor<T> separable_conv_forward(const BasicTensor<T>&, const SeparableConvParams<T>&);         \
  template std::pair<BasicBatch<T>, SeparableConvGrads<T>> separable_conv_backward(                             \
      const BasicBatch<T>&, const SeparableConvParams<T>&, const BasicBatch<T>&);                               \
  template BatchNormResult<T> batch_norm_forward(const BasicBatch<T>&, const BatchNormParams<T>&, Mode);        \
  template std::pair<BasicBatch<T>, BatchNormGrads<T>> batch_norm_backward(                                     \
      const BasicBatch<T>&, const BatchNormParams<T>&, const BatchNormStats<T>&, const BasicBatch<T>&);         \
  template void batch_norm_infer_inplace(BasicTensor<T>&, const BatchNormParams<T>&);                           \
  template BasicTensor<T> leaky_relu_forward(const BasicTensor<T>&, T);                                         \
  template void leaky_relu_inplace(BasicTensor<T>&, T);                                                         \
  template BasicTensor<T> leaky_relu_backward(const BasicTensor<T>&, const BasicTensor<T>&, T);                 \
  template BasicTensor<T> upsample2x_forward(const BasicTensor<T>&);                                            \
  template BasicTensor<T> upsample2x_backward(const BasicTensor<T>&);                                           \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);                        \
  template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>&, int);                \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                                       \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template LossResult<T> bce_loss(const BasicBatch<T>&, const BasicBatch<T>&);                                  \
  template LossResult<T> bce_with_logits(const BasicBatch<T>&, const BasicBatch<T>&);                           \
  template SeparableConvParams<T> fold_batch_norm(const SeparableConvParams<T>&, const BatchNormParams<T>&);

SGRT_INSTANTIATE_LAYERS(float)
SGRT_INSTANTIATE_LAYERS(double)

#undef SGRT_INSTANTIATE_LAYERS

}  // namespace sgrt
