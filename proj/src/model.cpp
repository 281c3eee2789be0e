#include "sgrt/model.hpp"

#include <cmath>

#include "sgrt/random.hpp"

namespace sgrt {
namespace {

struct ConvSpec {
  int in, out, stride;
};

template <typename T>
ModelNode<T> conv_node(const ConvSpec& s, bool batch_norm, Rng& rng) {
  ModelNode<T> n;
  n.kind = NodeKind::kConvBlock;
  n.conv = SeparableConvParams<T>::zeros(s.in, s.out, s.stride);
  // Fan-in scaled uniform: unit gain for the depthwise taps, LeakyReLU gain for the mix.
  const double dw_limit = std::sqrt(3.0 / 9.0);
  const double pw_limit = std::sqrt(6.0 / s.in);
  for (auto& w : n.conv.depthwise) w = static_cast<T>(rng.uniform(-dw_limit, dw_limit));
  for (auto& w : n.conv.pointwise) w = static_cast<T>(rng.uniform(-pw_limit, pw_limit));
  if (batch_norm) n.bn = BatchNormParams<T>::identity(s.out);
  return n;
}

template <typename T>
ModelNode<T> simple_node(NodeKind kind, int skip = -1) {
  ModelNode<T> n;
  n.kind = kind;
  n.activation = false;
  n.skip_source = skip;
  return n;
}

template <typename T>
void add_into(BasicBatch<T>& dst, const BasicBatch<T>& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  for (std::size_t n = 0; n < dst.size(); ++n) {
    auto d = dst[n].values();
    auto s = src[n].values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  }
}

}  // namespace

template <typename T>
BasicSegModel<T>::BasicSegModel(int input_height, int input_width, T leaky_slope, std::vector<ModelNode<T>> nodes)
    : input_{input_height, input_width, 3}, slope_(leaky_slope), nodes_(std::move(nodes)) {
  if (input_height < 4 || input_width < 4 || input_height % 4 != 0 || input_width % 4 != 0)
    throw PreconditionError("model input must be at least 4x4 with both dims divisible by 4, got " +
                            std::to_string(input_height) + "x" + std::to_string(input_width));
  if (!(leaky_slope > T(0) && leaky_slope < T(1))) throw PreconditionError("LeakyReLU slope must lie in (0, 1)");
  infer_shapes();
}

template <typename T>
BasicSegModel<T> BasicSegModel<T>::build(int input_height, int input_width, std::uint64_t seed,
                                         const ModelOptions& options) {
  Rng rng(seed);
  const bool bn = options.batch_norm;
  std::vector<ModelNode<T>> nodes;
  auto conv = [&](int in, int out, int stride = 1) { nodes.push_back(conv_node<T>({in, out, stride}, bn, rng)); };

  conv(3, 8);  // node 0, skip source at scale 1
  conv(8, 8);
  conv(8, 8, 2);
  conv(8, 16);
  conv(16, 16);  // node 4, skip source at scale 1/2
  conv(16, 16, 2);
  conv(16, 24);
  for (int i = 0; i < 5; ++i) conv(24, 24);
  nodes.push_back(simple_node<T>(NodeKind::kUpsample2x));
  nodes.push_back(simple_node<T>(NodeKind::kConcat, 4));
  conv(40, 16);
  conv(16, 16);
  conv(16, 16);
  nodes.push_back(simple_node<T>(NodeKind::kUpsample2x));
  nodes.push_back(simple_node<T>(NodeKind::kConcat, 0));
  conv(24, 8);
  conv(8, 8);
  conv(8, 8);
  conv(8, kClassCount);

  return BasicSegModel(input_height, input_width, static_cast<T>(options.leaky_slope), std::move(nodes));
}

template <typename T>
void BasicSegModel<T>::infer_shapes() {
  if (nodes_.empty()) throw PreconditionError("model has no layers");
  shapes_.clear();
  shapes_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    const Shape in = i == 0 ? input_ : shapes_[i - 1];
    const std::string where = "layer " + std::to_string(i) + ": ";
    switch (n.kind) {
      case NodeKind::kConvBlock: {
        n.conv.validate();
        if (n.conv.in_channels != in.channels)
          throw ShapeError(where + "conv expects " + std::to_string(n.conv.in_channels) + " channels, receives " +
                           in.str());
        if (n.conv.stride == 2 && (in.height % 2 != 0 || in.width % 2 != 0))
          throw PreconditionError(where + "stride 2 on odd dims " + in.str());
        if (n.bn) {
          n.bn->validate();
          if (n.bn->channels() != n.conv.out_channels) throw ShapeError(where + "batch norm channel mismatch");
        }
        shapes_.push_back(separable_conv_output_shape(in, n.conv.out_channels, n.conv.stride));
        break;
      }
      case NodeKind::kUpsample2x:
        shapes_.push_back(Shape{in.height * 2, in.width * 2, in.channels});
        break;
      case NodeKind::kConcat: {
        if (n.skip_source < 0 || n.skip_source >= static_cast<int>(i))
          throw PreconditionError(where + "concat skip source must be an earlier layer");
        const Shape skip = shapes_[n.skip_source];
        if (skip.height != in.height || skip.width != in.width)
          throw ShapeError(where + "concat joins " + in.str() + " with " + skip.str());
        shapes_.push_back(Shape{in.height, in.width, in.channels + skip.channels});
        break;
      }
      default:
        throw PreconditionError(where + "unknown layer kind");
    }
  }
  if (shapes_.back() != output_shape())
    throw ShapeError("model output " + shapes_.back().str() + " does not match " + output_shape().str());
}

template <typename T>
void BasicSegModel<T>::set_mode(Mode mode) {
  mode_ = mode;
  cache_.reset();
}

template <typename T>
int BasicSegModel<T>::batch_norm_count() const {
  int count = 0;
  for (const auto& n : nodes_) count += n.bn.has_value() ? 1 : 0;
  return count;
}

template <typename T>
BasicTensor<T> BasicSegModel<T>::predict(const BasicTensor<T>& input) const {
  assert_shape(input, input_);
  std::vector<BasicTensor<T>> outputs(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    const BasicTensor<T>& in = i == 0 ? input : outputs[i - 1];
    switch (n.kind) {
      case NodeKind::kConvBlock:
        outputs[i] = separable_conv_forward(in, n.conv);
        if (n.bn) batch_norm_infer_inplace(outputs[i], *n.bn);
        if (n.activation) leaky_relu_inplace(outputs[i], slope_);
        break;
      case NodeKind::kUpsample2x:
        outputs[i] = upsample2x_forward(in);
        break;
      case NodeKind::kConcat:
        outputs[i] = concat_channels(in, outputs[n.skip_source]);
        break;
    }
    // Release activations nobody reads any more.
    if (i >= 1) {
      bool needed = false;
      for (std::size_t j = i + 1; j < nodes_.size(); ++j)
        if (nodes_[j].skip_source == static_cast<int>(i - 1)) needed = true;
      if (!needed) outputs[i - 1] = BasicTensor<T>();
    }
  }
  return std::move(outputs.back());
}

template <typename T>
BasicBatch<T> BasicSegModel<T>::predict(const BasicBatch<T>& input) const {
  BasicBatch<T> out;
  out.reserve(input.size());
  for (const auto& t : input) out.push_back(predict(t));
  return out;
}

template <typename T>
BasicBatch<T> BasicSegModel<T>::forward(const BasicBatch<T>& input) {
  const Shape s = batch_shape(input);
  assert_shape(s, input_);
  if (mode_ == Mode::kInfer) return predict(input);

  ForwardCache cache;
  cache.batch = input.size();
  cache.nodes.resize(nodes_.size());
  std::vector<BasicBatch<T>> outputs(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    const BasicBatch<T>& in = i == 0 ? input : outputs[i - 1];
    auto& c = cache.nodes[i];
    switch (n.kind) {
      case NodeKind::kConvBlock: {
        c.input = in;
        BasicBatch<T> y = separable_conv_forward(in, n.conv);
        if (n.bn) {
          auto bn = batch_norm_forward(y, *n.bn, Mode::kTrain);
          n.bn->running_mean = std::move(bn.updated_running_mean);
          n.bn->running_var = std::move(bn.updated_running_var);
          c.stats = std::move(bn.stats);
          c.conv_out = std::move(y);
          y = std::move(bn.output);
        }
        if (n.activation) {
          c.pre_activation = y;
          for (auto& t : y) leaky_relu_inplace(t, slope_);
        }
        outputs[i] = std::move(y);
        break;
      }
      case NodeKind::kUpsample2x:
        outputs[i].reserve(in.size());
        for (const auto& t : in) outputs[i].push_back(upsample2x_forward(t));
        break;
      case NodeKind::kConcat:
        outputs[i].reserve(in.size());
        for (std::size_t b = 0; b < in.size(); ++b)
          outputs[i].push_back(concat_channels(in[b], outputs[n.skip_source][b]));
        break;
    }
  }
  cache_ = std::move(cache);
  return std::move(outputs.back());
}

template <typename T>
ModelGradients<T> BasicSegModel<T>::backward(const BasicBatch<T>& loss_grad) {
  return backward(loss_grad, nullptr);
}

template <typename T>
ModelGradients<T> BasicSegModel<T>::backward(const BasicBatch<T>& loss_grad, BasicBatch<T>* input_grad) {
  if (!cache_) throw StateError("backward called without a cached train-mode forward pass");
  if (loss_grad.size() != cache_->batch) throw ShapeError("loss gradient batch size does not match the forward pass");
  for (const auto& g : loss_grad) assert_shape(g, output_shape());

  const std::size_t count = nodes_.size();
  std::vector<BasicBatch<T>> grad_out(count);
  grad_out[count - 1] = loss_grad;
  BasicBatch<T> grad_input;
  std::vector<SeparableConvGrads<T>> conv_grads(count);
  std::vector<BatchNormGrads<T>> bn_grads(count);

  auto send = [&](int target, const BasicBatch<T>& g) {
    if (target < 0)
      add_into(grad_input, g);
    else
      add_into(grad_out[target], g);
  };

  for (int i = static_cast<int>(count) - 1; i >= 0; --i) {
    const auto& n = nodes_[i];
    const auto& c = cache_->nodes[i];
    BasicBatch<T> g = std::move(grad_out[i]);
    switch (n.kind) {
      case NodeKind::kConvBlock: {
        if (n.activation)
          for (std::size_t b = 0; b < g.size(); ++b) g[b] = leaky_relu_backward(c.pre_activation[b], g[b], slope_);
        if (n.bn) {
          auto [gx, gp] = batch_norm_backward(c.conv_out, *n.bn, c.stats, g);
          g = std::move(gx);
          bn_grads[i] = std::move(gp);
        }
        auto [gx, gp] = separable_conv_backward(c.input, n.conv, g);
        conv_grads[i] = std::move(gp);
        send(i - 1, gx);
        break;
      }
      case NodeKind::kUpsample2x: {
        BasicBatch<T> gx;
        gx.reserve(g.size());
        for (const auto& t : g) gx.push_back(upsample2x_backward(t));
        send(i - 1, gx);
        break;
      }
      case NodeKind::kConcat: {
        const int first = shapes_[i - 1].channels;
        BasicBatch<T> ga, gb;
        for (const auto& t : g) {
          auto [a, b] = split_channels(t, first);
          ga.push_back(std::move(a));
          gb.push_back(std::move(b));
        }
        send(i - 1, ga);
        send(n.skip_source, gb);
        break;
      }
    }
  }

  ModelGradients<T> grads;
  for (std::size_t i = 0; i < count; ++i) {
    if (nodes_[i].kind != NodeKind::kConvBlock) continue;
    grads.push_back(std::move(conv_grads[i].depthwise));
    grads.push_back(std::move(conv_grads[i].pointwise));
    grads.push_back(std::move(conv_grads[i].bias));
    if (nodes_[i].bn) {
      grads.push_back(std::move(bn_grads[i].gamma));
      grads.push_back(std::move(bn_grads[i].beta));
    }
  }
  if (input_grad) *input_grad = std::move(grad_input);
  return grads;
}

template <typename T>
std::vector<std::span<T>> BasicSegModel<T>::parameters() {
  std::vector<std::span<T>> out;
  for (auto& n : nodes_) {
    if (n.kind != NodeKind::kConvBlock) continue;
    out.emplace_back(n.conv.depthwise);
    out.emplace_back(n.conv.pointwise);
    out.emplace_back(n.conv.bias);
    if (n.bn) {
      out.emplace_back(n.bn->gamma);
      out.emplace_back(n.bn->beta);
    }
  }
  return out;
}

template <typename T>
std::vector<ParameterSlot> BasicSegModel<T>::parameter_slots() const {
  std::vector<ParameterSlot> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.kind != NodeKind::kConvBlock) continue;
    const int node = static_cast<int>(i);
    const std::string prefix = "node" + std::to_string(i) + ".";
    out.push_back({node, prefix + "depthwise", n.conv.depthwise.size()});
    out.push_back({node, prefix + "pointwise", n.conv.pointwise.size()});
    out.push_back({node, prefix + "bias", n.conv.bias.size()});
    if (n.bn) {
      out.push_back({node, prefix + "gamma", n.bn->gamma.size()});
      out.push_back({node, prefix + "beta", n.bn->beta.size()});
    }
  }
  return out;
}

template <typename T>
BasicSegModel<T> prepare_inference(const BasicSegModel<T>& model) {
  if (model.mode() != Mode::kInfer) throw PreconditionError("prepare_inference requires a model in infer mode");
  std::vector<ModelNode<T>> nodes = model.nodes();
  for (auto& n : nodes) {
    if (n.kind == NodeKind::kConvBlock && n.bn) {
      n.conv = fold_batch_norm(n.conv, *n.bn);
      n.bn.reset();
    }
  }
  const Shape in = model.input_shape();
  BasicSegModel<T> out(in.height, in.width, model.leaky_slope(), std::move(nodes));
  out.set_mode(Mode::kInfer);
  return out;
}

template <typename T>
ParameterCount count_parameters(const BasicSegModel<T>& model) {
  ParameterCount total;
  const auto& nodes = model.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.kind != NodeKind::kConvBlock) continue;
    LayerParameterCount l;
    l.node = static_cast<int>(i);
    l.in_channels = n.conv.in_channels;
    l.out_channels = n.conv.out_channels;
    l.stride = n.conv.stride;
    l.depthwise = n.conv.depthwise.size();
    l.pointwise = n.conv.pointwise.size();
    l.bias = n.conv.bias.size();
    if (n.bn) {
      l.bn_affine = n.bn->gamma.size() + n.bn->beta.size();
      l.running_stats = n.bn->running_mean.size() + n.bn->running_var.size();
    }
    total.trainable += l.trainable();
    total.running_stats += l.running_stats;
    total.layers.push_back(l);
  }
  return total;
}

template class BasicSegModel<float>;
template class BasicSegModel<double>;
template BasicSegModel<float> prepare_inference(const BasicSegModel<float>&);
template BasicSegModel<double> prepare_inference(const BasicSegModel<double>&);
template ParameterCount count_parameters(const BasicSegModel<float>&);
template ParameterCount count_parameters(const BasicSegModel<double>&);

}  // namespace sgrt
