// Weight file layout (all integers and floats little-endian):
//
//   "SGRT"  u32 version  u32 input_height  u32 input_width  u32 class_count
//   u32 layer_count  f32 leaky_slope
//   class_count x (u8 length, name bytes)          channel order of the head
//   layer_count x layer record
//   u32 CRC-32 over every byte after the magic
//
// Layer record: u8 tag, then
//   conv (1):    u32 in, u32 out, u8 stride, u8 has_bn, u8 activation,
//                f32 epsilon, f32 momentum, then f32 payloads
//                depthwise, pointwise, bias[, gamma, beta, running_mean, running_var]
//   up2x (2):    nothing
//   concat (3):  u32 skip_source

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "sgrt/model.hpp"

namespace sgrt {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'R', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void floats(const std::vector<float>& v) {
    for (float f : v) f32(f);
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::vector<float> floats(std::size_t n) {
    need(4 * n);
    std::vector<float> out(n);
    for (auto& f : out) f = f32();
    return out;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw WeightFileError(WeightFileFault::kTruncated,
                            "weight file truncated at byte " + std::to_string(pos_) + " (needs " + std::to_string(n) +
                                " more, " + std::to_string(bytes_.size() - pos_) + " left)");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

// Upper bound on channels per layer, used to reject absurd headers early.
constexpr std::uint32_t kMaxChannels = 4096;

}  // namespace

ModelWeights weights_of(const SegModel& model) {
  ModelWeights w;
  w.input_height = model.input_shape().height;
  w.input_width = model.input_shape().width;
  w.leaky_slope = model.leaky_slope();
  w.class_names.assign(kClassNames.begin(), kClassNames.end());
  w.nodes = model.nodes();
  return w;
}

SegModel model_from_weights(const ModelWeights& weights) {
  if (weights.class_names.size() != static_cast<std::size_t>(kClassCount))
    throw WeightFileError(WeightFileFault::kCorruptHeader,
                          "weight file declares " + std::to_string(weights.class_names.size()) + " classes, expected " +
                              std::to_string(kClassCount));
  SegModel model(weights.input_height, weights.input_width, weights.leaky_slope, weights.nodes);
  model.set_mode(Mode::kInfer);
  return model;
}

std::vector<std::uint8_t> encode_weights(const ModelWeights& weights) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(weights.version);
  w.u32(static_cast<std::uint32_t>(weights.input_height));
  w.u32(static_cast<std::uint32_t>(weights.input_width));
  w.u32(static_cast<std::uint32_t>(weights.class_names.size()));
  w.u32(static_cast<std::uint32_t>(weights.nodes.size()));
  w.f32(weights.leaky_slope);
  for (const auto& name : weights.class_names) {
    if (name.size() > 255) throw PreconditionError("class name longer than 255 bytes: " + name);
    w.u8(static_cast<std::uint8_t>(name.size()));
    w.raw(name.data(), name.size());
  }
  for (const auto& n : weights.nodes) {
    w.u8(static_cast<std::uint8_t>(n.kind));
    switch (n.kind) {
      case NodeKind::kConvBlock:
        w.u32(static_cast<std::uint32_t>(n.conv.in_channels));
        w.u32(static_cast<std::uint32_t>(n.conv.out_channels));
        w.u8(static_cast<std::uint8_t>(n.conv.stride));
        w.u8(n.bn ? 1 : 0);
        w.u8(n.activation ? 1 : 0);
        w.f32(n.bn ? n.bn->epsilon : static_cast<float>(kBatchNormEpsilon));
        w.f32(n.bn ? n.bn->momentum : static_cast<float>(kBatchNormMomentum));
        w.floats(n.conv.depthwise);
        w.floats(n.conv.pointwise);
        w.floats(n.conv.bias);
        if (n.bn) {
          w.floats(n.bn->gamma);
          w.floats(n.bn->beta);
          w.floats(n.bn->running_mean);
          w.floats(n.bn->running_var);
        }
        break;
      case NodeKind::kUpsample2x:
        break;
      case NodeKind::kConcat:
        w.u32(static_cast<std::uint32_t>(n.skip_source));
        break;
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32_of(std::span<const std::uint8_t>(bytes).subspan(4));
  w.u32(crc);
  return std::move(bytes);
}

ModelWeights decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw WeightFileError(WeightFileFault::kCorruptHeader, "not a weight file: magic bytes are not \"SGRT\"");
  Reader r(bytes);
  r.str(4);
  ModelWeights w;
  w.version = r.u32();
  if (w.version != kWeightFormatVersion)
    throw WeightFileError(WeightFileFault::kVersionMismatch, "weight file version " + std::to_string(w.version) +
                                                                 ", this build reads version " +
                                                                 std::to_string(kWeightFormatVersion));
  w.input_height = static_cast<int>(r.u32());
  w.input_width = static_cast<int>(r.u32());
  const std::uint32_t classes = r.u32();
  const std::uint32_t layers = r.u32();
  if (classes > 255 || layers > 4096)
    throw WeightFileError(WeightFileFault::kCorruptHeader, "implausible class or layer count in header");
  w.leaky_slope = r.f32();
  for (std::uint32_t i = 0; i < classes; ++i) w.class_names.push_back(r.str(r.u8()));

  for (std::uint32_t i = 0; i < layers; ++i) {
    ModelNode<float> n;
    const std::uint8_t tag = r.u8();
    switch (tag) {
      case static_cast<std::uint8_t>(NodeKind::kConvBlock): {
        n.kind = NodeKind::kConvBlock;
        const std::uint32_t in = r.u32();
        const std::uint32_t out = r.u32();
        if (in == 0 || out == 0 || in > kMaxChannels || out > kMaxChannels)
          throw WeightFileError(WeightFileFault::kCorruptHeader,
                                "layer " + std::to_string(i) + " has implausible channel counts");
        n.conv.in_channels = static_cast<int>(in);
        n.conv.out_channels = static_cast<int>(out);
        n.conv.stride = r.u8();
        const bool has_bn = r.u8() != 0;
        n.activation = r.u8() != 0;
        const float eps = r.f32();
        const float momentum = r.f32();
        n.conv.depthwise = r.floats(9 * static_cast<std::size_t>(in));
        n.conv.pointwise = r.floats(static_cast<std::size_t>(in) * out);
        n.conv.bias = r.floats(out);
        if (has_bn) {
          BatchNormParams<float> bn;
          bn.gamma = r.floats(out);
          bn.beta = r.floats(out);
          bn.running_mean = r.floats(out);
          bn.running_var = r.floats(out);
          bn.epsilon = eps;
          bn.momentum = momentum;
          n.bn = std::move(bn);
        }
        break;
      }
      case static_cast<std::uint8_t>(NodeKind::kUpsample2x):
        n.kind = NodeKind::kUpsample2x;
        n.activation = false;
        break;
      case static_cast<std::uint8_t>(NodeKind::kConcat):
        n.kind = NodeKind::kConcat;
        n.activation = false;
        n.skip_source = static_cast<int>(r.u32());
        break;
      default:
        throw WeightFileError(WeightFileFault::kCorruptHeader,
                              "layer " + std::to_string(i) + " has unknown type tag " + std::to_string(tag));
    }
    w.nodes.push_back(std::move(n));
  }
  const std::size_t payload_end = r.pos();
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0)
    throw WeightFileError(WeightFileFault::kCorruptHeader,
                          std::to_string(r.remaining()) + " unexpected trailing bytes after checksum");
  const std::uint32_t actual = crc32_of(bytes.subspan(4, payload_end - 4));
  if (stored != actual) throw WeightFileError(WeightFileFault::kChecksum, "weight file checksum mismatch");
  return w;
}

void save_weights(const SegModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_weights(weights_of(model));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_weights(bytes);
  } catch (const WeightFileError& e) {
    throw WeightFileError(e.fault(), path.string() + ": " + e.what());
  }
}

SegModel load_model(const std::filesystem::path& path) { return model_from_weights(load_weights(path)); }

}  // namespace sgrt
