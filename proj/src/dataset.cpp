#include "sgrt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sgrt/json_util.hpp"

namespace sgrt {

namespace fs = std::filesystem;
using detail::json;

// --- sample types ------------------------------------------------------------

Mask::Mask(int h, int w, std::uint8_t fill) : height(h), width(w) {
  if (h < 1 || w < 1) throw PreconditionError("mask size must be positive");
  labels.assign(static_cast<std::size_t>(h) * w, fill);
}

std::array<std::size_t, kMaskClassCount> Mask::histogram() const {
  std::array<std::size_t, kMaskClassCount> h{};
  for (auto v : labels) {
    if (v >= kMaskClassCount) throw PreconditionError("mask label " + std::to_string(v) + " out of range");
    ++h[v];
  }
  return h;
}

void SegmentationSample::validate() const {
  assert_shape(image, Shape{mask.height, mask.width, 3});
  if (mask.labels.size() != static_cast<std::size_t>(mask.height) * mask.width)
    throw ShapeError("mask label count does not match its size");
  for (auto v : mask.labels)
    if (v >= kMaskClassCount) throw PreconditionError("mask label " + std::to_string(v) + " out of range");
}

// --- palette -----------------------------------------------------------------

Mask decode_mask(const RgbImage& colors) {
  Mask mask(colors.height, colors.width);
  for (int y = 0; y < colors.height; ++y)
    for (int x = 0; x < colors.width; ++x) {
      const std::uint8_t* p = colors.bytes.data() + (static_cast<std::size_t>(y) * colors.width + x) * 3;
      const auto it = std::find_if(kPalette.begin(), kPalette.end(), [p](const PaletteEntry& e) {
        return e.rgb[0] == p[0] && e.rgb[1] == p[1] && e.rgb[2] == p[2];
      });
      if (it == kPalette.end()) {
        std::ostringstream msg;
        msg << "mask color (" << int(p[0]) << "," << int(p[1]) << "," << int(p[2]) << ") at pixel (x=" << x
            << ", y=" << y << ") is not a palette color";
        throw DecodeError(msg.str());
      }
      mask.at(y, x) = static_cast<std::uint8_t>(it->cls);
    }
  return mask;
}

RgbImage encode_mask(const Mask& mask) {
  RgbImage out{mask.height, mask.width, std::vector<std::uint8_t>(mask.labels.size() * 3)};
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    if (mask.labels[i] >= kMaskClassCount) throw PreconditionError("mask label out of range");
    std::copy_n(kPalette[mask.labels[i]].rgb.begin(), 3, out.bytes.begin() + 3 * i);
  }
  return out;
}

SegmentationSample load_sample(const fs::path& image_path, const fs::path& mask_path) {
  SegmentationSample s;
  s.image = read_png_tensor(image_path);
  try {
    s.mask = decode_mask(read_png(mask_path));
  } catch (const DecodeError& e) {
    throw DecodeError(mask_path.string() + ": " + e.what());
  }
  if (s.image.height() != s.mask.height || s.image.width() != s.mask.width)
    throw ShapeError("image " + image_path.string() + " is " + s.image.shape().str() + " but mask " +
                     mask_path.string() + " is " + std::to_string(s.mask.height) + "x" +
                     std::to_string(s.mask.width));
  return s;
}

void save_sample(const SegmentationSample& sample, const fs::path& image_path, const fs::path& mask_path) {
  sample.validate();
  write_png_tensor(image_path, sample.image);
  write_png(mask_path, encode_mask(sample.mask));
}

// --- resampling and targets ----------------------------------------------------

namespace {

void check_subsample(int h, int w, int th, int tw) {
  if (th < 1 || tw < 1) throw PreconditionError("subsample target must be positive");
  if (th > h || tw > w)
    throw PreconditionError("subsampling cannot upscale " + std::to_string(h) + "x" + std::to_string(w) + " to " +
                            std::to_string(th) + "x" + std::to_string(tw));
}

int source_index(int i, int source, int target) {
  return static_cast<int>(static_cast<long long>(i) * source / target);
}

}  // namespace

Tensor subsample_image(const Tensor& image, int th, int tw) {
  check_subsample(image.height(), image.width(), th, tw);
  if (th == image.height() && tw == image.width()) return image;
  const int c = image.channels();
  Tensor out({th, tw, c});
  for (int y = 0; y < th; ++y) {
    const int sy = source_index(y, image.height(), th);
    for (int x = 0; x < tw; ++x) std::copy_n(image.pixel(sy, source_index(x, image.width(), tw)), c, out.pixel(y, x));
  }
  return out;
}

Mask subsample_mask(const Mask& mask, int th, int tw) {
  check_subsample(mask.height, mask.width, th, tw);
  if (th == mask.height && tw == mask.width) return mask;
  Mask out(th, tw);
  for (int y = 0; y < th; ++y)
    for (int x = 0; x < tw; ++x)
      out.at(y, x) = mask.at(source_index(y, mask.height, th), source_index(x, mask.width, tw));
  return out;
}

SegmentationSample subsample_sample(const SegmentationSample& s, int th, int tw) {
  return {subsample_image(s.image, th, tw), subsample_mask(s.mask, th, tw)};
}

Tensor mask_to_targets(const Mask& mask) {
  Tensor t({mask.height, mask.width, kMaskClassCount - 1});
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    const int cls = mask.labels[i];
    if (cls >= kMaskClassCount) throw PreconditionError("mask label out of range");
    if (cls > 0) t[i * (kMaskClassCount - 1) + (cls - 1)] = 1.0f;
  }
  return t;
}

Mask probabilities_to_mask(const Tensor& probs, float threshold) {
  if (probs.channels() != kMaskClassCount - 1)
    throw ShapeError("expected " + std::to_string(kMaskClassCount - 1) + " probability channels, got " +
                     probs.shape().str());
  Mask mask(probs.height(), probs.width());
  for (int y = 0; y < probs.height(); ++y)
    for (int x = 0; x < probs.width(); ++x) {
      const float* p = probs.pixel(y, x);
      int best = -1;
      for (int c = 0; c < kMaskClassCount - 1; ++c)
        if (p[c] >= threshold && (best < 0 || p[c] > p[best])) best = c;
      mask.at(y, x) = static_cast<std::uint8_t>(best + 1);
    }
  return mask;
}

// --- toy scenes ----------------------------------------------------------------

namespace {

struct Canvas {
  SegmentationSample& s;

  void paint(int y, int x, SegClass cls, std::array<double, 3> rgb) {
    if (y < 0 || x < 0 || y >= s.mask.height || x >= s.mask.width) return;
    s.mask.at(y, x) = static_cast<std::uint8_t>(cls);
    float* p = s.image.pixel(y, x);
    for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(rgb[c]);
  }
  void rect(double x0, double y0, double x1, double y1, SegClass cls, std::array<double, 3> rgb) {
    for (int y = std::max(0, int(std::ceil(y0 - 0.5))); y < std::min(s.mask.height, int(std::ceil(y1 - 0.5))); ++y)
      for (int x = std::max(0, int(std::ceil(x0 - 0.5))); x < std::min(s.mask.width, int(std::ceil(x1 - 0.5))); ++x)
        paint(y, x, cls, rgb);
  }
};

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const double t = len2 > 0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

}  // namespace

SegmentationSample generate_toy_scene(std::uint64_t seed, int h, int w) {
  if (h < 32 || w < 32) throw PreconditionError("toy scenes need at least 32x32 pixels");
  Rng rng(derive_seed(seed, 0x5ce7e));
  SegmentationSample s{Tensor({h, w, 3}), Mask(h, w)};
  Canvas canvas{s};

  // Background band with vertical stripes, then the field.
  const int horizon = rng.uniform_int(static_cast<int>(0.15 * h), static_cast<int>(0.35 * h));
  const double gray = rng.uniform(0.25, 0.65);
  const double stripe_freq = rng.uniform(0.2, 0.8);
  const double stripe_phase = rng.uniform(0.0, 6.28);
  const std::array<double, 3> tint{rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08)};
  for (int y = 0; y < horizon; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = gray + 0.12 * std::sin(x * stripe_freq + stripe_phase);
      canvas.paint(y, x, SegClass::kBackground, {v + tint[0], v + tint[1], v + tint[2]});
    }
  const std::array<double, 3> green{rng.uniform(0.05, 0.2), rng.uniform(0.45, 0.7), rng.uniform(0.05, 0.2)};
  for (int y = horizon; y < h; ++y)
    for (int x = 0; x < w; ++x) canvas.paint(y, x, SegClass::kField, green);

  // Line segments on the field.
  const double thickness = std::max(0.75, h / 64.0);
  const int lines = rng.uniform_int(2, 4);
  for (int i = 0; i < lines; ++i) {
    double ax, ay, bx, by;
    const int kind = rng.uniform_int(0, 2);
    if (kind == 0) {  // horizontal
      ay = by = rng.uniform(horizon + 2.0, h - 2.0);
      ax = rng.uniform(0.0, w * 0.5);
      bx = rng.uniform(w * 0.5, w);
    } else if (kind == 1) {  // vertical
      ax = bx = rng.uniform(2.0, w - 2.0);
      ay = rng.uniform(horizon, horizon + (h - horizon) * 0.4);
      by = rng.uniform(horizon + (h - horizon) * 0.6, h);
    } else {
      ax = rng.uniform(0.0, w);
      bx = rng.uniform(0.0, w);
      ay = rng.uniform(horizon, h);
      by = rng.uniform(horizon, h);
    }
    const double white = rng.uniform(0.9, 1.0);
    for (int y = horizon; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by) <= thickness)
          canvas.paint(y, x, SegClass::kLine, {white, white, white});
  }

  // Goal posts: vertical bars crossing the horizon.
  const int posts = rng.uniform_int(0, 2);
  for (int i = 0; i < posts; ++i) {
    const double bar = std::max(2.0, w / 40.0);
    const double x0 = rng.uniform(0.0, w - bar);
    const double top = horizon - rng.uniform(0.1, 0.2) * h;
    const double bottom = horizon + rng.uniform(0.05, 0.15) * h;
    canvas.rect(x0, top, x0 + bar, bottom, SegClass::kGoalPost, {0.95, 0.9, rng.uniform(0.45, 0.6)});
  }

  // Robots: torso, head and two legs, light body with a dark jersey.
  const int robots = rng.uniform_int(0, 2);
  for (int i = 0; i < robots; ++i) {
    const double rw = rng.uniform(0.06, 0.12) * w;
    const double rh = rng.uniform(0.15, 0.3) * h;
    const double cx = rng.uniform(rw, w - rw);
    const double foot = rng.uniform(horizon + 0.1 * h, static_cast<double>(h));
    const double body_top = foot - rh;
    const std::array<double, 3> body{0.78, 0.78, 0.8};
    const std::array<double, 3> jersey{rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2), rng.uniform(0.25, 0.5)};
    const double leg_w = rw * 0.35;
    canvas.rect(cx - rw / 2, foot - rh * 0.35, cx - rw / 2 + leg_w, foot, SegClass::kRobot, body);
    canvas.rect(cx + rw / 2 - leg_w, foot - rh * 0.35, cx + rw / 2, foot, SegClass::kRobot, body);
    canvas.rect(cx - rw / 2, body_top + rh * 0.2, cx + rw / 2, foot - rh * 0.35, SegClass::kRobot, body);
    canvas.rect(cx - rw / 2, body_top + rh * 0.35, cx + rw / 2, body_top + rh * 0.55, SegClass::kRobot, jersey);
    canvas.rect(cx - rw * 0.3, body_top, cx + rw * 0.3, body_top + rh * 0.2, SegClass::kRobot, body);
  }

  // Balls last so they stay visible.
  const int balls = rng.uniform_int(0, 2);
  for (int i = 0; i < balls; ++i) {
    const double r = std::max(1.5, rng.uniform(0.04, 0.08) * h);
    const double cx = rng.uniform(r, w - r);
    const double cy = rng.uniform(horizon + r, h - r);
    const std::array<double, 3> red{rng.uniform(0.85, 1.0), rng.uniform(0.0, 0.15), rng.uniform(0.0, 0.15)};
    for (int y = static_cast<int>(cy - r - 1); y <= static_cast<int>(cy + r + 1); ++y)
      for (int x = static_cast<int>(cx - r - 1); x <= static_cast<int>(cx + r + 1); ++x)
        if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) canvas.paint(y, x, SegClass::kBall, red);
  }

  // Sensor noise.
  for (auto& v : s.image.values()) v = std::clamp(static_cast<float>(v + 0.02 * rng.normal()), 0.0f, 1.0f);
  return s;
}

// --- manifests -----------------------------------------------------------------

const std::vector<std::size_t>& DatasetManifest::split(const std::string& name) const {
  const auto it = splits.find(name);
  if (it == splits.end()) throw ConfigError("manifest has no split named \"" + name + "\"");
  return it->second;
}

void DatasetManifest::validate() const {
  std::set<std::string> paths;
  for (const auto& e : entries) {
    if (!paths.insert(e.image).second) throw ConfigError("duplicate manifest path " + e.image);
    if (!paths.insert(e.mask).second) throw ConfigError("duplicate manifest path " + e.mask);
  }
  std::vector<int> owner(entries.size(), -1);
  int k = 0;
  for (const auto& [name, indices] : splits) {
    for (auto i : indices) {
      if (i >= entries.size())
        throw ConfigError("split \"" + name + "\" references entry " + std::to_string(i) + " of " +
                          std::to_string(entries.size()));
      if (owner[i] != -1) throw ConfigError("entry " + std::to_string(i) + " appears in more than one split");
      owner[i] = k;
    }
    ++k;
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const json root = detail::parse_json(text, path.string());
  detail::require_object(root, "manifest");
  detail::reject_unknown_keys(root, {"version", "palette", "entries", "splits", "split_seed"}, "manifest");
  DatasetManifest m;
  m.root = path.parent_path();
  try {
    for (const auto& e : root.at("entries")) {
      detail::reject_unknown_keys(e, {"image", "mask"}, "manifest entry");
      m.entries.push_back({e.at("image").get<std::string>(), e.at("mask").get<std::string>()});
    }
    if (root.contains("splits"))
      for (const auto& [name, idx] : root.at("splits").items()) m.splits[name] = idx.get<std::vector<std::size_t>>();
    if (root.contains("split_seed")) m.split_seed = root.at("split_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed manifest: " + e.what());
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  m.validate();
  json root;
  root["version"] = 1;
  root["palette"] = json::array();
  for (const auto& p : kPalette)
    root["palette"].push_back({{"index", static_cast<int>(p.cls)}, {"name", p.name}, {"rgb", p.rgb}});
  root["entries"] = json::array();
  for (const auto& e : m.entries) root["entries"].push_back({{"image", e.image}, {"mask", e.mask}});
  root["splits"] = json::object();
  for (const auto& [name, idx] : m.splits) root["splits"][name] = idx;
  root["split_seed"] = m.split_seed;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << root.dump(2) << '\n';
}

DatasetManifest split_manifest(const DatasetManifest& manifest, const std::vector<double>& fractions,
                               std::uint64_t seed, std::vector<std::string> names) {
  if (manifest.entries.empty()) throw PreconditionError("cannot split an empty manifest");
  if (fractions.empty()) throw ConfigError("split needs at least one fraction");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
    sum += f;
  }
  if (sum > 1.0 + 1e-9) throw ConfigError("split fractions sum to " + std::to_string(sum) + ", more than 1");
  if (names.empty()) names = {"train", "val", "test"};
  if (names.size() < fractions.size()) throw ConfigError("not enough split names for the fractions");

  std::vector<std::size_t> order(manifest.entries.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);

  DatasetManifest out = manifest;
  out.splits.clear();
  out.split_seed = seed;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    const auto n = static_cast<std::size_t>(std::floor(fractions[k] * order.size() + 1e-9));
    const std::size_t end = std::min(order.size(), pos + n);
    out.splits[names[k]] = std::vector<std::size_t>(order.begin() + pos, order.begin() + end);
    pos = end;
  }
  return out;
}

DatasetManifest write_toy_dataset(const fs::path& dir, int count, std::uint64_t seed, int height, int width) {
  if (count < 1) throw PreconditionError("toy dataset needs at least one scene");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  DatasetManifest m;
  m.root = dir;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06d.png", i);
    ManifestEntry e{std::string("images/") + name, std::string("masks/") + name};
    save_sample(generate_toy_scene(derive_seed(seed, static_cast<std::uint64_t>(i)), height, width), dir / e.image,
                dir / e.mask);
    m.entries.push_back(std::move(e));
  }
  m = split_manifest(m, {0.8, 0.2}, seed, {"train", "test"});
  save_manifest(m, dir / "manifest.json");
  return m;
}

// --- batching -------------------------------------------------------------------

ManifestSource::ManifestSource(DatasetManifest manifest, bool cache)
    : manifest_(std::move(manifest)), cache_(cache), cached_(manifest_.entries.size()) {}

SegmentationSample ManifestSource::load(std::size_t index) const {
  if (index >= manifest_.entries.size()) throw PreconditionError("manifest entry index out of range");
  if (cache_ && cached_[index]) return *cached_[index];
  SegmentationSample s = load_sample(manifest_.image_path(index), manifest_.mask_path(index));
  if (cache_) cached_[index] = s;
  return s;
}

MemorySource::MemorySource(std::vector<SegmentationSample> samples) : samples_(std::move(samples)) {
  for (const auto& s : samples_) s.validate();
}

namespace {
constexpr std::uint64_t kAugmentStream = 0xa06e;
constexpr std::uint64_t kBackgroundStream = 0xb6;
constexpr std::uint64_t kShuffleStream = 0x5f1e;
}  // namespace

TrainingBatch prepare_samples(const SampleSource& source, const std::vector<std::size_t>& entries,
                              const BatchOptions& options, std::uint64_t epoch_seed) {
  TrainingBatch batch;
  batch.entries = entries;
  for (const std::size_t i : entries) {
    SegmentationSample s = source.load(i);
    if (!options.backgrounds.empty()) {
      Rng rng(derive_seed(derive_seed(epoch_seed, kBackgroundStream), i));
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.backgrounds.size()) - 1));
      s = replace_background(s, options.backgrounds[pick]);
    }
    if (options.augmentation) s = apply_pipeline(s, *options.augmentation, derive_seed(epoch_seed ^ kAugmentStream, i));
    const int th = options.input_height > 0 ? options.input_height : s.mask.height;
    const int tw = options.input_width > 0 ? options.input_width : s.mask.width;
    s = subsample_sample(s, th, tw);
    batch.inputs.push_back(std::move(s.image));
    batch.targets.push_back(mask_to_targets(s.mask));
  }
  return batch;
}

EpochBatches::EpochBatches(const SampleSource& source, std::vector<std::size_t> indices, const BatchOptions& options,
                           std::uint64_t epoch_seed)
    : source_(source), options_(options), order_(std::move(indices)), epoch_seed_(epoch_seed) {
  if (options.batch_size < 1) throw ConfigError("batch size must be at least 1");
  Rng rng(derive_seed(epoch_seed, kShuffleStream));
  for (std::size_t i = order_.size(); i > 1; --i)
    std::swap(order_[i - 1], order_[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

std::size_t EpochBatches::batch_count() const {
  const auto b = static_cast<std::size_t>(options_.batch_size);
  return (order_.size() + b - 1) / b;
}

TrainingBatch EpochBatches::batch(std::size_t k) const {
  if (k >= batch_count()) throw PreconditionError("batch index out of range");
  const auto b = static_cast<std::size_t>(options_.batch_size);
  const auto first = order_.begin() + static_cast<std::ptrdiff_t>(k * b);
  const auto last = order_.begin() + static_cast<std::ptrdiff_t>(std::min(order_.size(), (k + 1) * b));
  return prepare_samples(source_, std::vector<std::size_t>(first, last), options_, epoch_seed_);
}

std::vector<Tensor> load_backgrounds(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("background directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no PNG backgrounds in " + dir.string());
  std::vector<Tensor> out;
  for (const auto& f : files) out.push_back(read_png_tensor(f));
  return out;
}

}  // namespace sgrt
