#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgrt/augment.hpp"
#include "sgrt/image_io.hpp"
#include "sgrt/sample.hpp"

namespace sgrt {

// --- palette -----------------------------------------------------------------

/// Exact palette match; DecodeError names the RGB value and pixel otherwise.
Mask decode_mask(const RgbImage& colors);
RgbImage encode_mask(const Mask& mask);

SegmentationSample load_sample(const std::filesystem::path& image_path, const std::filesystem::path& mask_path);
void save_sample(const SegmentationSample& sample, const std::filesystem::path& image_path,
                 const std::filesystem::path& mask_path);

// --- resampling and targets ----------------------------------------------------

/// Nearest-neighbour decimation: out(y, x) = in(floor(y * H / h), floor(x * W / w)).
Tensor subsample_image(const Tensor& image, int target_height, int target_width);
Mask subsample_mask(const Mask& mask, int target_height, int target_width);
SegmentationSample subsample_sample(const SegmentationSample& sample, int target_height, int target_width);

/// h x w x 5; channel c is 1 where the mask holds class c + 1.
Tensor mask_to_targets(const Mask& mask);
/// Per-class sigmoid >= threshold makes a candidate; the most probable
/// candidate wins; no candidate means background.
Mask probabilities_to_mask(const Tensor& probabilities, float threshold = 0.5f);

// --- toy scenes ----------------------------------------------------------------

/// Procedural field scene with pixel-exact mask. Requires h, w >= 32.
SegmentationSample generate_toy_scene(std::uint64_t seed, int height, int width);

// --- manifests -----------------------------------------------------------------

struct ManifestEntry {
  std::string image;  // relative to the manifest directory
  std::string mask;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory the entry paths are relative to
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::vector<std::size_t>> splits;
  std::uint64_t split_seed = 0;

  std::filesystem::path image_path(std::size_t i) const { return root / entries.at(i).image; }
  std::filesystem::path mask_path(std::size_t i) const { return root / entries.at(i).mask; }
  const std::vector<std::size_t>& split(const std::string& name) const;

  /// Unique paths, in-range and pairwise disjoint splits.
  void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Seeded shuffle then contiguous partition; split k receives floor(f_k * n)
/// entries. Names default to train, val, test.
DatasetManifest split_manifest(const DatasetManifest& manifest, const std::vector<double>& fractions,
                               std::uint64_t seed, std::vector<std::string> names = {});

/// Writes `count` toy scenes under `dir` (images/, masks/, manifest.json)
/// with an 80/20 train/test split.
DatasetManifest write_toy_dataset(const std::filesystem::path& dir, int count, std::uint64_t seed, int height,
                                  int width);

// --- batching -------------------------------------------------------------------

class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual SegmentationSample load(std::size_t index) const = 0;
};

/// Reads entries from disk; optionally keeps decoded samples in memory.
class ManifestSource : public SampleSource {
 public:
  explicit ManifestSource(DatasetManifest manifest, bool cache = true);
  std::size_t size() const override { return manifest_.entries.size(); }
  SegmentationSample load(std::size_t index) const override;
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
  bool cache_;
  mutable std::vector<std::optional<SegmentationSample>> cached_;
};

class MemorySource : public SampleSource {
 public:
  explicit MemorySource(std::vector<SegmentationSample> samples);
  std::size_t size() const override { return samples_.size(); }
  SegmentationSample load(std::size_t index) const override { return samples_.at(index); }

 private:
  std::vector<SegmentationSample> samples_;
};

struct BatchOptions {
  int batch_size = 8;
  int input_height = 0;  // 0 keeps the sample size
  int input_width = 0;
  std::optional<AugmentationConfig> augmentation;
  /// Background pool for replace_background; empty disables replacement.
  std::vector<Tensor> backgrounds;
};

struct TrainingBatch {
  Batch inputs;
  Batch targets;
  std::vector<std::size_t> entries;
};

/// One epoch of batches over `indices`, shuffled by `epoch_seed`.
/// Batches are built on demand and depend only on (source, options, seed, k).
class EpochBatches {
 public:
  EpochBatches(const SampleSource& source, std::vector<std::size_t> indices, const BatchOptions& options,
               std::uint64_t epoch_seed);

  std::size_t batch_count() const;
  TrainingBatch batch(std::size_t k) const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const SampleSource& source_;
  BatchOptions options_;
  std::vector<std::size_t> order_;
  std::uint64_t epoch_seed_;
};

/// Loads, background-replaces, augments, subsamples and expands the given entries.
TrainingBatch prepare_samples(const SampleSource& source, const std::vector<std::size_t>& entries,
                              const BatchOptions& options, std::uint64_t epoch_seed);

std::vector<Tensor> load_backgrounds(const std::filesystem::path& dir);

}  // namespace sgrt
