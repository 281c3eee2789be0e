#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sgrt/dataset.hpp"
#include "sgrt/model.hpp"

namespace sgrt {

// --- optimizer -----------------------------------------------------------------

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  /// Zeroed moments shaped like `params`.
  template <typename T>
  static AdamState for_parameters(const std::vector<std::span<T>>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

/// One bias-corrected Adam update in place; increments state.t.
template <typename T>
void adam_step(const std::vector<std::span<T>>& params, const std::vector<std::vector<T>>& grads, AdamState& state,
               double lr);

// --- schedule ------------------------------------------------------------------

struct TrainConfig {
  double initial_lr = 0.1;
  double lr_decay_factor = 0.5;
  int plateau_patience = 10;
  int early_stop_patience = 20;
  double improvement_tolerance = 1e-6;
  int batch_size = 8;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int input_height = 0;  // 0: use the sample size
  int input_width = 0;
  int checkpoint_every = 0;  // epochs between periodic weight files, 0 disables

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct ScheduleDecision {
  double lr = 0.0;             // learning rate for the next epoch
  bool stop = false;
  int epochs_since_improvement = 0;
  int decays = 0;
};

/// Replays the validation losses of `history` from initial_lr. The lr decays
/// after plateau_patience epochs without improvement since the best value (or
/// the last decay); training stops after early_stop_patience such epochs.
ScheduleDecision schedule_update(const TrainHistory& history, const TrainConfig& config);

// --- training --------------------------------------------------------------------

struct FitOptions {
  std::optional<AugmentationConfig> augmentation;
  std::vector<Tensor> backgrounds;
  std::optional<std::filesystem::path> history_csv;
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  TrainHistory history;
  int best_epoch = -1;  // -1 when no epoch ran
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

/// Mean BCE over `indices` with the model in inference mode.
double evaluate_loss(const SegModel& model, const SampleSource& source, const std::vector<std::size_t>& indices,
                     int batch_size, int input_height = 0, int input_width = 0);

/// Fraction of pixels whose thresholded prediction equals the mask class.
double pixel_accuracy(const SegModel& model, const SampleSource& source, const std::vector<std::size_t>& indices,
                      int input_height = 0, int input_width = 0);

/// Trains in place and leaves the model holding the best-validation weights,
/// in inference mode.
FitResult fit(SegModel& model, const SampleSource& source, const std::vector<std::size_t>& train_indices,
              const std::vector<std::size_t>& val_indices, const TrainConfig& config, const FitOptions& options = {});

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace sgrt
