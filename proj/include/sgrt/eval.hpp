#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgrt/dataset.hpp"
#include "sgrt/model.hpp"
#include "sgrt/tensor.hpp"

namespace sgrt {

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

/// Points ordered by descending threshold; a pixel is predicted positive when
/// its score >= threshold.
struct PrCurve {
  std::string label;
  std::vector<PrPoint> points;
  std::size_t positives = 0;
  std::size_t decisions = 0;
};

enum class SweepMode {
  kAuto,    // exact up to kExactSweepLimit decisions, binned beyond
  kExact,   // every distinct score is a threshold
  kBinned,  // kSweepBins uniform score bins on [0, 1]
};

inline constexpr std::size_t kExactSweepLimit = 100000;
inline constexpr int kSweepBins = 1024;

/// PR curve of one pooled binary problem. Targets are 0/1. Throws
/// DegenerateClassError when there are no positives.
PrCurve pr_curve(std::span<const float> scores, std::span<const float> targets, SweepMode mode = SweepMode::kAuto,
                 std::string label = {});

/// Pools every pixel of every image for output channel `cls`.
PrCurve pixel_pr_curve(const Batch& scores, const Batch& targets, int cls, SweepMode mode = SweepMode::kAuto);
/// Pools every (pixel, channel) decision of all channels.
PrCurve micro_pr_curve(const Batch& scores, const Batch& targets, SweepMode mode = SweepMode::kAuto);

/// Non-interpolated: sum of (R_n - R_{n-1}) * P_n with R_0 = 0.
double average_precision(const PrCurve& curve);

struct ClassResult {
  std::string label;
  std::size_t positives = 0;
  bool defined = false;  // false when the class has no positive pixels
  double ap = 0.0;
  PrCurve curve;
};

struct EvalReport {
  std::string configuration = "sgrt";
  std::array<ClassResult, kClassCount> classes;  // network channel order
  ClassResult all;
};

EvalReport evaluate_scores(const Batch& scores, const Batch& targets, SweepMode mode = SweepMode::kAuto);

/// Sigmoid probabilities of `model` and the targets of the selected entries,
/// subsampled to the model input size.
std::pair<Batch, Batch> collect_scores(const SegModel& model, const SampleSource& source,
                                       const std::vector<std::size_t>& indices);
EvalReport evaluate_model(const SegModel& model, const SampleSource& source, const std::vector<std::size_t>& indices,
                          SweepMode mode = SweepMode::kAuto);

/// Table row order and labels of the summary.
inline constexpr std::array<std::pair<std::string_view, int>, kClassCount + 1> kSummaryRows = {{
    {"Ball", 3}, {"Field", 0}, {"Line", 1}, {"Goal", 4}, {"Robot", 2}, {"All", -1}}};

/// One CSV per curve (pr_<label>.csv), summary.csv and summary.json in `dir`.
void export_report(const EvalReport& report, const std::filesystem::path& dir);
/// Summary with one column per report.
void write_summary_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path);
std::string summary_json(const EvalReport& report);

}  // namespace sgrt
