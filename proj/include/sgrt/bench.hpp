#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sgrt {

struct Resolution {
  int width = 0;
  int height = 0;

  long long pixels() const { return static_cast<long long>(width) * height; }
  std::string str() const { return std::to_string(width) + "x" + std::to_string(height); }
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// Parses "WxH".
Resolution parse_resolution(const std::string& text);

struct LadderRung {
  Resolution resolution;
  double nao_ms;  // reference latency on the NAO v6, not a target
};

inline constexpr std::array<LadderRung, 6> kResolutionLadder = {{
    {{40, 32}, 1.6},
    {{80, 64}, 6.7},
    {{108, 80}, 11.2},
    {{120, 88}, 14.0},
    {{160, 120}, 27.3},
    {{320, 240}, 116.0},
}};

std::optional<double> reference_ms(const Resolution& r);

struct BenchResult {
  Resolution resolution;
  int iterations = 0;
  std::vector<double> times_ms;
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  std::string host;
};

/// Median, mean and nearest-rank p95 of `times_ms`.
BenchResult summarize_times(const Resolution& r, std::vector<double> times_ms, std::string host);

/// "cpu model; kernel" of the running machine.
std::string host_descriptor();

/// Builds and folds a model for `r`, runs `warmup` untimed and `iterations`
/// timed single-image forward passes on the calling thread.
BenchResult time_inference(const Resolution& r, int iterations = 200, int warmup = 20, std::uint64_t seed = 1);

struct ScalingReport {
  std::vector<BenchResult> results;
  double ms_per_kilopixel = 0.0;
  double intercept_ms = 0.0;
  double r_squared = 0.0;
  bool monotone = false;  // median non-decreasing in pixel count
};

using TimingFn = std::function<BenchResult(const Resolution&, int iterations, int warmup)>;

/// Least-squares line of median ms against pixel count. `timing` replaces the
/// measurement, for tests.
ScalingReport scaling_report(const std::vector<Resolution>& resolutions, int iterations = 200, int warmup = 20,
                             const TimingFn& timing = {});

/// CSV with a leading "# host: ..." comment line.
void write_bench_csv(const ScalingReport& report, const std::filesystem::path& path);

}  // namespace sgrt
