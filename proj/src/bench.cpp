#include "sgrt/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <regex>

#include "sgrt/model.hpp"
#include "sgrt/random.hpp"

namespace sgrt {

Resolution parse_resolution(const std::string& text) {
  static const std::regex re(R"(\s*(\d+)\s*[xX]\s*(\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ConfigError("resolution must look like WxH, got \"" + text + "\"");
  return {std::stoi(m[1]), std::stoi(m[2])};
}

std::optional<double> reference_ms(const Resolution& r) {
  for (const auto& rung : kResolutionLadder)
    if (rung.resolution == r) return rung.nao_ms;
  return std::nullopt;
}

BenchResult summarize_times(const Resolution& r, std::vector<double> times_ms, std::string host) {
  if (times_ms.empty()) throw PreconditionError("benchmark needs at least one timed iteration");
  BenchResult b;
  b.resolution = r;
  b.iterations = static_cast<int>(times_ms.size());
  b.host = std::move(host);
  std::vector<double> sorted = times_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  b.median_ms = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  b.mean_ms = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  b.p95_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
  b.times_ms = std::move(times_ms);
  return b;
}

std::string host_descriptor() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);)
    if (line.rfind("model name", 0) == 0) {
      if (const auto colon = line.find(':'); colon != std::string::npos) cpu = line.substr(colon + 2);
      break;
    }
  utsname u{};
  std::string kernel = "unknown kernel";
  if (uname(&u) == 0) kernel = std::string(u.sysname) + " " + u.release + " " + u.machine;
  return cpu + "; " + kernel;
}

BenchResult time_inference(const Resolution& r, int iterations, int warmup, std::uint64_t seed) {
  if (iterations < 1) throw PreconditionError("iterations must be at least 1");
  if (warmup < 0) throw PreconditionError("warmup must be >= 0");
  SegModel model = SegModel::build(r.height, r.width, seed);
  model.set_mode(Mode::kInfer);
  model = prepare_inference(model);
  Rng rng(seed);
  Tensor input({r.height, r.width, 3});
  for (auto& v : input.values()) v = static_cast<float>(rng.uniform());

  volatile float sink = 0.0f;
  for (int i = 0; i < warmup; ++i) sink = sink + model.predict(input)[0];
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor out = model.predict(input);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + out[0];
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return summarize_times(r, std::move(times), host_descriptor());
}

ScalingReport scaling_report(const std::vector<Resolution>& resolutions, int iterations, int warmup,
                             const TimingFn& timing) {
  if (resolutions.size() < 3) throw PreconditionError("scaling report needs at least 3 resolutions");
  ScalingReport rep;
  for (const auto& r : resolutions)
    rep.results.push_back(timing ? timing(r, iterations, warmup) : time_inference(r, iterations, warmup));

  const double n = static_cast<double>(rep.results.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& b : rep.results) {
    const double x = static_cast<double>(b.resolution.pixels()) / 1000.0;
    sx += x;
    sy += b.median_ms;
    sxx += x * x;
    sxy += x * b.median_ms;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw PreconditionError("scaling report needs at least two distinct pixel counts");
  rep.ms_per_kilopixel = (n * sxy - sx * sy) / denom;
  rep.intercept_ms = (sy - rep.ms_per_kilopixel * sx) / n;
  const double mean_y = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& b : rep.results) {
    const double x = static_cast<double>(b.resolution.pixels()) / 1000.0;
    const double fitted = rep.intercept_ms + rep.ms_per_kilopixel * x;
    ss_res += (b.median_ms - fitted) * (b.median_ms - fitted);
    ss_tot += (b.median_ms - mean_y) * (b.median_ms - mean_y);
  }
  rep.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  std::vector<const BenchResult*> by_pixels;
  for (const auto& b : rep.results) by_pixels.push_back(&b);
  std::stable_sort(by_pixels.begin(), by_pixels.end(),
                   [](const BenchResult* a, const BenchResult* b) { return a->resolution.pixels() < b->resolution.pixels(); });
  rep.monotone = true;
  for (std::size_t i = 1; i < by_pixels.size(); ++i)
    rep.monotone = rep.monotone && by_pixels[i]->median_ms >= by_pixels[i - 1]->median_ms;
  return rep;
}

void write_bench_csv(const ScalingReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# host: " << (report.results.empty() ? host_descriptor() : report.results.front().host) << '\n';
  out << "resolution,pixels,median_ms,mean_ms,p95_ms,nao_v6_reference_ms\n";
  char line[200];
  for (const auto& b : report.results) {
    const auto ref = reference_ms(b.resolution);
    std::snprintf(line, sizeof line, "%s,%lld,%.4f,%.4f,%.4f,", b.resolution.str().c_str(), b.resolution.pixels(),
                  b.median_ms, b.mean_ms, b.p95_ms);
    out << line;
    if (ref) {
      std::snprintf(line, sizeof line, "%.1f", *ref);
      out << line;
    }
    out << '\n';
  }
  std::snprintf(line, sizeof line, "# fit: %.6f ms per kilopixel, intercept %.4f ms, r2 %.6f\n",
                report.ms_per_kilopixel, report.intercept_ms, report.r_squared);
  out << line;
}

}  // namespace sgrt
