#pragma once

#include <array>
#include <cstddef>

namespace sgrt::oracle {

// Architecture table expanded by hand: each row repeated N times, the first
// repetition switching to F filters. {in, out} per separable conv.
struct TableRow {
  int in;
  int out;
};

inline constexpr std::array<TableRow, 19> kTableRows = {{
    {3, 8},                                                    // stem
    {8, 8},                                                    // encoder, scale 1
    {8, 8},                                                    // stride 2 -> 1/2
    {8, 16}, {16, 16},                                         // N=2, F=16
    {16, 16},                                                  // stride 2 -> 1/4
    {16, 24}, {24, 24}, {24, 24}, {24, 24}, {24, 24}, {24, 24}, // N=6, F=24
    {40, 16}, {16, 16}, {16, 16},                              // after concat 40, N=3
    {24, 8}, {8, 8}, {8, 8},                                   // after concat 24, N=3
    {8, 5},                                                    // head
}};

struct CountAssumptions {
  bool pointwise_bias = true;
  bool depthwise_bias = false;
  bool bn_affine = true;
  bool bn_running_stats = false;
  bool dense_convolutions = false;  // full 3x3xCinxCout instead of separable
};

inline std::size_t hand_count(const CountAssumptions& a) {
  std::size_t total = 0;
  for (const auto& r : kTableRows) {
    const std::size_t in = r.in, out = r.out;
    total += a.dense_convolutions ? 9 * in * out : 9 * in + in * out;
    if (a.depthwise_bias && !a.dense_convolutions) total += in;
    if (a.pointwise_bias) total += out;
    if (a.bn_affine) total += 2 * out;
    if (a.bn_running_stats) total += 2 * out;
  }
  return total;
}

inline std::size_t hand_count_trainable() { return hand_count(CountAssumptions{}); }

inline std::size_t total_filters() {
  std::size_t f = 0;
  for (const auto& r : kTableRows) f += r.out;
  return f;
}

}  // namespace sgrt::oracle
