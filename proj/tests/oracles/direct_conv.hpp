#pragma once

#include <algorithm>
#include <vector>

#include "sgrt/layers.hpp"

namespace sgrt::oracle {

/// Separable convolution evaluated as one dense 3x3 convolution whose kernel is
/// the outer product of depthwise and pointwise weights. Shares no code with
/// the production path.
inline BasicTensor<double> direct_separable_conv(const BasicTensor<double>& in, const SeparableConvParams<double>& p) {
  const int H = in.height(), W = in.width(), C = in.channels();
  const int s = p.stride;
  const int OH = H / s, OW = W / s;
  // "same" padding, smaller half before.
  const int pad_y = std::max((OH - 1) * s + 3 - H, 0) / 2;
  const int pad_x = std::max((OW - 1) * s + 3 - W, 0) / 2;
  BasicTensor<double> out(Shape{OH, OW, p.out_channels});
  for (int oy = 0; oy < OH; ++oy)
    for (int ox = 0; ox < OW; ++ox)
      for (int co = 0; co < p.out_channels; ++co) {
        double acc = p.bias[co];
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const int y = oy * s + ky - pad_y;
            const int x = ox * s + kx - pad_x;
            if (y < 0 || y >= H || x < 0 || x >= W) continue;
            for (int ci = 0; ci < C; ++ci) {
              const double k = p.depthwise[(ky * 3 + kx) * C + ci] * p.pointwise[ci * p.out_channels + co];
              acc += k * in.at(y, x, ci);
            }
          }
        out.at(oy, ox, co) = acc;
      }
  return out;
}

}  // namespace sgrt::oracle
