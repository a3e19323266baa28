#include "hopman/image.hpp"

#include <algorithm>
#include <cmath>

namespace hopman {

Image resize_bilinear(const Image& src, int w, int h) {
  if (src.w == w && src.h == h) return src;
  Image dst(w, h);
  const double sx = double(src.w) / w;
  const double sy = double(src.h) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = int(std::floor(fy));
    const double wy = fy - y0;
    y0 = std::clamp(y0, 0, src.h - 1);
    const int y1 = std::min(y0 + 1, src.h - 1);
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      int x0 = int(std::floor(fx));
      const double wx = fx - x0;
      x0 = std::clamp(x0, 0, src.w - 1);
      const int x1 = std::min(x0 + 1, src.w - 1);
      const u8* p00 = src.at(x0, y0);
      const u8* p10 = src.at(x1, y0);
      const u8* p01 = src.at(x0, y1);
      const u8* p11 = src.at(x1, y1);
      u8* out = dst.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                         wy * ((1 - wx) * p01[c] + wx * p11[c]);
        out[c] = u8(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return dst;
}

Image resize_nearest(const Image& src, int w, int h) {
  if (src.w == w && src.h == h) return src;
  Image dst(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(int(double(y) * src.h / h), src.h - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(int(double(x) * src.w / w), src.w - 1);
      std::memcpy(dst.at(x, y), src.at(sx, sy), 3);
    }
  }
  return dst;
}

i64 pixel_diff_count(const Image& a, const Image& b) {
  if (a.w != b.w || a.h != b.h) throw DataError("pixel_diff_count: size mismatch");
  i64 n = 0;
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x)
      if (std::memcmp(a.at(x, y), b.at(x, y), 3) != 0) ++n;
  return n;
}

}  // namespace hopman
