#pragma once

#include <array>
#include <cstring>
#include <vector>

#include "hopman/common.hpp"

namespace hopman {

struct Rgb {
  u8 r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Reserved mask colors; the object palette must avoid all three.
inline constexpr Rgb kMaskHand{0, 255, 0};
inline constexpr Rgb kMaskObject{255, 0, 0};
inline constexpr Rgb kMaskBackground{0, 0, 0};

// 8-bit RGB raster, row-major, row 0 at the top.
struct Image {
  int w = 0, h = 0;
  std::vector<u8> px;  // 3 * w * h

  Image() = default;
  Image(int width, int height) : w(width), h(height), px(size_t(3) * width * height, 0) {}

  u8* at(int x, int y) { return px.data() + 3 * (size_t(y) * w + x); }
  const u8* at(int x, int y) const { return px.data() + 3 * (size_t(y) * w + x); }

  Rgb get(int x, int y) const {
    const u8* p = at(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    u8* p = at(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  bool operator==(const Image& o) const { return w == o.w && h == o.h && px == o.px; }
};

Image resize_bilinear(const Image& src, int w, int h);
Image resize_nearest(const Image& src, int w, int h);

// Number of pixels whose RGB differs between a and b. Sizes must match.
i64 pixel_diff_count(const Image& a, const Image& b);

}  // namespace hopman
