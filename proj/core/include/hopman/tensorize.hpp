#pragma once

#include <vector>

#include "hopman/image.hpp"
#include "hopman/nn/tensor.hpp"

namespace hopman {

// Pixel scaling used everywhere: x -> x / 127.5 - 1.
template <typename T>
void copy_image_scaled(const Image& img, T* dst) {
  const i64 hw = i64(img.w) * img.h;
  for (int c = 0; c < 3; ++c)
    for (i64 i = 0; i < hw; ++i) dst[c * hw + i] = T(double(img.px[size_t(3 * i + c)]) / 127.5 - 1.0);
}

template <typename T>
nn::Tensor<T> image_to_tensor(const Image& img) {
  nn::Tensor<T> t({3, img.h, img.w});
  copy_image_scaled(img, t.data());
  return t;
}

// K mask frames as a [3K, H, W] stack, frame k in channels 3k..3k+2.
template <typename T>
nn::Tensor<T> mask_video_to_tensor(const std::vector<Image>& frames) {
  if (frames.empty()) throw DataError("mask_video_to_tensor: empty");
  const int h = frames[0].h, w = frames[0].w;
  nn::Tensor<T> t({int(frames.size()) * 3, h, w});
  for (size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].h != h || frames[k].w != w)
      throw DataError("mask_video_to_tensor: resolution mismatch");
    copy_image_scaled(frames[k], t.data() + k * 3 * i64(h) * w);
  }
  return t;
}

template <typename T>
Image tensor_to_image(const T* chw, int h, int w) {
  Image img(w, h);
  const i64 hw = i64(h) * w;
  for (int c = 0; c < 3; ++c)
    for (i64 i = 0; i < hw; ++i) {
      const double v = (double(chw[c * hw + i]) + 1.0) * 127.5;
      img.px[size_t(3 * i + c)] = u8(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  return img;
}

}  // namespace hopman
