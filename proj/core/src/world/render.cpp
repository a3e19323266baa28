#include <algorithm>
#include <cmath>

#include "hopman/world/geometry.hpp"
#include "hopman/world/world.hpp"

namespace hopman::world {

namespace {

constexpr Rgb8 kCheckerA{14, 14, 14};
constexpr Rgb8 kCheckerB{38, 38, 38};

Rgb8 background_at(Vec2 p) {
  const int cx = int(std::floor(p.x * 8));
  const int cy = int(std::floor(p.y * 8));
  return ((cx + cy) & 1) ? kCheckerB : kCheckerA;
}

void check_resolution(int res) {
  if (res != 32 && res != 64 && res != 96)
    throw ConfigError("render: resolution must be one of {32, 64, 96}");
}

// Pixel (ix, iy) center in workspace coordinates; row 0 is the top (y = 1).
inline Vec2 pixel_center(int ix, int iy, int res) {
  return {(ix + 0.5) / res, 1.0 - (iy + 0.5) / res};
}

template <typename ColorFn>
void rasterize(Image& img, const Prim& prim, ColorFn color_of) {
  Vec2 lo, hi;
  prim.bbox(lo, hi);
  const int res = img.w;
  const int x0 = std::max(0, int(std::floor(lo.x * res - 0.5)));
  const int x1 = std::min(res - 1, int(std::ceil(hi.x * res + 0.5)));
  const int y0 = std::max(0, int(std::floor((1.0 - hi.y) * res - 0.5)));
  const int y1 = std::min(res - 1, int(std::ceil((1.0 - lo.y) * res + 0.5)));
  for (int iy = y0; iy <= y1; ++iy)
    for (int ix = x0; ix <= x1; ++ix) {
      const Vec2 p = pixel_center(ix, iy, res);
      if (prim.contains(p)) img.set(ix, iy, color_of(prim, p));
    }
}

}  // namespace

Image render_rgb(const SceneState& state, int resolution) {
  check_resolution(resolution);
  Image img(resolution, resolution);
  for (int iy = 0; iy < resolution; ++iy)
    for (int ix = 0; ix < resolution; ++ix) {
      const Rgb8 c = background_at(pixel_center(ix, iy, resolution));
      img.set(ix, iy, {c.r, c.g, c.b});
    }
  auto rgb_color = [](const Prim& prim, Vec2 p) -> Rgb {
    if (prim.cutout) {
      const Rgb8 c = background_at(p);
      return {c.r, c.g, c.b};
    }
    return {prim.color.r, prim.color.g, prim.color.b};
  };
  for (const auto& obj : state.objects)
    for (const auto& prim : object_parts(obj)) rasterize(img, prim, rgb_color);
  for (const auto& prim : agent_parts(state.agent)) rasterize(img, prim, rgb_color);
  return img;
}

Image render_masks(const SceneState& state, int resolution) {
  check_resolution(resolution);
  if (state.task_object < 0 || state.task_object >= int(state.objects.size()))
    throw DataError("render_masks: task-relevant object missing from scene");
  Image img(resolution, resolution);  // zero-initialized = black
  auto object_color = [](const Prim& prim, Vec2) -> Rgb {
    return prim.cutout ? Rgb{kMaskBackground.r, kMaskBackground.g, kMaskBackground.b}
                       : Rgb{kMaskObject.r, kMaskObject.g, kMaskObject.b};
  };
  auto agent_color = [](const Prim&, Vec2) -> Rgb {
    return {kMaskHand.r, kMaskHand.g, kMaskHand.b};
  };
  for (const auto& prim : object_parts(state.objects[size_t(state.task_object)]))
    rasterize(img, prim, object_color);
  // Agent occludes the object: hand/robot pixels win on overlap.
  for (const auto& prim : agent_parts(state.agent)) rasterize(img, prim, agent_color);
  return img;
}

}  // namespace hopman::world
