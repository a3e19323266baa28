#include "hopman/world/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "hopman/world/world.hpp"

namespace hopman::world {

namespace {

double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 1e-12 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

double tri_sign(Vec2 p, Vec2 a, Vec2 b) {
  return (p.x - b.x) * (a.y - b.y) - (a.x - b.x) * (p.y - b.y);
}

Rgb8 dim(Rgb8 c, double f) {
  return {u8(c.r * f), u8(c.g * f), u8(c.b * f)};
}

}  // namespace

bool Prim::contains(Vec2 p) const {
  switch (kind) {
    case kCircle:
      return (p - a).norm() <= r;
    case kRect: {
      const Vec2 d = p - a;
      const double ct = std::cos(theta), st = std::sin(theta);
      const double lx = d.x * ct + d.y * st;
      const double ly = -d.x * st + d.y * ct;
      return std::fabs(lx) <= hw && std::fabs(ly) <= hh;
    }
    case kCapsule:
      return dist_point_segment(p, a, b) <= r;
    case kTri: {
      const double d1 = tri_sign(p, a, b);
      const double d2 = tri_sign(p, b, c);
      const double d3 = tri_sign(p, c, a);
      const bool neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
      const bool pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
      return !(neg && pos);
    }
  }
  return false;
}

void Prim::bbox(Vec2& lo, Vec2& hi) const {
  switch (kind) {
    case kCircle:
      lo = {a.x - r, a.y - r};
      hi = {a.x + r, a.y + r};
      return;
    case kRect: {
      const double ct = std::fabs(std::cos(theta)), st = std::fabs(std::sin(theta));
      const double ex = hw * ct + hh * st;
      const double ey = hw * st + hh * ct;
      lo = {a.x - ex, a.y - ey};
      hi = {a.x + ex, a.y + ey};
      return;
    }
    case kCapsule:
      lo = {std::min(a.x, b.x) - r, std::min(a.y, b.y) - r};
      hi = {std::max(a.x, b.x) + r, std::max(a.y, b.y) + r};
      return;
    case kTri:
      lo = {std::min({a.x, b.x, c.x}), std::min({a.y, b.y, c.y})};
      hi = {std::max({a.x, b.x, c.x}), std::max({a.y, b.y, c.y})};
      return;
  }
}

// ---------------------------------------------------------------- hand ----

namespace {

constexpr double kPalmR = 0.045;
constexpr double kPincerR = 0.010;
constexpr double kPincerY0 = -0.035, kPincerY1 = -0.075;
constexpr double kTailBaseY = 0.040, kTailHalfW = 0.024, kTailH = 0.055;

std::vector<Prim> hand_parts_local(double aperture) {
  const Rgb8 skin{235, 205, 175};
  const Rgb8 skin_dark{205, 170, 140};
  const double sep = 0.014 + 0.030 * std::clamp(aperture, 0.0, 1.0);
  std::vector<Prim> parts;
  Prim tail;
  tail.kind = Prim::kTri;
  tail.a = {-kTailHalfW, kTailBaseY};
  tail.b = {kTailHalfW, kTailBaseY};
  tail.c = {0, kTailBaseY + kTailH};
  tail.color = skin_dark;
  parts.push_back(tail);
  Prim palm;
  palm.kind = Prim::kCircle;
  palm.a = {0, 0};
  palm.r = kPalmR;
  palm.color = skin;
  parts.push_back(palm);
  for (int side = -1; side <= 1; side += 2) {
    Prim finger;
    finger.kind = Prim::kCapsule;
    finger.a = {side * sep, kPincerY0};
    finger.b = {side * sep, kPincerY1};
    finger.r = kPincerR;
    finger.color = skin;
    parts.push_back(finger);
  }
  return parts;
}

// Silhouette centroid along the forward axis, integrated numerically once per
// aperture bin. The sprite is anchored so the green-mask centroid coincides
// with the commanded hand position.
double hand_centroid_y(double aperture) {
  static std::array<double, 21> table = [] {
    std::array<double, 21> t{};
    for (int k = 0; k <= 20; ++k) {
      const auto parts = hand_parts_local(k / 20.0);
      const double step = 0.0005;
      double sum_y = 0;
      i64 count = 0;
      for (double y = -0.12; y <= 0.12; y += step)
        for (double x = -0.12; x <= 0.12; x += step) {
          for (const auto& p : parts)
            if (p.contains({x, y})) {
              sum_y += y;
              ++count;
              break;
            }
        }
      t[size_t(k)] = count ? sum_y / double(count) : 0.0;
    }
    return t;
  }();
  const double a = std::clamp(aperture, 0.0, 1.0) * 20.0;
  const int k0 = std::min(19, int(a));
  const double f = a - k0;
  return table[size_t(k0)] * (1 - f) + table[size_t(k0 + 1)] * f;
}

}  // namespace

std::vector<Prim> hand_parts(Vec2 hand_pos, double aperture) {
  const Vec2 anchor{hand_pos.x, hand_pos.y - hand_centroid_y(aperture)};
  auto parts = hand_parts_local(aperture);
  for (auto& p : parts) {
    p.a = p.a + anchor;
    p.b = p.b + anchor;
    p.c = p.c + anchor;
  }
  return parts;
}

// -------------------------------------------------------------- objects ----

Vec2 handle_position_at(const SceneObject& obj, double a) {
  const double s = obj.instance.scale();
  if (obj.instance.category == Category::kDrawer) {
    const double panel_cy = obj.pos.y - 0.5 * s - 0.12 * s - a * kDrawerSlideRange;
    return {obj.pos.x, panel_cy - 0.12 * s - 0.012};
  }
  if (obj.instance.category == Category::kDoor) {
    const double L = 2.0 * s;
    const Vec2 hinge{obj.pos.x - L / 2, obj.pos.y};
    const double ang = -a * M_PI / 2;
    return {hinge.x + std::cos(ang) * 0.92 * L, hinge.y + std::sin(ang) * 0.92 * L};
  }
  return obj.pos;
}

std::vector<Prim> object_parts(const SceneObject& obj) {
  const double s = obj.instance.scale();
  const Rgb8 color = {obj.instance.color.r, obj.instance.color.g, obj.instance.color.b};
  std::vector<Prim> parts;
  switch (obj.instance.category) {
    case Category::kBlock: {
      Prim p;
      p.kind = Prim::kRect;
      p.a = obj.pos;
      p.hw = p.hh = s / 2;
      p.theta = obj.theta;
      p.color = color;
      parts.push_back(p);
      break;
    }
    case Category::kBall: {
      Prim p;
      p.kind = Prim::kCircle;
      p.a = obj.pos;
      p.r = s / 2;
      p.color = color;
      parts.push_back(p);
      break;
    }
    case Category::kCup: {
      Prim outer;
      outer.kind = Prim::kRect;
      outer.a = obj.pos;
      outer.hw = s / 2;
      outer.hh = 0.45 * s;
      outer.theta = obj.theta;
      outer.color = color;
      parts.push_back(outer);
      Prim cavity;
      cavity.kind = Prim::kRect;
      const double ct = std::cos(obj.theta), st = std::sin(obj.theta);
      cavity.a = {obj.pos.x - st * 0.175 * s, obj.pos.y + ct * 0.175 * s};
      cavity.hw = 0.30 * s;
      cavity.hh = 0.30 * s;
      cavity.theta = obj.theta;
      cavity.cutout = true;
      parts.push_back(cavity);
      break;
    }
    case Category::kDrawer: {
      Prim body;
      body.kind = Prim::kRect;
      body.a = obj.pos;
      body.hw = s;
      body.hh = 0.5 * s;
      body.color = dim(color, 0.72);
      parts.push_back(body);
      Prim panel;
      panel.kind = Prim::kRect;
      const double panel_cy = obj.pos.y - 0.5 * s - 0.12 * s - obj.articulation * kDrawerSlideRange;
      panel.a = {obj.pos.x, panel_cy};
      panel.hw = s;
      panel.hh = 0.12 * s;
      panel.color = color;
      parts.push_back(panel);
      Prim knob;
      knob.kind = Prim::kCircle;
      knob.a = handle_position_at(obj, obj.articulation);
      knob.r = 0.015;
      knob.color = {225, 225, 230};
      parts.push_back(knob);
      break;
    }
    case Category::kDoor: {
      const double L = 2.0 * s;
      const Vec2 hinge{obj.pos.x - L / 2, obj.pos.y};
      const double ang = -obj.articulation * M_PI / 2;
      Prim post;
      post.kind = Prim::kCircle;
      post.a = hinge;
      post.r = 0.018;
      post.color = dim(color, 0.6);
      parts.push_back(post);
      Prim panel;
      panel.kind = Prim::kRect;
      panel.a = {hinge.x + std::cos(ang) * L / 2, hinge.y + std::sin(ang) * L / 2};
      panel.hw = L / 2;
      panel.hh = 0.12 * s;
      panel.theta = ang;
      panel.color = color;
      parts.push_back(panel);
      Prim knob;
      knob.kind = Prim::kCircle;
      knob.a = handle_position_at(obj, obj.articulation);
      knob.r = 0.015;
      knob.color = {225, 225, 230};
      parts.push_back(knob);
      break;
    }
  }
  return parts;
}

// ---------------------------------------------------------------- agent ----

std::vector<Prim> agent_parts(const AgentState& agent) {
  if (agent.embodiment == Embodiment::kHuman)
    return hand_parts(agent.hand_pos, agent.hand_aperture);

  static const Rgb8 link_colors[3] = {{120, 125, 130}, {140, 145, 150}, {160, 165, 170}};
  std::vector<Prim> parts;
  Vec2 joints_pos[4];
  joints_pos[0] = kRobotBase;
  double a = 0;
  for (int i = 0; i < 3; ++i) {
    a += agent.joints[size_t(i)];
    joints_pos[i + 1] = {joints_pos[i].x + kLinkLengths[size_t(i)] * std::cos(a),
                         joints_pos[i].y + kLinkLengths[size_t(i)] * std::sin(a)};
  }
  for (int i = 0; i < 3; ++i) {
    Prim link;
    link.kind = Prim::kCapsule;
    link.a = joints_pos[i];
    link.b = joints_pos[i + 1];
    link.r = 0.018;
    link.color = link_colors[i];
    parts.push_back(link);
  }
  for (int i = 0; i < 3; ++i) {
    Prim j;
    j.kind = Prim::kCircle;
    j.a = joints_pos[i];
    j.r = 0.022;
    j.color = {90, 95, 100};
    parts.push_back(j);
  }
  // Jaw marks at the effector, separation follows the gripper aperture.
  const Vec2 ee = joints_pos[3];
  const Vec2 fwd{std::cos(a), std::sin(a)};
  const Vec2 lat{-fwd.y, fwd.x};
  const double sep = 0.016 + 0.05 * std::clamp(agent.gripper, 0.0, 1.0);
  for (int side = -1; side <= 1; side += 2) {
    Prim jaw;
    jaw.kind = Prim::kRect;
    jaw.a = ee + fwd * 0.012 + lat * (side * sep / 2);
    jaw.hw = 0.016;
    jaw.hh = 0.005;
    jaw.theta = a;
    jaw.color = {210, 210, 215};
    parts.push_back(jaw);
  }
  return parts;
}

}  // namespace hopman::world
