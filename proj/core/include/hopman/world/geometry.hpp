#pragma once

#include <vector>

#include "hopman/world/types.hpp"

namespace hopman::world {

// Flat-shaded drawing primitive. `cutout` restores the background (used for
// the cup cavity); in masks it renders black.
struct Prim {
  enum Kind { kCircle, kRect, kCapsule, kTri } kind = kCircle;
  Vec2 a, b, c;        // circle: a=center; rect: a=center; capsule: a,b ends; tri: a,b,c
  double r = 0;        // circle/capsule radius
  double hw = 0, hh = 0, theta = 0;  // rect half-extents and rotation
  Rgb8 color;
  bool cutout = false;

  bool contains(Vec2 p) const;
  void bbox(Vec2& lo, Vec2& hi) const;
};

std::vector<Prim> object_parts(const SceneObject& obj);
std::vector<Prim> agent_parts(const AgentState& agent);

// Forward axis of the hand sprite is -y; the anchor is shifted so that the
// silhouette centroid lands exactly on the hand position for any aperture.
std::vector<Prim> hand_parts(Vec2 hand_pos, double aperture);

}  // namespace hopman::world
