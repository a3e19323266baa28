#include "hopman/world/types.hpp"

#include <algorithm>

namespace hopman::world {

const char* to_string(Category c) {
  switch (c) {
    case Category::kBlock: return "block";
    case Category::kBall: return "ball";
    case Category::kDrawer: return "drawer";
    case Category::kDoor: return "door";
    case Category::kCup: return "cup";
  }
  return "?";
}

const char* to_string(Skill s) {
  switch (s) {
    case Skill::kPush: return "push";
    case Skill::kPickPlace: return "pick_place";
    case Skill::kOpen: return "open";
    case Skill::kClose: return "close";
    case Skill::kStack: return "stack";
  }
  return "?";
}

const char* to_string(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return "small";
    case SizeClass::kMedium: return "medium";
    case SizeClass::kLarge: return "large";
  }
  return "?";
}

Category category_from_string(const std::string& s) {
  if (s == "block") return Category::kBlock;
  if (s == "ball") return Category::kBall;
  if (s == "drawer") return Category::kDrawer;
  if (s == "door") return Category::kDoor;
  if (s == "cup") return Category::kCup;
  throw ConfigError("unknown category: " + s);
}

Skill skill_from_string(const std::string& s) {
  if (s == "push") return Skill::kPush;
  if (s == "pick_place") return Skill::kPickPlace;
  if (s == "open") return Skill::kOpen;
  if (s == "close") return Skill::kClose;
  if (s == "stack") return Skill::kStack;
  throw ConfigError("unknown skill: " + s);
}

SizeClass size_from_string(const std::string& s) {
  if (s == "small") return SizeClass::kSmall;
  if (s == "medium") return SizeClass::kMedium;
  if (s == "large") return SizeClass::kLarge;
  throw ConfigError("unknown size: " + s);
}

std::vector<Skill> skill_applicability(Category c) {
  switch (c) {
    case Category::kBlock:
      return {Skill::kPush, Skill::kPickPlace, Skill::kStack};
    case Category::kBall:
    case Category::kCup:
      return {Skill::kPush, Skill::kPickPlace};
    case Category::kDrawer:
    case Category::kDoor:
      return {Skill::kOpen, Skill::kClose};
  }
  return {};
}

bool skill_applies(Category c, Skill s) {
  const auto skills = skill_applicability(c);
  return std::find(skills.begin(), skills.end(), s) != skills.end();
}

const std::array<Rgb8, 8>& object_palette() {
  static const std::array<Rgb8, 8> p{{
      {235, 235, 235},  // white
      {60, 110, 235},   // blue
      {235, 200, 40},   // yellow
      {40, 200, 220},   // cyan
      {220, 60, 220},   // magenta
      {240, 140, 40},   // orange
      {140, 70, 220},   // purple
      {170, 120, 70},   // tan
  }};
  return p;
}

std::string TaskTuple::id() const {
  return std::string(to_string(instance.category)) + "/" + instance.instance_id + "/" +
         to_string(skill);
}

}  // namespace hopman::world
