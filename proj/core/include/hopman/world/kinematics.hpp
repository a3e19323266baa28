#pragma once

#include <array>

#include "hopman/world/types.hpp"

namespace hopman::world {

inline constexpr std::array<double, 3> kLinkLengths{0.30, 0.25, 0.20};
inline constexpr Vec2 kRobotBase{0.5, 0.0};
inline constexpr double kJointLimit = M_PI;           // symmetric limits
inline constexpr double kJointSpeedCap = 0.15;        // rad per step
inline constexpr double kEffectorSpeedCap = 0.05;     // workspace units per step

struct Pose2 {
  Vec2 pos;
  double phi = 0;
};

// Planar chain anchored at the robot base; cumulative link angles.
Pose2 forward_kinematics(const std::array<double, 3>& joints,
                         const std::array<double, 3>& link_lengths = kLinkLengths);

// Damped-least-squares position IK starting from `joints`; deterministic.
std::array<double, 3> solve_ik(const std::array<double, 3>& joints, Vec2 target,
                               int iters = 30, double damping = 0.05);

inline double clamp_joint(double a) {
  return a < -kJointLimit ? -kJointLimit : (a > kJointLimit ? kJointLimit : a);
}

}  // namespace hopman::world
