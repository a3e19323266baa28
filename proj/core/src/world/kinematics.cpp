#include "hopman/world/kinematics.hpp"

#include <cmath>

namespace hopman::world {

Pose2 forward_kinematics(const std::array<double, 3>& joints,
                         const std::array<double, 3>& link_lengths) {
  Pose2 p;
  p.pos = kRobotBase;
  double a = 0;
  for (int i = 0; i < 3; ++i) {
    a += joints[i];
    p.pos.x += link_lengths[i] * std::cos(a);
    p.pos.y += link_lengths[i] * std::sin(a);
  }
  p.phi = a;
  return p;
}

std::array<double, 3> solve_ik(const std::array<double, 3>& joints, Vec2 target,
                               int iters, double damping) {
  std::array<double, 3> q = joints;
  for (int it = 0; it < iters; ++it) {
    // Joint positions along the chain.
    double a = 0;
    Vec2 p = kRobotBase;
    Vec2 joints_pos[4];
    joints_pos[0] = p;
    for (int i = 0; i < 3; ++i) {
      a += q[i];
      p.x += kLinkLengths[i] * std::cos(a);
      p.y += kLinkLengths[i] * std::sin(a);
      joints_pos[i + 1] = p;
    }
    const Vec2 err = target - p;
    if (err.norm() < 1e-5) break;
    // J columns: z x (p_ee - p_joint_i) in 2D.
    double J[2][3];
    for (int i = 0; i < 3; ++i) {
      const Vec2 r = p - joints_pos[i];
      J[0][i] = -r.y;
      J[1][i] = r.x;
    }
    // dq = J^T (J J^T + lambda^2 I)^-1 err, 2x2 solve.
    double A00 = damping * damping, A01 = 0, A11 = damping * damping;
    for (int i = 0; i < 3; ++i) {
      A00 += J[0][i] * J[0][i];
      A01 += J[0][i] * J[1][i];
      A11 += J[1][i] * J[1][i];
    }
    const double det = A00 * A11 - A01 * A01;
    if (std::fabs(det) < 1e-12) break;
    const double b0 = (A11 * err.x - A01 * err.y) / det;
    const double b1 = (-A01 * err.x + A00 * err.y) / det;
    for (int i = 0; i < 3; ++i) {
      const double dq = J[0][i] * b0 + J[1][i] * b1;
      q[i] = clamp_joint(q[i] + dq);
    }
  }
  return q;
}

}  // namespace hopman::world
