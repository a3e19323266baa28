#pragma once

#include <vector>

#include "hopman/common.hpp"

namespace hopman::diffusion {

// Diffusion-step constants: beta_t, alpha_t = 1 - beta_t and the running
// product alpha_bar_t. Index 0 corresponds to step t = 1.
struct NoiseSchedule {
  enum class Kind { kLinear };
  int T = 0;
  std::vector<double> beta, alpha, alpha_bar;
  Kind kind = Kind::kLinear;

  double beta_at(int t) const { return beta.at(size_t(t - 1)); }
  double alpha_at(int t) const { return alpha.at(size_t(t - 1)); }
  double alpha_bar_at(int t) const { return alpha_bar.at(size_t(t - 1)); }
};

NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

}  // namespace hopman::diffusion
