#include "hopman/diffusion/schedule.hpp"

namespace hopman::diffusion {

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw ConfigError("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw ConfigError("make_schedule: require 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(size_t(T));
  s.alpha.resize(size_t(T));
  s.alpha_bar.resize(size_t(T));
  double prod = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double b =
        T == 1 ? beta_start : beta_start + double(t - 1) / double(T - 1) * (beta_end - beta_start);
    s.beta[size_t(t - 1)] = b;
    s.alpha[size_t(t - 1)] = 1.0 - b;
    prod *= 1.0 - b;
    s.alpha_bar[size_t(t - 1)] = prod;
  }
  return s;
}

}  // namespace hopman::diffusion
