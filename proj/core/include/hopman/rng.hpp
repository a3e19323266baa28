#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "hopman/common.hpp"

namespace hopman {

inline u64 splitmix64(u64& x) {
  u64 z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline u64 fnv1a64(std::string_view s) {
  u64 h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline u64 hash_mix(u64 a, u64 b) {
  u64 x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(x);
}

// xoshiro256++ with a fixed Box-Muller normal transform. Identical streams on
// every platform for a given seed; std:: distributions are not portable.
class Rng {
 public:
  explicit Rng(u64 seed) {
    u64 x = seed;
    for (auto& s : s_) s = splitmix64(x);
    has_spare_ = false;
  }

  u64 next_u64() {
    const u64 result = rotl(s_[0] + s_[3], 23) + s_[0];
    const u64 t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive bounds.
  int uniform_int(int lo, int hi) {
    return lo + int(next_u64() % u64(hi - lo + 1));
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void fill_normal(T* dst, i64 n, double scale = 1.0) {
    for (i64 i = 0; i < n; ++i) dst[i] = T(normal() * scale);
  }

 private:
  static u64 rotl(u64 x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<u64, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hopman
