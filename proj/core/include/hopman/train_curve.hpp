#pragma once

#include <string>
#include <vector>

#include "hopman/common.hpp"

namespace hopman {

struct TrainPoint {
  int step;
  double loss;
  double smoothed;  // trailing mean over the smoothing window
};

struct TrainCurve {
  std::vector<TrainPoint> points;
  void to_csv(const std::string& path) const;
  double smoothed_at(int step) const;  // nearest recorded step
};

}  // namespace hopman
