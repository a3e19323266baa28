#include "hopman/train_curve.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hopman {

void TrainCurve::to_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("loss curve: cannot open " + path);
  f << "step,loss,smoothed\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", p.step, p.loss, p.smoothed);
    f << buf;
  }
}

double TrainCurve::smoothed_at(int step) const {
  if (points.empty()) throw DataError("loss curve: empty");
  const TrainPoint* best = &points.front();
  for (const auto& p : points)
    if (std::abs(p.step - step) < std::abs(best->step - step)) best = &p;
  return best->smoothed;
}

}  // namespace hopman
