#include "hopman/translation/ensemble.hpp"

#include <cmath>

namespace hopman::translation {

void EnsembleBuffer::push(int issued_at, const std::vector<float>& chunk, int action_dim) {
  if (int(chunk.size()) != chunk_len_ * action_dim)
    throw NumericError("ensemble: chunk size mismatch");
  entries_.push_back({issued_at, action_dim, chunk});
  while (int(entries_.size()) > chunk_len_) entries_.pop_front();
}

world::Action temporal_ensemble(const EnsembleBuffer& buffer, int t) {
  double wsum = 0;
  std::array<double, 4> acc{0, 0, 0, 0};
  int dim = 0;
  for (const auto& e : buffer.entries()) {
    const int age = t - e.issued_at;
    if (age < 0 || age >= buffer.chunk_len()) continue;
    const double w = std::exp(-buffer.decay() * age);
    dim = e.action_dim;
    for (int j = 0; j < e.action_dim && j < 4; ++j)
      acc[size_t(j)] += w * double(e.chunk[size_t(age * e.action_dim + j)]);
    wsum += w;
  }
  if (wsum <= 0)
    throw StalenessError("temporal_ensemble: no buffered chunk covers step " + std::to_string(t));
  world::Action a;
  for (int j = 0; j < dim && j < 4; ++j) a.v[size_t(j)] = float(acc[size_t(j)] / wsum);
  return a;
}

}  // namespace hopman::translation
