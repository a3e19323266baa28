#pragma once

#include <deque>
#include <vector>

#include "hopman/world/types.hpp"

namespace hopman::translation {

// Ring of recent action chunks with their issue times; deployment-time
// temporal ensembling averages every buffered prediction for the queried step
// with exponentially decaying weights exp(-m * age).
class EnsembleBuffer {
 public:
  explicit EnsembleBuffer(int chunk_len, double decay = 0.01)
      : chunk_len_(chunk_len), decay_(decay) {}

  void push(int issued_at, const std::vector<float>& chunk, int action_dim);
  void clear() { entries_.clear(); }
  int size() const { return int(entries_.size()); }
  double decay() const { return decay_; }

  struct Entry {
    int issued_at;
    int action_dim;
    std::vector<float> chunk;  // chunk_len x action_dim
  };
  const std::deque<Entry>& entries() const { return entries_; }
  int chunk_len() const { return chunk_len_; }

 private:
  int chunk_len_;
  double decay_;
  std::deque<Entry> entries_;
};

// Weighted average of every buffered chunk's prediction for absolute step t.
// Throws StalenessError when no buffered chunk covers t.
world::Action temporal_ensemble(const EnsembleBuffer& buffer, int t);

}  // namespace hopman::translation
