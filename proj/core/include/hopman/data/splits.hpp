#pragma once

#include "hopman/data/types.hpp"

namespace hopman::data {

// Generalization-level split over the task catalog:
//   train_human: every tuple (the passive corpus sees everything);
//   train_robot excludes (i) one held-out instance per category (-> Ga),
//   (ii) the (door, open) combination while door/close and drawer/open stay
//   (-> Gb), (iii) the cup category entirely (-> SGa), (iv) the stack skill
//   entirely (-> SGb). MG evals reuse train_robot tuples with fresh seeds.
SplitSpec build_splits(const std::vector<TaskTuple>& catalog, u64 seed);

// Soundness checks per the level definitions; throws ConfigError on violation.
void validate_splits(const SplitSpec& split);

}  // namespace hopman::data
