#pragma once

#include <functional>

#include "hopman/nn/layers.hpp"

namespace hopman::nn {

struct GradCheckReport {
  double max_rel_err = 0;
  int probes = 0;
  std::string worst_param;
};

// Central finite differences against the analytic gradients already stored in
// the param grads. `loss_fn` must recompute the loss as a pure function of the
// current parameter values (all randomness frozen by the caller). Probes are
// drawn from coordinates whose analytic gradient is not vanishingly small
// relative to the largest one; formula errors show up at full-size
// coordinates, while near-zero ones only measure finite-difference noise.
inline GradCheckReport finite_diff_check(ParamStore<double>& ps,
                                         const std::function<double()>& loss_fn, int probes,
                                         u64 seed, double h = 1e-4) {
  double gmax = 0;
  for (const auto& [name, p] : ps.params()) {
    if (!p->grad_alloc) continue;
    for (double g : p->grad.v) gmax = std::max(gmax, std::fabs(g));
  }
  if (gmax == 0) throw NumericError("gradcheck: all analytic gradients are zero");
  const double floor = 1e-4 * gmax;

  struct Coord {
    Node<double>* p;
    i64 idx;
    std::string name;
  };
  std::vector<Coord> eligible;
  for (auto& [name, p] : ps.params()) {
    if (!p->grad_alloc) continue;
    for (i64 i = 0; i < p->grad.numel(); ++i)
      if (std::fabs(p->grad.v[size_t(i)]) >= floor) eligible.push_back({p.get(), i, name});
  }
  if (eligible.empty()) throw NumericError("gradcheck: no eligible coordinates");

  Rng rng(seed);
  GradCheckReport rep;
  rep.probes = probes;
  for (int k = 0; k < probes; ++k) {
    const Coord& c = eligible[size_t(rng.next_u64() % eligible.size())];
    double& w = c.p->val.v[size_t(c.idx)];
    const double w0 = w;
    w = w0 + h;
    const double lp = loss_fn();
    w = w0 - h;
    const double lm = loss_fn();
    w = w0;
    const double fd = (lp - lm) / (2 * h);
    const double an = c.p->grad.v[size_t(c.idx)];
    const double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-12});
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_param = c.name + "[" + std::to_string(c.idx) + "]";
    }
  }
  return rep;
}

}  // namespace hopman::nn
