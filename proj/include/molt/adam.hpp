#pragma once

#include "molt/tape.hpp"

namespace molt {

struct AdamConfig {
  double learning_rate = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0.0;  // global-norm clip over tunables; 0 disables
};

struct AdamState {
  std::vector<Matrix> m;  // first moments, aligned with store indices
  std::vector<Matrix> v;  // second moments
  long long step = 0;

  static AdamState init(const ParamStore& store);
};

// One bias-corrected Adam update over every tunable parameter. Frozen
// parameters are untouched; gradients are zeroed afterwards. Requires a
// prior backward pass (ParamStore::grads_populated).
void adam_step(ParamStore& store, AdamState& state, const AdamConfig& cfg);

}  // namespace molt
