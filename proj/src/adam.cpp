#include "molt/adam.hpp"

#include <cmath>

namespace molt {

AdamState AdamState::init(const ParamStore& store) {
  AdamState s;
  s.m.reserve(store.size());
  s.v.reserve(store.size());
  for (int i = 0; i < store.size(); ++i) {
    const Matrix& val = store.at(i).value;
    s.m.push_back(Matrix::zeros(val.rows(), val.cols()));
    s.v.push_back(Matrix::zeros(val.rows(), val.cols()));
  }
  return s;
}

void adam_step(ParamStore& store, AdamState& state, const AdamConfig& cfg) {
  if (!store.grads_populated()) {
    throw ContractError("adam_step: gradients not populated; run a backward pass first");
  }
  if (static_cast<int>(state.m.size()) != store.size()) {
    throw ContractError("adam_step: optimizer state does not match the parameter store");
  }
  if (cfg.learning_rate <= 0.0) throw ContractError("adam_step: learning rate must be > 0");

  double clip_scale = 1.0;
  if (cfg.grad_clip > 0.0) {
    double sq = 0.0;
    for (int i = 0; i < store.size(); ++i) {
      if (store.at(i).frozen) continue;
      const Matrix& g = store.at(i).grad;
      for (size_t k = 0; k < g.size(); ++k) sq += g.data()[k] * g.data()[k];
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg.grad_clip) clip_scale = cfg.grad_clip / norm;
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (int i = 0; i < store.size(); ++i) {
    Param& p = store.at(i);
    if (p.frozen) continue;
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    for (size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data()[k] * clip_scale;
      m.data()[k] = cfg.beta1 * m.data()[k] + (1.0 - cfg.beta1) * g;
      v.data()[k] = cfg.beta2 * v.data()[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.data()[k] / bc1;
      const double v_hat = v.data()[k] / bc2;
      p.value.data()[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  store.zero_grads();
}

}  // namespace molt
