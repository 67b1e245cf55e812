#include "dim/optim.hpp"

#include <cmath>

#include "dim/error.hpp"

namespace dim {

AdamState::AdamState(const ParamSet& params, AdamOptions options) : options_(options) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.tensor.numel(), 0.0);
    v_.emplace_back(e.tensor.numel(), 0.0);
  }
}

void adam_step(ParamSet& params, AdamState& state, double lr) {
  auto& entries = params.entries();
  if (entries.size() != state.m_.size()) {
    throw DimensionError("adam_step: optimiser state tracks " + std::to_string(state.m_.size()) +
                         " tensors, parameter set has " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Tensor& p = entries[i].tensor;
    if (state.m_[i].size() != p.numel()) {
      throw DimensionError("adam_step: moment buffer shape mismatch for " + entries[i].name);
    }
    if (p.requires_grad() && p.has_grad()) {
      for (double g : p.grad()) {
        if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in " + entries[i].name);
      }
    }
  }

  ++state.step_;
  const AdamOptions& o = state.options_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& p = entries[i].tensor;
    if (!p.requires_grad()) continue;
    const auto grad = p.grad();
    auto values = p.mutable_data();
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace dim
