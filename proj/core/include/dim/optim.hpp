#pragma once

#include <cstdint>
#include <vector>

#include "dim/tensor.hpp"

namespace dim {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers for every entry of a ParamSet, indexed in
/// registration order.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParamSet& params, AdamOptions options = {});

  const AdamOptions& options() const { return options_; }
  std::uint64_t step() const { return step_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  friend void adam_step(ParamSet& params, AdamState& state, double lr);

  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// One bias-corrected Adam update using the gradients accumulated in
/// `params`. Frozen tensors (requires_grad == false) are left untouched;
/// a parameter without an accumulated gradient is treated as zero-gradient.
/// Throws NumericError naming the parameter if a gradient is not finite.
void adam_step(ParamSet& params, AdamState& state, double lr);

}  // namespace dim
