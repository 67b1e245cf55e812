#pragma once

#include <functional>

#include "dim/tensor.hpp"

namespace dim {

using ScalarFn = std::function<Tensor(const Tensor&)>;

/// Compares the reverse-mode gradient of `f` at `x` with central finite
/// differences and returns
///   max_i |analytic_i - numeric_i| / (|analytic_i| + |numeric_i| + 1e-12).
/// `x` must be a leaf with requires_grad set; its values are restored on exit.
/// Throws ContractError if f does not return a single element.
double grad_check(const ScalarFn& f, Tensor x, double step = 1e-5);

struct GradComparison {
  double relative = 0.0;       // ||a - n|| / (||a|| + ||n||), 0 when both vanish
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

/// Same probe, but compares whole gradients by their norms. Preferred for deep
/// compositions, where entries far below the finite-difference noise floor make
/// the per-entry ratio meaningless.
GradComparison grad_check_norm(const ScalarFn& f, Tensor x, double step = 1e-5);

}  // namespace dim
