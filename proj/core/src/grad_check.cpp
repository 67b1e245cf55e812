#include "dim/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dim/error.hpp"

namespace dim {

namespace {

struct Probe {
  std::vector<double> analytic;
  std::vector<double> numeric;
};

Probe probe(const ScalarFn& f, Tensor x, double step) {
  if (!x.requires_grad()) throw ContractError("grad_check: x must require gradients");

  x.zero_grad();
  const Tensor y = f(x);
  if (y.numel() != 1) {
    throw ContractError("grad_check: function output has shape " + shape_string(y.shape()));
  }
  y.backward();
  std::vector<double> analytic(x.numel(), 0.0);
  if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

  auto values = x.mutable_data();
  std::vector<double> numeric(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = f(x).item();
    values[i] = saved - step;
    const double down = f(x).item();
    values[i] = saved;
    numeric[i] = (up - down) / (2.0 * step);
  }
  return {std::move(analytic), std::move(numeric)};
}

}  // namespace

double grad_check(const ScalarFn& f, Tensor x, double step) {
  const Probe p = probe(f, std::move(x), step);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.numeric.size(); ++i) {
    const double a = p.analytic[i], n = p.numeric[i];
    worst = std::max(worst, std::abs(a - n) / (std::abs(a) + std::abs(n) + 1e-12));
  }
  return worst;
}

GradComparison grad_check_norm(const ScalarFn& f, Tensor x, double step) {
  const Probe p = probe(f, std::move(x), step);
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < p.numeric.size(); ++i) {
    diff += (p.analytic[i] - p.numeric[i]) * (p.analytic[i] - p.numeric[i]);
    na += p.analytic[i] * p.analytic[i];
    nn += p.numeric[i] * p.numeric[i];
  }
  GradComparison out;
  out.analytic_norm = std::sqrt(na);
  out.numeric_norm = std::sqrt(nn);
  const double scale = out.analytic_norm + out.numeric_norm;
  out.relative = scale > 0.0 ? std::sqrt(diff) / scale : 0.0;
  return out;
}

}  // namespace dim
