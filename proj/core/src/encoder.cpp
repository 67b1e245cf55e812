#include "dim/encoder.hpp"

#include <cmath>

#include "dim/error.hpp"

namespace dim {

namespace {

LstmCell init_cell(const std::string& prefix, std::size_t d, std::size_t h, Rng& rng, ParamSet& params) {
  const double k = 1.0 / std::sqrt(static_cast<double>(h));
  std::uniform_real_distribution<double> dist(-k, k);
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };
  LstmCell cell;
  cell.input_weights = params.add(prefix + ".w", Tensor({d, 4 * h}, draw(d * 4 * h), true));
  cell.recurrent_weights = params.add(prefix + ".u", Tensor({h, 4 * h}, draw(h * 4 * h), true));
  std::vector<double> bias(4 * h, 0.0);
  std::fill(bias.begin() + h, bias.begin() + 2 * h, 1.0);
  cell.bias = params.add(prefix + ".b", Tensor({4 * h}, std::move(bias), true));
  return cell;
}

// Unidirectional recurrence over x [N x T x d]; returns [N x T x h].
Tensor run_direction(const Tensor& x, const LstmCell& cell, std::size_t h) {
  const std::size_t n = x.extent(0);
  const std::size_t steps = x.extent(1);
  const std::size_t d = x.extent(2);
  const Tensor projected =
      reshape(add_bias(matmul(reshape(x, {n * steps, d}), cell.input_weights), cell.bias),
              {n, steps, 4 * h});
  Tensor hidden;
  Tensor state;
  std::vector<Tensor> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor gates = reshape(slice(projected, 1, t, 1), {n, 4 * h});
    if (hidden.defined()) gates = add(gates, matmul(hidden, cell.recurrent_weights));
    const Tensor in_gate = sigmoid(slice(gates, 1, 0, h));
    const Tensor forget_gate = sigmoid(slice(gates, 1, h, h));
    const Tensor candidate = tanh(slice(gates, 1, 2 * h, h));
    const Tensor out_gate = sigmoid(slice(gates, 1, 3 * h, h));
    state = state.defined() ? add(mul(forget_gate, state), mul(in_gate, candidate))
                            : mul(in_gate, candidate);
    hidden = mul(out_gate, tanh(state));
    outputs.push_back(reshape(hidden, {n, 1, h}));
  }
  return outputs.size() == 1 ? outputs.front() : concat(outputs, 1);
}

}  // namespace

BiLstmParams init_bilstm(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                         Rng& rng, ParamSet& params) {
  if (input_dim == 0 || hidden_dim == 0) throw ConfigError("BiLSTM dimensions must be positive");
  BiLstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.forward = init_cell(prefix + ".fwd", input_dim, hidden_dim, rng, params);
  p.backward = init_cell(prefix + ".bwd", input_dim, hidden_dim, rng, params);
  return p;
}

Tensor bilstm(const Tensor& x, const Tensor& mask, const BiLstmParams& params) {
  if (x.rank() != 3) throw DimensionError("bilstm: input must be [N x T x d], got " + shape_string(x.shape()));
  const std::size_t n = x.extent(0);
  const std::size_t steps = x.extent(1);
  const std::size_t d = x.extent(2);
  const std::size_t h = params.hidden_dim;
  if (d != params.input_dim) {
    throw DimensionError("bilstm: input width " + std::to_string(d) + " but parameters expect " +
                         std::to_string(params.input_dim));
  }
  if (mask.shape() != Shape{n, steps}) {
    throw DimensionError("bilstm: mask " + shape_string(mask.shape()) + " does not fit " +
                         shape_string(x.shape()));
  }

  const auto mv = mask.data();
  std::vector<std::size_t> lengths(n, 0);
  std::size_t longest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = 0;
    while (len < steps && mv[i * steps + len] != 0.0) ++len;
    for (std::size_t t = len; t < steps; ++t) {
      if (mv[i * steps + t] != 0.0) throw ContractError("bilstm: mask of sequence " + std::to_string(i) + " is not a prefix");
    }
    lengths[i] = len;
    longest = std::max(longest, len);
  }
  if (longest == 0) return Tensor::zeros({n, steps, 2 * h});

  // The recurrence only needs to cover the longest real prefix; later steps
  // are padding in every sequence and come out zero.
  const Tensor active = longest == steps ? x : slice(x, 1, 0, longest);
  const Tensor active_mask =
      longest == steps ? mask : slice(mask, 1, 0, longest).detach();

  // Per-sequence reversal of the real prefix; padded slots map to zero rows.
  std::vector<std::int64_t> reverse(n * longest, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < lengths[i]; ++t) {
      reverse[i * longest + t] = static_cast<std::int64_t>(i * longest + (lengths[i] - 1 - t));
    }
  }
  const Tensor forward_states = run_direction(active, params.forward, h);
  const Tensor reversed_input =
      reshape(gather_rows(reshape(active, {n * longest, d}), reverse), {n, longest, d});
  const Tensor reversed_states = run_direction(reversed_input, params.backward, h);
  const Tensor backward_states =
      reshape(gather_rows(reshape(reversed_states, {n * longest, h}), reverse), {n, longest, h});

  Tensor out = mask_rows(concat({forward_states, backward_states}, 2), active_mask);
  if (longest < steps) out = concat({out, Tensor::zeros({n, steps - longest, 2 * h})}, 1);
  return out;
}

}  // namespace dim
