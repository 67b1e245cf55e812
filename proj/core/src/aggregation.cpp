#include "dim/aggregation.hpp"

#include <cmath>

#include "dim/error.hpp"

namespace dim {

namespace {

Tensor uniform(Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

Tensor maybe_dropout(const Tensor& x, double rate, bool training, Rng* rng) {
  if (!training || rate == 0.0) return x;
  if (!rng) throw ContractError("dropout in training mode needs a random generator");
  return dropout(x, rate, training, *rng);
}

Tensor max_last(const Tensor& states, const Tensor& mask, bool allow_empty) {
  return concat({pool(states, PoolKind::max, mask, allow_empty), pool(states, PoolKind::last, mask, allow_empty)},
                states.rank() - 2);
}

}  // namespace

PersonaAttention init_persona_attention(const std::string& prefix, std::size_t dim, Rng& rng,
                                        ParamSet& params) {
  const double k = 1.0 / std::sqrt(static_cast<double>(dim));
  PersonaAttention att;
  att.weight = params.add(prefix + ".w", uniform({dim}, k, rng));
  att.bias = params.add(prefix + ".b", uniform({1}, k, rng));
  return att;
}

MlpParams init_mlp(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim, Rng& rng,
                   ParamSet& params) {
  MlpParams mlp;
  const double k1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double k2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  mlp.hidden_weights = params.add(prefix + ".w1", uniform({input_dim, hidden_dim}, k1, rng));
  mlp.hidden_bias = params.add(prefix + ".b1", uniform({hidden_dim}, k1, rng));
  mlp.output_weights = params.add(prefix + ".w2", uniform({hidden_dim, 1}, k2, rng));
  mlp.output_bias = params.add(prefix + ".b2", uniform({1}, k2, rng));
  return mlp;
}

Tensor aggregate_sequences(const Tensor& matching, const Tensor& mask, const BiLstmParams& params,
                           double dropout_rate, bool training, Rng* rng) {
  const Tensor states = maybe_dropout(bilstm(matching, mask, params), dropout_rate, training, rng);
  return max_last(states, mask, true);
}

Tensor aggregate_context(const Tensor& utterances, const Tensor& utterance_mask, const BiLstmParams& params,
                         double dropout_rate, bool training, Rng* rng) {
  const Tensor states = maybe_dropout(bilstm(utterances, utterance_mask, params), dropout_rate, training, rng);
  try {
    return max_last(states, utterance_mask, false);
  } catch (const DegenerateError&) {
    throw DegenerateError("aggregate_context: context has no real utterance");
  }
}

PersonaAggregate aggregate_persona(const Tensor& profiles, const Tensor& profile_mask,
                                   const PersonaAttention& attention) {
  if (profiles.rank() != 3 || profile_mask.shape() != Shape{profiles.extent(0), profiles.extent(1)}) {
    throw DimensionError("aggregate_persona: expected profiles [B x P x w] with [B x P] mask");
  }
  const std::size_t batch = profiles.extent(0);
  const std::size_t count = profiles.extent(1);
  const std::size_t width = profiles.extent(2);
  if (attention.weight.numel() != width) {
    throw DimensionError("aggregate_persona: attention vector has " + std::to_string(attention.weight.numel()) +
                         " entries, profiles have width " + std::to_string(width));
  }
  const Tensor raw = matmul(profiles, reshape(attention.weight, {width, 1}));  // [B x P x 1]
  const Tensor alpha = relu(add_bias(raw, attention.bias));
  PersonaAggregate out;
  try {
    out.weights = masked_softmax(reshape(alpha, {batch, count}), profile_mask);
  } catch (const DegenerateError&) {
    throw DegenerateError("aggregate_persona: persona has no real profile");
  }
  out.embedding = reshape(matmul(reshape(out.weights, {batch, 1, count}), profiles), {batch, width});
  return out;
}

Tensor score(const Tensor& features, const MlpParams& mlp, double dropout_rate, bool training, Rng* rng) {
  if (features.rank() != 2 || features.extent(1) != mlp.hidden_weights.extent(0)) {
    throw DimensionError("score: feature " + shape_string(features.shape()) + " does not fit MLP input " +
                         std::to_string(mlp.hidden_weights.extent(0)));
  }
  const Tensor hidden = maybe_dropout(relu(add_bias(matmul(features, mlp.hidden_weights), mlp.hidden_bias)),
                                      dropout_rate, training, rng);
  const Tensor logits = add_bias(matmul(hidden, mlp.output_weights), mlp.output_bias);
  return reshape(logits, {features.extent(0)});
}

Tensor candidate_loss(const Tensor& logits, std::size_t positive_index) {
  if (logits.rank() != 1 || logits.extent(0) < 2) {
    throw ContractError("candidate_loss: need a vector of at least two candidate logits, got " +
                        shape_string(logits.shape()));
  }
  return softmax_cross_entropy(logits, positive_index);
}

}  // namespace dim
