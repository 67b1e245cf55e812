#pragma once

#include <string>

#include "dim/encoder.hpp"
#include "dim/ops.hpp"
#include "dim/tensor.hpp"

namespace dim {

/// Attention pooling over profile embeddings: alpha_n = ReLU(w . p_n + b).
struct PersonaAttention {
  Tensor weight;  // [4h]
  Tensor bias;    // [1]
};

PersonaAttention init_persona_attention(const std::string& prefix, std::size_t dim, Rng& rng,
                                        ParamSet& params);

struct MlpParams {
  Tensor hidden_weights;  // [F x H]
  Tensor hidden_bias;     // [H]
  Tensor output_weights;  // [H x 1]
  Tensor output_bias;     // [1]
};

MlpParams init_mlp(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim, Rng& rng,
                   ParamSet& params);

/// BiLSTM over each matching matrix [N x T x 8h], then [max; last] pooling.
/// Rows whose mask is entirely zero (padding sentences) pool to zero.
/// Returns [N x 4h].
Tensor aggregate_sequences(const Tensor& matching, const Tensor& mask, const BiLstmParams& params,
                           double dropout_rate = 0.0, bool training = false, Rng* rng = nullptr);

/// Chronological BiLSTM over utterance embeddings [B x U x 4h] followed by
/// [max; last] pooling. Every batch row needs at least one real utterance.
Tensor aggregate_context(const Tensor& utterances, const Tensor& utterance_mask, const BiLstmParams& params,
                         double dropout_rate = 0.0, bool training = false, Rng* rng = nullptr);

struct PersonaAggregate {
  Tensor embedding;  // [B x 4h]
  Tensor weights;    // [B x P], zero on padded profiles
};

/// Softmax-of-ReLU-score weighted sum over real profiles [B x P x 4h].
PersonaAggregate aggregate_persona(const Tensor& profiles, const Tensor& profile_mask,
                                   const PersonaAttention& attention);

/// One logit per row of the feature matrix [B x F] -> [B].
Tensor score(const Tensor& features, const MlpParams& mlp, double dropout_rate = 0.0, bool training = false,
             Rng* rng = nullptr);

/// -log softmax(logits)[positive] over C >= 2 candidate logits.
Tensor candidate_loss(const Tensor& logits, std::size_t positive_index);

}  // namespace dim
