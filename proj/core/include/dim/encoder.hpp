#pragma once

#include <string>

#include "dim/ops.hpp"
#include "dim/tensor.hpp"

namespace dim {

/// One LSTM direction, gates packed in (input, forget, cell, output) order.
struct LstmCell {
  Tensor input_weights;      // [d x 4h]
  Tensor recurrent_weights;  // [h x 4h]
  Tensor bias;               // [4h]
};

struct BiLstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  LstmCell forward;
  LstmCell backward;

  std::size_t output_dim() const { return 2 * hidden_dim; }
};

/// Weights uniform(-k, k) with k = 1/sqrt(h); biases zero except the forget
/// gate at +1. Registered as "<prefix>.{fwd,bwd}.{w,u,b}".
BiLstmParams init_bilstm(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                         Rng& rng, ParamSet& params);

/// Bidirectional LSTM over a batch of sequences x [N x T x d] with a
/// prefix mask [N x T]. The backward direction starts at each sequence's last
/// real step. Output [N x T x 2h] is [forward; backward] with padded steps
/// zeroed. A mask that is not a prefix of ones is a ContractError.
Tensor bilstm(const Tensor& x, const Tensor& mask, const BiLstmParams& params);

/// Sentence encodings of one example, all produced by the same BiLSTM.
struct EncodedSequences {
  Tensor utterances;  // [U x L x 2h]
  Tensor profiles;    // [P x Lp x 2h], undefined when persona is unused
  Tensor responses;   // [C x Lr x 2h]
};

}  // namespace dim
