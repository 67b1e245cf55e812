#pragma once

#include "dim/encoder.hpp"
#include "dim/tensor.hpp"

namespace dim {

/// A flattened multi-sentence sequence (context or persona) with its row mask.
struct FlatSequence {
  Tensor rows;  // [S*L x w]
  Tensor mask;  // [S*L]
  std::size_t sentences = 0;
  std::size_t words = 0;
};

/// Concatenates sentence encodings [S x L x w] row-major into one sequence.
FlatSequence form_context(const Tensor& encoded, const Tensor& word_mask);

/// Inverse of form_context on an enhanced matrix: [B x S*L x w] -> [B*S x L x w].
Tensor split_context(const Tensor& flat, std::size_t sentences, std::size_t words);

/// Stacks `copies` copies of x along a new leading axis.
Tensor repeat_leading(const Tensor& x, std::size_t copies);

/// Bidirectional soft alignment between two batched sequences and the
/// difference/product enhancement of both sides.
struct AlignmentResult {
  Tensor logits;         // e: [B x la x lb] dot products
  Tensor weights_a;      // softmax of e over b, per a-row: [B x la x lb]
  Tensor weights_b;      // softmax of e over a, per b-row: [B x lb x la]
  Tensor aligned_a;      // a~ : [B x la x w], mixtures of b rows
  Tensor aligned_b;      // b~ : [B x lb x w], mixtures of a rows
  Tensor enhanced_a;     // [a; a~; a - a~; a * a~] : [B x la x 4w]
  Tensor enhanced_b;     // [B x lb x 4w]
};

/// a [B x la x w], b [B x lb x w] with masks [B x la], [B x lb]. Rows of the
/// enhanced outputs at masked positions are zero. A side with no real row in
/// any batch element is a DegenerateError.
AlignmentResult cross_match(const Tensor& a, const Tensor& b, const Tensor& mask_a, const Tensor& mask_b);

/// Per-candidate matching matrices for one example.
struct DualMatchOutput {
  Tensor utterances;      // U^ : [C*U x L x 8h]
  Tensor utterance_mask;  // [C*U x L]
  Tensor response;        // R^ : [C x Lr x 8h]
  Tensor profiles;        // P^ : [C*P x Lp x 8h]
  Tensor profile_mask;    // [C*P x Lp]
  Tensor response_star;   // R^* : [C x Lr x 8h]
  Tensor response_mask;   // [C x Lr]
  AlignmentResult context_alignment;
  AlignmentResult persona_alignment;
};

struct MatchInputs {
  Tensor utterances;      // [U x L x 2h]
  Tensor utterance_mask;  // [U x L]
  Tensor profiles;        // [P x Lp x 2h], may be undefined
  Tensor profile_mask;    // [P x Lp]
  Tensor responses;       // [C x Lr x 2h]
  Tensor response_mask;   // [C x Lr]
};

/// Context-response and persona-response matching, run independently. Either
/// path can be skipped; skipped outputs stay undefined.
DualMatchOutput dim_match(const MatchInputs& in, bool context_path, bool persona_path);

/// c+ = c + sum_n softmax_n(c . p_n) p_n over real profiles.
/// c [B x d], personas [B x P x d], mask [B x P]; rank-1 c with [P x d]
/// personas and [P] mask is also accepted.
Tensor fuse_context_level(const Tensor& c, const Tensor& personas, const Tensor& mask);

/// u_m+ = u_m + sum_n softmax_n(u_m . p_n) p_n for every utterance.
/// utterances [B x U x d], personas [B x P x d], mask [B x P].
Tensor fuse_utterance_level(const Tensor& utterances, const Tensor& personas, const Tensor& mask);

}  // namespace dim
