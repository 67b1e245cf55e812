#include "dim/matching.hpp"

#include "dim/error.hpp"
#include "dim/ops.hpp"

namespace dim {

namespace {

// mask [B x n] broadcast to [B x rows x n].
Tensor broadcast_columns(const Tensor& mask, std::size_t rows) {
  const std::size_t batch = mask.extent(0);
  const std::size_t n = mask.extent(1);
  const auto mv = mask.data();
  std::vector<double> out(batch * rows * n);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(mv.begin() + b * n, n, out.begin() + (b * rows + r) * n);
    }
  }
  return Tensor({batch, rows, n}, std::move(out));
}

void require_support(const Tensor& mask, const char* side) {
  const std::size_t batch = mask.extent(0);
  const std::size_t n = mask.extent(1);
  const auto mv = mask.data();
  for (std::size_t b = 0; b < batch; ++b) {
    bool any = false;
    for (std::size_t j = 0; j < n && !any; ++j) any = mv[b * n + j] != 0.0;
    if (!any) {
      throw DegenerateError(std::string("cross_match: ") + side + " sequence " + std::to_string(b) +
                            " has no real row");
    }
  }
}

Tensor enhance(const Tensor& base, const Tensor& aligned, const Tensor& mask) {
  return mask_rows(concat({base, aligned, sub(base, aligned), mul(base, aligned)}, 2), mask);
}

}  // namespace

FlatSequence form_context(const Tensor& encoded, const Tensor& word_mask) {
  if (encoded.rank() != 3 || word_mask.shape() != Shape{encoded.extent(0), encoded.extent(1)}) {
    throw DimensionError("form_context: expected [S x L x w] with [S x L] mask");
  }
  FlatSequence out;
  out.sentences = encoded.extent(0);
  out.words = encoded.extent(1);
  out.rows = reshape(encoded, {out.sentences * out.words, encoded.extent(2)});
  out.mask = reshape(word_mask, {out.sentences * out.words}).detach();
  return out;
}

Tensor split_context(const Tensor& flat, std::size_t sentences, std::size_t words) {
  if (flat.rank() != 3 || flat.extent(1) != sentences * words) {
    throw DimensionError("split_context: " + shape_string(flat.shape()) + " is not [B x " +
                         std::to_string(sentences * words) + " x w]");
  }
  return reshape(flat, {flat.extent(0) * sentences, words, flat.extent(2)});
}

Tensor repeat_leading(const Tensor& x, std::size_t copies) {
  Shape shape = x.shape();
  shape.insert(shape.begin(), 1);
  const Tensor one = reshape(x, shape);
  if (copies == 1) return one;
  return concat(std::vector<Tensor>(copies, one), 0);
}

AlignmentResult cross_match(const Tensor& a, const Tensor& b, const Tensor& mask_a, const Tensor& mask_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.extent(0) != b.extent(0) || a.extent(2) != b.extent(2)) {
    throw DimensionError("cross_match: incompatible sequences " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  if (mask_a.shape() != Shape{a.extent(0), a.extent(1)} ||
      mask_b.shape() != Shape{b.extent(0), b.extent(1)}) {
    throw DimensionError("cross_match: masks do not fit their sequences");
  }
  require_support(mask_a, "first");
  require_support(mask_b, "second");

  AlignmentResult r;
  r.logits = matmul(a, transpose(b));
  r.weights_a = masked_softmax(r.logits, broadcast_columns(mask_b, a.extent(1)));
  r.weights_b = masked_softmax(transpose(r.logits), broadcast_columns(mask_a, b.extent(1)));
  r.aligned_a = matmul(r.weights_a, b);
  r.aligned_b = matmul(r.weights_b, a);
  r.enhanced_a = enhance(a, r.aligned_a, mask_a);
  r.enhanced_b = enhance(b, r.aligned_b, mask_b);
  return r;
}

DualMatchOutput dim_match(const MatchInputs& in, bool context_path, bool persona_path) {
  DualMatchOutput out;
  const std::size_t candidates = in.responses.extent(0);
  out.response_mask = in.response_mask;

  auto match = [&](const Tensor& encoded, const Tensor& mask, Tensor& split, Tensor& split_mask,
                   Tensor& response, AlignmentResult& alignment) {
    const FlatSequence flat = form_context(encoded, mask);
    const Tensor rows = repeat_leading(flat.rows, candidates);
    const Tensor rows_mask = repeat_leading(flat.mask, candidates).detach();
    alignment = cross_match(rows, in.responses, rows_mask, in.response_mask);
    split = split_context(alignment.enhanced_a, flat.sentences, flat.words);
    split_mask = reshape(rows_mask, {candidates * flat.sentences, flat.words}).detach();
    response = alignment.enhanced_b;
  };

  if (context_path) {
    match(in.utterances, in.utterance_mask, out.utterances, out.utterance_mask, out.response,
          out.context_alignment);
  }
  if (persona_path) {
    if (!in.profiles.defined()) throw ContractError("dim_match: persona path requested without profiles");
    match(in.profiles, in.profile_mask, out.profiles, out.profile_mask, out.response_star,
          out.persona_alignment);
  }
  return out;
}

Tensor fuse_context_level(const Tensor& c, const Tensor& personas, const Tensor& mask) {
  if (c.rank() == 1) {
    const std::size_t d = c.extent(0);
    const Tensor fused = fuse_context_level(reshape(c, {1, d}), repeat_leading(personas, 1),
                                            repeat_leading(mask, 1).detach());
    return reshape(fused, {d});
  }
  if (c.rank() != 2 || personas.rank() != 3 || personas.extent(0) != c.extent(0) ||
      personas.extent(2) != c.extent(1) || mask.shape() != Shape{personas.extent(0), personas.extent(1)}) {
    throw DimensionError("fuse_context_level: expected c [B x d], personas [B x P x d], mask [B x P]");
  }
  const std::size_t batch = c.extent(0);
  const std::size_t d = c.extent(1);
  const std::size_t profiles = personas.extent(1);
  try {
    require_support(mask, "persona");
  } catch (const DegenerateError&) {
    throw DegenerateError("fuse_context_level: no real profile");
  }
  const Tensor scores = reshape(matmul(personas, reshape(c, {batch, d, 1})), {batch, profiles});
  const Tensor weights = masked_softmax(scores, mask);
  const Tensor mixture = reshape(matmul(reshape(weights, {batch, 1, profiles}), personas), {batch, d});
  return add(c, mixture);
}

Tensor fuse_utterance_level(const Tensor& utterances, const Tensor& personas, const Tensor& mask) {
  if (utterances.rank() != 3 || personas.rank() != 3 || utterances.extent(0) != personas.extent(0) ||
      utterances.extent(2) != personas.extent(2) ||
      mask.shape() != Shape{personas.extent(0), personas.extent(1)}) {
    throw DimensionError("fuse_utterance_level: expected utterances [B x U x d], personas [B x P x d]");
  }
  try {
    require_support(mask, "persona");
  } catch (const DegenerateError&) {
    throw DegenerateError("fuse_utterance_level: no real profile");
  }
  const Tensor scores = matmul(utterances, transpose(personas));  // [B x U x P]
  const Tensor weights = masked_softmax(scores, broadcast_columns(mask, utterances.extent(1)));
  return add(utterances, matmul(weights, personas));
}

}  // namespace dim
