#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dim/tensor.hpp"

namespace dim {

enum class ElementwiseKind { add, sub, mul };
enum class PoolKind { max, last };

using Rng = std::mt19937_64;

/// Matrix product over the last two axes. Either operand may carry a leading
/// batch axis ([B x m x k]); a rank-2 operand is shared across the batch.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Swaps the last two axes.
Tensor transpose(const Tensor& x);

Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseKind kind);
inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElementwiseKind::add); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElementwiseKind::sub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElementwiseKind::mul); }

/// x[..., n] + bias[n]
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Softmax over the last axis restricted to cells where mask == 1. Masked
/// cells come out exactly 0. The mask has the same shape as the logits.
/// Throws DegenerateError if any row is fully masked.
Tensor masked_softmax(const Tensor& logits, const Tensor& mask);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& x, Shape shape);

/// Row lookup: out[i] = table[indices[i]], or a zero row when indices[i] < 0.
/// Output shape is [indices.size() x table.extent(1)].
Tensor gather_rows(const Tensor& table, const std::vector<std::int64_t>& indices);

/// x[..., t, :] * mask[..., t]; the mask shape is x's shape minus its last axis.
Tensor mask_rows(const Tensor& x, const Tensor& mask);

/// Pools x[..., t, h] over t, restricted to unmasked steps. `max` takes the
/// per-feature maximum; `last` takes the row at the final unmasked step.
/// A fully masked sequence is a DegenerateError unless allow_empty, in which
/// case its pooled row is zero.
Tensor pool(const Tensor& x, PoolKind kind, const Tensor& mask, bool allow_empty = false);

/// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// -log softmax(logits)[target] for a rank-1 logit vector.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t target);

}  // namespace dim
