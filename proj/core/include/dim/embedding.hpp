#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dim/ops.hpp"
#include "dim/tensor.hpp"
#include "dim/text.hpp"

namespace dim {

struct EmbeddingConfig {
  std::size_t pretrained_dim = 300;
  std::size_t task_dim = 100;
  std::vector<std::size_t> char_windows = {3, 4, 5};
  std::size_t char_filters_per_window = 50;
  std::size_t char_embed_dim = 16;
  bool freeze_pretrained = true;
  // Set when the task table comes from a precomputed file.
  bool freeze_task = false;

  std::size_t char_feature_dim() const { return char_windows.size() * char_filters_per_window; }
  std::size_t word_dim() const { return pretrained_dim + task_dim + char_feature_dim(); }
};

/// Word representation tables: frozen pretrained vectors, task-specific
/// vectors and a character CNN. Either word table may be absent (dim 0).
struct WordRepr {
  EmbeddingConfig config;
  Tensor pretrained;  // [V x pretrained_dim]
  Tensor task;        // [V x task_dim]
  Tensor chars;       // [Vc x char_embed_dim]
  std::vector<Tensor> conv_weights;  // per window w: [w * char_embed_dim x filters]
  std::vector<Tensor> conv_biases;   // per window: [filters]
};

/// Allocates and registers the tables under "embed.*". Word rows are
/// uniform(-0.1, 0.1) with a zero pad row.
WordRepr init_word_repr(const EmbeddingConfig& config, std::size_t vocab_size,
                        std::size_t char_vocab_size, Rng& rng, ParamSet& params);

/// Reads "<token> <f1> ... <fD>" lines. Rows of vocabulary tokens found in the
/// file are copied; the rest are drawn uniform(-0.1, 0.1) in id order; the pad
/// row is zero. Throws FormatError on ragged rows or a width other than `dim`.
Tensor load_pretrained(const std::filesystem::path& path, const Vocab& vocab, std::size_t dim, Rng& rng);

/// Character CNN for `words` words of `chars_per_word` char ids each:
/// per window, a zero-padded 1-d convolution, ReLU and max-pool over
/// positions. Returns [words x |windows| * filters].
Tensor char_conv(const std::vector<std::int32_t>& char_ids, std::size_t chars_per_word,
                 const WordRepr& repr);

/// Embeds a [rows x words] id grid into [rows x words x d]. Padded words
/// (mask 0) become zero vectors.
Tensor embed_words(const TokenGrid& grid, const WordRepr& repr);

}  // namespace dim
