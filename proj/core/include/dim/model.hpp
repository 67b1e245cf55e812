#pragma once

#include <string>
#include <string_view>

#include "dim/aggregation.hpp"
#include "dim/embedding.hpp"
#include "dim/encoder.hpp"
#include "dim/matching.hpp"
#include "dim/ops.hpp"
#include "dim/text.hpp"

namespace dim {

enum class Variant { imn, imn_ctx, imn_utr, dim, dim_minus_persona, dim_minus_context };

Variant parse_variant(std::string_view name);
std::string to_string(Variant v);

bool uses_context_matching(Variant v);
bool uses_persona_matching(Variant v);
bool uses_persona_attention(Variant v);

struct ModelConfig {
  EmbeddingConfig embedding;
  std::size_t hidden_dim = 200;
  std::size_t mlp_hidden = 256;
  double dropout = 0.2;
  Variant variant = Variant::dim;

  std::size_t feature_dim() const;
};

/// Intermediate tensors of one forward pass, exposed for inspection.
struct ForwardResult {
  Tensor logits;           // [C]
  Tensor context_embedding;   // c^agr (or the fused c+ for IMN_ctx / IMN_utr): [C x 4h]
  Tensor response_embedding;  // r^agr : [C x 4h]
  Tensor persona_embedding;   // p^agr : [C x 4h]
  Tensor response_star_embedding;  // r^agr* : [C x 4h]
  Tensor features;         // m : [C x F]
  Tensor persona_weights;  // [C x P]
  DualMatchOutput matching;
};

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;
};

/// Response-selection network in one of the supported variants. Parameters
/// are created in a fixed order so variants sharing a prefix of that order
/// initialise identically under the same seed.
class Model {
 public:
  Model(const ModelConfig& config, std::size_t vocab_size, std::size_t char_vocab_size, std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t char_vocab_size() const { return char_vocab_size_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const WordRepr& word_repr() const { return repr_; }
  const BiLstmParams& encoder() const { return encoder_; }
  const BiLstmParams& aggregator() const { return aggregator_; }

  /// Replaces the pretrained (or task) table values, e.g. from load_pretrained.
  void set_pretrained_table(const Tensor& table);
  void set_task_table(const Tensor& table, bool freeze);

  ForwardResult forward(const TokenizedExample& example, const ForwardOptions& options = {}) const;

  /// Candidate cross-entropy of one example.
  Tensor loss(const TokenizedExample& example, const ForwardOptions& options = {}) const;

 private:
  ModelConfig config_;
  std::size_t vocab_size_;
  std::size_t char_vocab_size_;
  ParamSet params_;
  WordRepr repr_;
  BiLstmParams encoder_;
  BiLstmParams aggregator_;
  BiLstmParams context_aggregator_;
  MlpParams mlp_;
  PersonaAttention persona_attention_;
};

}  // namespace dim
