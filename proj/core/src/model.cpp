#include "dim/model.hpp"

#include <algorithm>

#include "dim/error.hpp"

namespace dim {

Variant parse_variant(std::string_view name) {
  if (name == "IMN") return Variant::imn;
  if (name == "IMN_ctx") return Variant::imn_ctx;
  if (name == "IMN_utr") return Variant::imn_utr;
  if (name == "DIM") return Variant::dim;
  if (name == "DIM-persona") return Variant::dim_minus_persona;
  if (name == "DIM-context") return Variant::dim_minus_context;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected IMN, IMN_ctx, IMN_utr, DIM, DIM-persona, DIM-context)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::imn: return "IMN";
    case Variant::imn_ctx: return "IMN_ctx";
    case Variant::imn_utr: return "IMN_utr";
    case Variant::dim: return "DIM";
    case Variant::dim_minus_persona: return "DIM-persona";
    case Variant::dim_minus_context: return "DIM-context";
  }
  return "?";
}

bool uses_context_matching(Variant v) { return v != Variant::dim_minus_context; }

bool uses_persona_matching(Variant v) {
  return v == Variant::dim || v == Variant::dim_minus_context || v == Variant::imn_ctx ||
         v == Variant::imn_utr;
}

bool uses_persona_attention(Variant v) { return v == Variant::dim || v == Variant::dim_minus_context; }

std::size_t ModelConfig::feature_dim() const {
  const std::size_t pooled = 4 * hidden_dim;
  return variant == Variant::dim ? 4 * pooled : 2 * pooled;
}

Model::Model(const ModelConfig& config, std::size_t vocab_size, std::size_t char_vocab_size, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size), char_vocab_size_(char_vocab_size) {
  if (vocab_size < 2 || char_vocab_size < 2) throw ConfigError("vocabularies must contain the reserved ids");
  if (config.hidden_dim == 0 || config.mlp_hidden == 0) throw ConfigError("hidden dimensions must be positive");
  if (!(config.dropout >= 0.0) || config.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  Rng rng(seed);
  const std::size_t h = config.hidden_dim;
  repr_ = init_word_repr(config.embedding, vocab_size, char_vocab_size, rng, params_);
  encoder_ = init_bilstm("encoder", config.embedding.word_dim(), h, rng, params_);
  aggregator_ = init_bilstm("aggregate", 8 * h, h, rng, params_);
  if (uses_context_matching(config.variant)) {
    context_aggregator_ = init_bilstm("context", 4 * h, h, rng, params_);
  }
  mlp_ = init_mlp("mlp", config.feature_dim(), config.mlp_hidden, rng, params_);
  if (uses_persona_attention(config.variant)) {
    persona_attention_ = init_persona_attention("persona_attention", 4 * h, rng, params_);
  }
}

void Model::set_pretrained_table(const Tensor& table) {
  if (!repr_.pretrained.defined() || table.shape() != repr_.pretrained.shape()) {
    throw DimensionError("pretrained table " + shape_string(table.shape()) + " does not match the model");
  }
  auto dst = repr_.pretrained.mutable_data();
  std::copy(table.data().begin(), table.data().end(), dst.begin());
}

void Model::set_task_table(const Tensor& table, bool freeze) {
  if (!repr_.task.defined() || table.shape() != repr_.task.shape()) {
    throw DimensionError("task table " + shape_string(table.shape()) + " does not match the model");
  }
  auto dst = repr_.task.mutable_data();
  std::copy(table.data().begin(), table.data().end(), dst.begin());
  repr_.task.set_requires_grad(!freeze);
  config_.embedding.freeze_task = freeze;
}

ForwardResult Model::forward(const TokenizedExample& example, const ForwardOptions& options) const {
  const Variant variant = config_.variant;
  const bool context_path = uses_context_matching(variant);
  const bool persona_path = uses_persona_matching(variant);
  const double rate = config_.dropout;
  auto drop = [&](const Tensor& x) {
    if (!options.training || rate == 0.0) return x;
    if (!options.rng) throw ContractError("training forward pass needs a random generator");
    return dropout(x, rate, true, *options.rng);
  };
  auto encode = [&](const TokenGrid& grid) {
    const Tensor mask({grid.rows, grid.words}, grid.word_mask);
    return drop(bilstm(drop(embed_words(grid, repr_)), mask, encoder_));
  };

  const std::size_t candidates = example.candidates.rows;
  MatchInputs in;
  in.responses = encode(example.candidates);
  in.response_mask = Tensor({candidates, example.candidates.words}, example.candidates.word_mask);
  if (context_path) {
    in.utterances = encode(example.context);
    in.utterance_mask = Tensor({example.context.rows, example.context.words}, example.context.word_mask);
  }
  Tensor profile_rows;
  if (persona_path) {
    if (example.persona.real_rows() == 0) {
      throw DegenerateError("variant " + to_string(variant) + " needs at least one persona profile");
    }
    in.profiles = encode(example.persona);
    in.profile_mask = Tensor({example.persona.rows, example.persona.words}, example.persona.word_mask);
    profile_rows = repeat_leading(Tensor({example.persona.rows}, example.persona.row_mask), candidates).detach();
  }

  ForwardResult out;
  out.matching = dim_match(in, context_path, persona_path);
  const DualMatchOutput& m = out.matching;
  const std::size_t h4 = 4 * config_.hidden_dim;

  Tensor utterance_embeddings;
  Tensor utterance_rows;
  if (context_path) {
    utterance_embeddings = reshape(
        aggregate_sequences(m.utterances, m.utterance_mask, aggregator_, rate, options.training, options.rng),
        {candidates, example.context.rows, h4});
    utterance_rows = repeat_leading(Tensor({example.context.rows}, example.context.row_mask), candidates).detach();
    out.response_embedding =
        aggregate_sequences(m.response, m.response_mask, aggregator_, rate, options.training, options.rng);
  }
  Tensor profile_embeddings;
  if (persona_path) {
    profile_embeddings = reshape(
        aggregate_sequences(m.profiles, m.profile_mask, aggregator_, rate, options.training, options.rng),
        {candidates, example.persona.rows, h4});
    out.response_star_embedding =
        aggregate_sequences(m.response_star, m.response_mask, aggregator_, rate, options.training, options.rng);
  }

  auto context_aggregate = [&](const Tensor& utterances) {
    return aggregate_context(utterances, utterance_rows, context_aggregator_, rate, options.training, options.rng);
  };

  switch (variant) {
    case Variant::imn:
    case Variant::dim_minus_persona:
      out.context_embedding = context_aggregate(utterance_embeddings);
      out.features = concat({out.context_embedding, out.response_embedding}, 1);
      break;
    case Variant::imn_ctx:
      out.context_embedding =
          fuse_context_level(context_aggregate(utterance_embeddings), profile_embeddings, profile_rows);
      out.features = concat({out.context_embedding, out.response_embedding}, 1);
      break;
    case Variant::imn_utr:
      out.context_embedding =
          context_aggregate(fuse_utterance_level(utterance_embeddings, profile_embeddings, profile_rows));
      out.features = concat({out.context_embedding, out.response_embedding}, 1);
      break;
    case Variant::dim:
    case Variant::dim_minus_context: {
      const PersonaAggregate persona = aggregate_persona(profile_embeddings, profile_rows, persona_attention_);
      out.persona_embedding = persona.embedding;
      out.persona_weights = persona.weights;
      if (variant == Variant::dim) {
        out.context_embedding = context_aggregate(utterance_embeddings);
        out.features = concat(
            {out.context_embedding, out.response_embedding, out.persona_embedding, out.response_star_embedding}, 1);
      } else {
        out.features = concat({out.persona_embedding, out.response_star_embedding}, 1);
      }
      break;
    }
  }
  out.logits = score(out.features, mlp_, rate, options.training, options.rng);
  return out;
}

Tensor Model::loss(const TokenizedExample& example, const ForwardOptions& options) const {
  return candidate_loss(forward(example, options).logits, example.positive_index);
}

}  // namespace dim
