#include <gtest/gtest.h>

#include <cmath>

#include "dim/error.hpp"
#include "dim/grad_check.hpp"
#include "dim/model.hpp"
#include "support.hpp"

using namespace dim;
using dim::testing::micro_config;
using dim::testing::toy_corpus;
using dim::testing::model_grad_check;
using dim::testing::ModelGradReport;

namespace {

struct Fixture {
  TrainConfig config;
  Vocab vocab;
  std::vector<TokenizedExample> examples;

  explicit Fixture(Variant v = Variant::dim) : config(micro_config(v)) {
    const auto corpus = toy_corpus();
    vocab = build_vocab(corpus, 1);
    examples = tokenize_all(corpus, vocab, config.limits);
  }
  Model model(std::uint64_t seed = 3) const { return Model(config.model, vocab.size(), vocab.char_size(), seed); }
};

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Variant, NamesRoundTrip) {
  for (const char* name : {"IMN", "IMN_ctx", "IMN_utr", "DIM", "DIM-persona", "DIM-context"}) {
    EXPECT_EQ(to_string(parse_variant(name)), name);
  }
  EXPECT_THROW(parse_variant("DIM+"), ConfigError);
  EXPECT_FALSE(uses_persona_matching(Variant::imn));
  EXPECT_FALSE(uses_persona_matching(Variant::dim_minus_persona));
  EXPECT_FALSE(uses_context_matching(Variant::dim_minus_context));
  EXPECT_TRUE(uses_persona_attention(Variant::dim));
}

TEST(Model, EveryVariantScoresEachCandidate) {
  for (Variant v : {Variant::imn, Variant::imn_ctx, Variant::imn_utr, Variant::dim, Variant::dim_minus_persona,
                    Variant::dim_minus_context}) {
    Fixture f(v);
    const Model m = f.model();
    for (const auto& ex : f.examples) {
      const ForwardResult r = m.forward(ex);
      ASSERT_EQ(r.logits.shape(), (Shape{3})) << to_string(v);
      EXPECT_EQ(r.features.extent(1), f.config.model.feature_dim()) << to_string(v);
    }
  }
  EXPECT_EQ(micro_config(Variant::dim).model.feature_dim(), 64u);
  EXPECT_EQ(micro_config(Variant::dim_minus_context).model.feature_dim(), 32u);
}

TEST(Model, PersonaAttentionWeightsFormADistribution) {
  Fixture f;
  f.config.limits.max_profiles = 4;
  f.examples = tokenize_all(toy_corpus(), f.vocab, f.config.limits);
  const ForwardResult r = f.model().forward(f.examples[0]);
  ASSERT_EQ(r.persona_weights.shape(), (Shape{3, 4}));
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(r.persona_weights.at({c, 0}) + r.persona_weights.at({c, 1}), 1.0, 1e-12);
    EXPECT_EQ(r.persona_weights.at({c, 2}), 0.0);
    EXPECT_EQ(r.persona_weights.at({c, 3}), 0.0);
  }
}

TEST(Model, WithoutPersonaIgnoresPersonaInput) {
  Fixture f(Variant::dim_minus_persona);
  const Model m = f.model();
  TokenizedExample ex = f.examples[0];
  const auto base = values(m.forward(ex).logits);
  ex.persona = tokenize_example(toy_corpus()[1], f.vocab, f.config.limits).persona;
  EXPECT_EQ(values(m.forward(ex).logits), base);
  ex.persona.row_mask.assign(ex.persona.rows, 0.0);
  ex.persona.word_mask.assign(ex.persona.word_mask.size(), 0.0);
  EXPECT_EQ(values(m.forward(ex).logits), base);
}

TEST(Model, WithoutPersonaEqualsPlainMatchingModel) {
  Fixture reduced(Variant::dim_minus_persona), plain(Variant::imn);
  const Model a = reduced.model(11), b = plain.model(11);
  ASSERT_EQ(a.params().size(), b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params().entries()[i].name, b.params().entries()[i].name);
    EXPECT_EQ(values(a.params().entries()[i].tensor), values(b.params().entries()[i].tensor));
  }
  for (std::size_t e = 0; e < reduced.examples.size(); ++e) {
    const ForwardResult ra = a.forward(reduced.examples[e]), rb = b.forward(plain.examples[e]);
    EXPECT_EQ(values(ra.features), values(rb.features));
    EXPECT_EQ(values(ra.logits), values(rb.logits));
  }
}

TEST(Model, WithoutContextIgnoresContextInput) {
  Fixture f(Variant::dim_minus_context);
  const Model m = f.model();
  TokenizedExample ex = f.examples[0];
  const auto base = values(m.forward(ex).logits);
  ex.context = f.examples[1].context;
  EXPECT_EQ(values(m.forward(ex).logits), base);
}

TEST(Model, FullModelPathsAreIndependent) {
  Fixture f;
  const Model m = f.model();
  const ForwardResult base = m.forward(f.examples[0]);

  TokenizedExample other_context = f.examples[0];
  other_context.context = f.examples[1].context;
  const ForwardResult c = m.forward(other_context);
  EXPECT_EQ(values(c.persona_embedding), values(base.persona_embedding));
  EXPECT_EQ(values(c.response_star_embedding), values(base.response_star_embedding));
  EXPECT_EQ(values(c.persona_weights), values(base.persona_weights));
  EXPECT_NE(values(c.context_embedding), values(base.context_embedding));

  TokenizedExample other_persona = f.examples[0];
  other_persona.persona = f.examples[1].persona;
  const ForwardResult p = m.forward(other_persona);
  EXPECT_EQ(values(p.context_embedding), values(base.context_embedding));
  EXPECT_EQ(values(p.response_embedding), values(base.response_embedding));
  EXPECT_NE(values(p.persona_embedding), values(base.persona_embedding));
}

TEST(Model, PersonaChangesFullModelScores) {
  Fixture f;
  const Model m = f.model();
  TokenizedExample ex = f.examples[0];
  const auto base = values(m.forward(ex).logits);
  ex.persona = f.examples[1].persona;
  EXPECT_NE(values(m.forward(ex).logits), base);
}

TEST(Model, InitialLossNearUniform) {
  Fixture f;
  const Model m = f.model();
  for (const auto& ex : f.examples) {
    EXPECT_NEAR(m.loss(ex).item(), std::log(3.0), 0.1 * std::log(3.0));
  }
}

TEST(Model, TrainingModeNeedsGeneratorAndIsSeeded) {
  Fixture f;
  f.config.model.dropout = 0.3;
  const Model m = f.model();
  EXPECT_THROW(m.forward(f.examples[0], {true, nullptr}), ContractError);
  Rng r1(5), r2(5);
  EXPECT_EQ(values(m.forward(f.examples[0], {true, &r1}).logits), values(m.forward(f.examples[0], {true, &r2}).logits));
  EXPECT_EQ(values(m.forward(f.examples[0]).logits), values(m.forward(f.examples[0]).logits));
}

TEST(Model, MissingPersonaIsDegenerateForPersonaVariants) {
  Fixture f;
  TokenizedExample ex = f.examples[0];
  ex.persona.row_mask.assign(ex.persona.rows, 0.0);
  ex.persona.word_mask.assign(ex.persona.word_mask.size(), 0.0);
  EXPECT_THROW(f.model().forward(ex), DegenerateError);
}

TEST(Model, EndToEndGradientsEveryParameter) {
  for (Variant v : {Variant::dim, Variant::imn_utr, Variant::imn_ctx}) {
    Fixture f(v);
    Model m = f.model(1);
    const ModelGradReport r = model_grad_check(m, f.examples[0]);
    EXPECT_TRUE(r.ok(1e-4)) << to_string(v) << ": " << r.worst_relative << " at " << r.worst_tensor
                            << ", zero-gradient norm " << r.worst_zero_norm;
    EXPECT_GE(r.live_tensors, m.params().entries().size() - 4) << to_string(v);
  }
}

TEST(Model, FullScaleShapes) {
  TrainConfig c;
  c.limits.max_utterances = 2;
  c.limits.max_utterance_words = 4;
  c.limits.max_profiles = 2;
  c.limits.max_profile_words = 4;
  c.limits.max_response_words = 4;
  const auto corpus = toy_corpus();
  const Vocab vocab = build_vocab(corpus, 1);
  const Model m(c.model, vocab.size(), vocab.char_size(), 1);
  EXPECT_EQ(c.model.embedding.word_dim(), 550u);
  EXPECT_EQ(m.encoder().output_dim(), 400u);
  EXPECT_EQ(m.aggregator().input_dim, 1600u);
  const ForwardResult r = m.forward(tokenize_example(corpus[0], vocab, c.limits));
  EXPECT_EQ(r.matching.response.extent(2), 1600u);
  EXPECT_EQ(r.response_embedding.extent(1), 800u);
  EXPECT_EQ(r.features.extent(1), 3200u);
  EXPECT_EQ(m.params().get("mlp.w1").shape(), (Shape{3200, 256}));
}
