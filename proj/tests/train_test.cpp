#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dim/checkpoint.hpp"
#include "dim/error.hpp"
#include "dim/train.hpp"
#include "support.hpp"

using namespace dim;
using dim::testing::data_path;
using dim::testing::micro_config;

namespace {

// Rank by sorting candidates, placing the positive after any equal scores.
std::size_t sorted_rank(const std::vector<double>& s, std::size_t pos) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return (a != pos) && (b == pos);
  });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), pos) - order.begin()) + 1;
}

Corpora fixture_corpora(PersonaVersion version = PersonaVersion::original) {
  const std::string v = version == PersonaVersion::original ? "original" : "revised";
  Corpora c;
  c.train = load_corpus(data_path("train_self_" + v + ".txt"), PersonaSide::self, version);
  c.dev = load_corpus(data_path("valid_self_" + v + ".txt"), PersonaSide::self, version);
  c.test = load_corpus(data_path("test_self_" + v + ".txt"), PersonaSide::self, version);
  return c;
}

std::string checkpoint_bytes(const Model& m) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, "", m.params());
  return out.str();
}

}  // namespace

TEST(Metrics, HandComputedCases) {
  const EvalReport best = report_from_scores({{3, 1, 2}, {0, 5}}, {0, 1});
  EXPECT_EQ(best.hits_at_1, 1.0);
  EXPECT_EQ(best.mrr, 1.0);
  const EvalReport second = report_from_scores({{3, 1, 2}, {1, 0, 9}}, {2, 0});
  EXPECT_EQ(second.hits_at_1, 0.0);
  EXPECT_EQ(second.mrr, 0.5);
  EXPECT_EQ(second.ranks, (std::vector<std::size_t>{2, 2}));
  // Ties count against the positive.
  EXPECT_EQ(rank_of_positive(std::vector<double>{1, 1, 1}, 0), 3u);
  EXPECT_THROW(rank_of_positive(std::vector<double>{1, 2}, 2), IndexError);
  EXPECT_THROW(report_from_scores({{1, 2}}, {}), DimensionError);
}

TEST(Metrics, AgreeWithSortOracleAndBounds) {
  Rng rng(1);
  std::uniform_int_distribution<int> level(0, 4);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> pos;
  for (int i = 0; i < 500; ++i) {
    const std::size_t c = size(rng);
    std::vector<double> s(c);
    for (auto& v : s) v = level(rng);  // coarse levels force ties
    scores.push_back(s);
    pos.push_back(std::uniform_int_distribution<std::size_t>(0, c - 1)(rng));
  }
  const EvalReport r = report_from_scores(scores, pos);
  double hits = 0, rr = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t k = sorted_rank(scores[i], pos[i]);
    EXPECT_EQ(r.ranks[i], k);
    hits += k == 1;
    rr += 1.0 / k;
  }
  EXPECT_DOUBLE_EQ(r.hits_at_1, hits / 500);
  EXPECT_DOUBLE_EQ(r.mrr, rr / 500);
  EXPECT_LE(r.hits_at_1, r.mrr);
  EXPECT_LE(r.mrr, 1.0);
  EXPECT_EQ(r.count, 500u);
}

TEST(Metrics, InvariantToCandidatePermutation) {
  Rng rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s(8);
    for (auto& v : s) v = n(rng);
    const std::size_t pos = i % 8;
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled(8);
    std::size_t new_pos = 0;
    for (std::size_t k = 0; k < 8; ++k) {
      shuffled[k] = s[perm[k]];
      if (perm[k] == pos) new_pos = k;
    }
    EXPECT_EQ(rank_of_positive(s, pos), rank_of_positive(shuffled, new_pos));
  }
}

TEST(Config, KeyValueRoundTripAndPrecedence) {
  TrainConfig c;
  c.apply("# comment\nvariant = DIM-context\nlr=0.002\nchar_windows=2,4\n\nfreeze_pretrained=false\nseed=42\n");
  EXPECT_EQ(c.model.variant, Variant::dim_minus_context);
  EXPECT_EQ(c.learning_rate, 0.002);
  EXPECT_EQ(c.model.embedding.char_windows, (std::vector<std::size_t>{2, 4}));
  EXPECT_FALSE(c.model.embedding.freeze_pretrained);
  c.set("lr", "0.1");
  EXPECT_EQ(c.learning_rate, 0.1);
  TrainConfig back;
  back.apply(c.to_key_values());
  EXPECT_EQ(back.to_key_values(), c.to_key_values());
  EXPECT_EQ(back.seed, 42u);
}

TEST(Config, RejectsInvalidSettings) {
  TrainConfig c;
  EXPECT_THROW(c.set("nonsense", "1"), ConfigError);
  EXPECT_THROW(c.set("batch_size", "-3"), ConfigError);
  EXPECT_THROW(c.set("lr", "fast"), ConfigError);
  EXPECT_THROW(c.apply("lr 0.1\n"), ConfigError);
  EXPECT_THROW(c.set("freeze_task", "maybe"), ConfigError);
  TrainConfig z;
  z.batch_size = 0;
  EXPECT_THROW(z.validate(), ConfigError);
  TrainConfig d;
  d.model.dropout = 1.0;
  EXPECT_THROW(d.validate(), ConfigError);
  TrainConfig n;
  n.persona_side = PersonaSide::none;
  EXPECT_THROW(n.validate(), ConfigError);
  n.model.variant = Variant::imn;
  EXPECT_NO_THROW(n.validate());
}

TEST(Training, DeterministicUnderFixedSeed) {
  const TrainConfig config = [] {
    TrainConfig c = micro_config();
    c.model.dropout = 0.2;
    c.max_epochs = 2;
    return c;
  }();
  const Corpora corpora = fixture_corpora();
  const ExperimentResult a = run_experiment(config, corpora);
  const ExperimentResult b = run_experiment(config, corpora);
  ASSERT_EQ(a.training.log.size(), b.training.log.size());
  for (std::size_t i = 0; i < a.training.log.size(); ++i) {
    EXPECT_EQ(a.training.log[i].loss, b.training.log[i].loss);
    EXPECT_EQ(a.training.log[i].dev_hits_at_1, b.training.log[i].dev_hits_at_1);
    EXPECT_EQ(a.training.log[i].dev_mrr, b.training.log[i].dev_mrr);
  }
  EXPECT_EQ(checkpoint_bytes(a.model), checkpoint_bytes(b.model));
  EXPECT_EQ(a.test.ranks, b.test.ranks);
}

TEST(Training, LogsStepsEpochsAndSchedule) {
  TrainConfig config = micro_config();
  config.lr_decay_steps = 2;
  config.max_epochs = 2;
  const Corpora corpora = fixture_corpora();
  const ExperimentResult r = run_experiment(config, corpora);
  const std::size_t per_epoch = (corpora.train.size() + config.batch_size - 1) / config.batch_size;
  EXPECT_EQ(r.training.steps, 2 * per_epoch);
  std::size_t epochs = 0;
  for (const auto& e : r.training.log) {
    if (e.kind == TrainLogEntry::Kind::epoch) {
      ++epochs;
      EXPECT_TRUE(e.dev_hits_at_1.has_value());
    } else {
      EXPECT_DOUBLE_EQ(e.lr, lr_schedule(config, e.step));
      EXPECT_TRUE(std::isfinite(e.loss));
    }
  }
  EXPECT_EQ(epochs, 2u);
  EXPECT_GE(r.training.best_epoch, 1u);
  // First step loss is near ln C.
  EXPECT_NEAR(r.training.log.front().loss, std::log(5.0), 0.1 * std::log(5.0));
}

TEST(Training, StepCapAndBestDevSelection) {
  TrainConfig config = micro_config();
  config.max_steps = 3;
  config.max_epochs = 50;
  const Corpora corpora = fixture_corpora();
  const Vocab vocab = build_vocab(corpora.train, 1);
  Model model = build_model(config, vocab, {});
  const auto train_set = tokenize_all(corpora.train, vocab, config.limits);
  const auto dev_set = tokenize_all(corpora.dev, vocab, config.limits);
  const TrainResult r = train(model, config, train_set, dev_set);
  EXPECT_EQ(r.steps, 3u);
  // The model on return scores the best recorded dev hits@1.
  EXPECT_EQ(evaluate(model, dev_set).hits_at_1, r.best_dev_hits_at_1);
  EXPECT_THROW(train(model, config, {}, dev_set), DataError);
}

TEST(Training, NonFiniteLossAbortsWithLocation) {
  TrainConfig config = micro_config();
  const Corpora corpora = fixture_corpora();
  const Vocab vocab = build_vocab(corpora.train, 1);
  Model model = build_model(config, vocab, {});
  for (double& v : model.params().find("mlp.w2")->mutable_data()) v = 1e305;
  for (double& v : model.params().find("mlp.b1")->mutable_data()) v = 1e5;
  const auto train_set = tokenize_all(corpora.train, vocab, config.limits);
  try {
    train(model, config, train_set, {});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 0"), std::string::npos) << msg;
  }
}

TEST(Evaluation, BitReproducible) {
  const TrainConfig config = micro_config();
  const Corpora corpora = fixture_corpora();
  const Vocab vocab = build_vocab(corpora.train, 1);
  const Model model = build_model(config, vocab, {});
  const auto test = tokenize_all(corpora.test, vocab, config.limits);
  const EvalReport a = evaluate(model, test), b = evaluate(model, test);
  EXPECT_EQ(a.ranks, b.ranks);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a.mrr), std::bit_cast<std::uint64_t>(b.mrr));
}

TEST(Evaluation, UntrainedModelNearChance) {
  // 5 candidates: hits@1 ~ Binomial(n, 0.2)/n; check the 3-sigma band over
  // many untrained seeds pooled together.
  TrainConfig config = micro_config();
  const Corpora corpora = fixture_corpora();
  const Vocab vocab = build_vocab(corpora.train, 1);
  const auto all = tokenize_all(corpora.train, vocab, config.limits);
  double hits = 0;
  std::size_t n = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    config.seed = seed;
    const EvalReport r = evaluate(build_model(config, vocab, {}), all);
    hits += r.hits_at_1 * r.count;
    n += r.count;
  }
  const double p = 0.2, sd = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(hits / n, p, 3 * sd + 0.05);
}

TEST(Training, OverfitsTinyCorpus) {
  TrainConfig config = micro_config();
  config.learning_rate = 0.01;
  config.batch_size = 8;
  config.max_epochs = 300;
  std::vector<DialogueExample> examples = fixture_corpora().train;
  examples.resize(8);
  const Vocab vocab = build_vocab(examples, 1);
  Model model = build_model(config, vocab, {});
  const auto set = tokenize_all(examples, vocab, config.limits);
  const TrainResult r = train(model, config, set, {});
  EXPECT_LE(r.steps, 300u);
  EXPECT_EQ(evaluate(model, set).hits_at_1, 1.0);
  EXPECT_LT(r.log.back().loss, 0.05);
}

TEST(Experiments, AblationAndTransferProduceReports) {
  TrainConfig config = micro_config();
  config.max_epochs = 1;
  const Corpora original = fixture_corpora(PersonaVersion::original);
  const Corpora revised = fixture_corpora(PersonaVersion::revised);
  const AblationReports ab = ablate(config, original);
  EXPECT_EQ(ab.without_persona.count, original.test.size());
  EXPECT_EQ(ab.without_context.count, original.test.size());

  const TransferGrid grid = transfer_eval(config, original, revised);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_EQ(grid.cells[i][j].count, original.test.size());
  // Same-version cells equal a plain experiment.
  TrainConfig rev = config;
  rev.persona_version = PersonaVersion::revised;
  EXPECT_EQ(grid.cells[1][1].ranks, run_experiment(rev, revised).test.ranks);
  EXPECT_EQ(grid.cells[0][0].ranks, run_experiment(config, original).test.ranks);

  Corpora missing = revised;
  missing.test.clear();
  EXPECT_THROW(transfer_eval(config, original, missing), DataError);
}
