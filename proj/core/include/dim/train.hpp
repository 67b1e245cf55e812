#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dim/model.hpp"
#include "dim/text.hpp"

namespace dim {

struct TrainConfig {
  ModelConfig model;
  SequenceLimits limits;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double lr_decay = 0.96;
  std::size_t lr_decay_steps = 5000;
  std::size_t max_epochs = 10;
  std::size_t max_steps = 0;  // 0: no step cap
  std::uint64_t seed = 1;
  std::size_t min_count = 1;
  PersonaSide persona_side = PersonaSide::self;
  PersonaVersion persona_version = PersonaVersion::original;

  /// Applies one key=value setting; unknown keys and malformed values throw
  /// ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Parses "key=value" lines; blank lines and '#' comments are ignored.
  void apply(const std::string& text);
  std::string to_key_values() const;
  void validate() const;
};

/// Staircase decay: lr0 * decay^floor(step / decay_steps).
double lr_schedule(const TrainConfig& config, std::uint64_t step);

struct EvalReport {
  double hits_at_1 = 0.0;
  double mrr = 0.0;
  std::vector<std::size_t> ranks;  // 1-based rank of the true response, per example
  std::size_t count = 0;
};

/// 1 + number of other candidates scoring at least as high as the positive
/// (ties count against the positive).
std::size_t rank_of_positive(std::span<const double> scores, std::size_t positive);

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::size_t>& positives);

/// Scores every candidate with dropout disabled and ranks the true response.
EvalReport evaluate(const Model& model, const std::vector<TokenizedExample>& examples);

struct TrainLogEntry {
  enum class Kind { step, epoch } kind = Kind::step;
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> dev_hits_at_1;
  std::optional<double> dev_mrr;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  std::uint64_t steps = 0;
  std::size_t best_epoch = 0;
  double best_dev_hits_at_1 = -1.0;
};

using TrainLogger = std::function<void(const TrainLogEntry&)>;

/// Mini-batch Adam on the mean candidate cross-entropy. After every epoch the
/// dev set (if non-empty) is evaluated and the parameters with the best dev
/// hits@1 are kept; on return the model holds those parameters. A non-finite
/// loss aborts with a NumericError naming the step and batch.
TrainResult train(Model& model, const TrainConfig& config, const std::vector<TokenizedExample>& train_set,
                  const std::vector<TokenizedExample>& dev_set, const TrainLogger& logger = {});

std::vector<TokenizedExample> tokenize_all(const std::vector<DialogueExample>& examples, const Vocab& vocab,
                                           const SequenceLimits& limits);

struct Corpora {
  std::vector<DialogueExample> train;
  std::vector<DialogueExample> dev;
  std::vector<DialogueExample> test;
};

struct EmbeddingSources {
  std::optional<std::filesystem::path> pretrained;
  std::optional<std::filesystem::path> task;
};

/// Builds a model for `config` and `vocab`, loading embedding tables when given.
Model build_model(const TrainConfig& config, const Vocab& vocab, const EmbeddingSources& sources);

struct ExperimentResult {
  Vocab vocab;
  Model model;
  TrainResult training;
  EvalReport test;
};

/// Vocabulary from the training split, training with dev selection, then
/// evaluation on the test split (dev when no test split is given).
ExperimentResult run_experiment(const TrainConfig& config, const Corpora& corpora,
                                const EmbeddingSources& sources = {}, const TrainLogger& logger = {});

struct AblationReports {
  EvalReport without_persona;  // feature [c^agr; r^agr]
  EvalReport without_context;  // feature [p^agr; r^agr*]
};

AblationReports ablate(const TrainConfig& config, const Corpora& corpora, const EmbeddingSources& sources = {});

/// cells[train][test], index 0 = original personas, 1 = revised personas.
struct TransferGrid {
  EvalReport cells[2][2];
};

TransferGrid transfer_eval(const TrainConfig& config, const Corpora& original, const Corpora& revised,
                           const EmbeddingSources& sources = {});

}  // namespace dim
