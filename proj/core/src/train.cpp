#include "dim/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dim/error.hpp"
#include "dim/optim.hpp"

namespace dim {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto& e = model.embedding;
  if (key == "variant") model.variant = parse_variant(value);
  else if (key == "persona_side") persona_side = parse_persona_side(value);
  else if (key == "persona_version") persona_version = parse_persona_version(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "batch_size") batch_size = parse_number<std::size_t>(key, value);
  else if (key == "lr") learning_rate = parse_number<double>(key, value);
  else if (key == "lr_decay") lr_decay = parse_number<double>(key, value);
  else if (key == "lr_decay_steps") lr_decay_steps = parse_number<std::size_t>(key, value);
  else if (key == "epochs") max_epochs = parse_number<std::size_t>(key, value);
  else if (key == "max_steps") max_steps = parse_number<std::size_t>(key, value);
  else if (key == "min_count") min_count = parse_number<std::size_t>(key, value);
  else if (key == "dropout") model.dropout = parse_number<double>(key, value);
  else if (key == "hidden_dim") model.hidden_dim = parse_number<std::size_t>(key, value);
  else if (key == "mlp_hidden") model.mlp_hidden = parse_number<std::size_t>(key, value);
  else if (key == "pretrained_dim") e.pretrained_dim = parse_number<std::size_t>(key, value);
  else if (key == "task_dim") e.task_dim = parse_number<std::size_t>(key, value);
  else if (key == "char_embed_dim") e.char_embed_dim = parse_number<std::size_t>(key, value);
  else if (key == "char_filters") e.char_filters_per_window = parse_number<std::size_t>(key, value);
  else if (key == "char_windows") e.char_windows = parse_list(key, value);
  else if (key == "freeze_pretrained") e.freeze_pretrained = parse_bool(key, value);
  else if (key == "freeze_task") e.freeze_task = parse_bool(key, value);
  else if (key == "max_chars") limits.max_chars = parse_number<std::size_t>(key, value);
  else if (key == "max_utterance_words") limits.max_utterance_words = parse_number<std::size_t>(key, value);
  else if (key == "max_utterances") limits.max_utterances = parse_number<std::size_t>(key, value);
  else if (key == "max_response_words") limits.max_response_words = parse_number<std::size_t>(key, value);
  else if (key == "max_profile_words") limits.max_profile_words = parse_number<std::size_t>(key, value);
  else if (key == "max_profiles") limits.max_profiles = parse_number<std::size_t>(key, value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

void TrainConfig::apply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

std::string TrainConfig::to_key_values() const {
  const auto& e = model.embedding;
  std::ostringstream os;
  std::string windows;
  for (std::size_t i = 0; i < e.char_windows.size(); ++i) {
    windows += (i ? "," : "") + std::to_string(e.char_windows[i]);
  }
  os << "variant=" << to_string(model.variant) << '\n'
     << "persona_side=" << to_string(persona_side) << '\n'
     << "persona_version=" << to_string(persona_version) << '\n'
     << "seed=" << seed << '\n'
     << "batch_size=" << batch_size << '\n'
     << "lr=" << format_double(learning_rate) << '\n'
     << "lr_decay=" << format_double(lr_decay) << '\n'
     << "lr_decay_steps=" << lr_decay_steps << '\n'
     << "epochs=" << max_epochs << '\n'
     << "max_steps=" << max_steps << '\n'
     << "min_count=" << min_count << '\n'
     << "dropout=" << format_double(model.dropout) << '\n'
     << "hidden_dim=" << model.hidden_dim << '\n'
     << "mlp_hidden=" << model.mlp_hidden << '\n'
     << "pretrained_dim=" << e.pretrained_dim << '\n'
     << "task_dim=" << e.task_dim << '\n'
     << "char_embed_dim=" << e.char_embed_dim << '\n'
     << "char_filters=" << e.char_filters_per_window << '\n'
     << "char_windows=" << windows << '\n'
     << "freeze_pretrained=" << (e.freeze_pretrained ? 1 : 0) << '\n'
     << "freeze_task=" << (e.freeze_task ? 1 : 0) << '\n'
     << "max_chars=" << limits.max_chars << '\n'
     << "max_utterance_words=" << limits.max_utterance_words << '\n'
     << "max_utterances=" << limits.max_utterances << '\n'
     << "max_response_words=" << limits.max_response_words << '\n'
     << "max_profile_words=" << limits.max_profile_words << '\n'
     << "max_profiles=" << limits.max_profiles << '\n';
  return os.str();
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("lr must be positive");
  if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be positive");
  if (lr_decay_steps == 0) throw ConfigError("lr_decay_steps must be positive");
  if (max_epochs == 0) throw ConfigError("epochs must be positive");
  if (min_count == 0) throw ConfigError("min_count must be positive");
  if (!(model.dropout >= 0.0) || model.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (limits.max_chars == 0 || limits.max_utterance_words == 0 || limits.max_utterances == 0 ||
      limits.max_response_words == 0 || limits.max_profile_words == 0 || limits.max_profiles == 0) {
    throw ConfigError("sequence limits must be positive");
  }
  if (persona_side == PersonaSide::none && model.variant != Variant::imn) {
    throw ConfigError("persona side 'none' requires variant IMN");
  }
}

double lr_schedule(const TrainConfig& config, std::uint64_t step) {
  const auto buckets = static_cast<double>(step / config.lr_decay_steps);
  return config.learning_rate * std::pow(config.lr_decay, buckets);
}

std::size_t rank_of_positive(std::span<const double> scores, std::size_t positive) {
  if (positive >= scores.size()) throw IndexError("positive index outside the candidate list");
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j != positive && scores[j] >= scores[positive]) ++rank;
  }
  return rank;
}

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::size_t>& positives) {
  if (scores.size() != positives.size()) throw DimensionError("one positive index per score list required");
  EvalReport r;
  r.count = scores.size();
  double hits = 0.0;
  double reciprocal = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t rank = rank_of_positive(scores[i], positives[i]);
    r.ranks.push_back(rank);
    if (rank == 1) hits += 1.0;
    reciprocal += 1.0 / static_cast<double>(rank);
  }
  if (r.count > 0) {
    r.hits_at_1 = hits / static_cast<double>(r.count);
    r.mrr = reciprocal / static_cast<double>(r.count);
  }
  return r;
}

EvalReport evaluate(const Model& model, const std::vector<TokenizedExample>& examples) {
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> positives;
  for (const auto& ex : examples) {
    const Tensor logits = model.forward(ex).logits.detach();
    scores.emplace_back(logits.data().begin(), logits.data().end());
    positives.push_back(ex.positive_index);
  }
  return report_from_scores(scores, positives);
}

std::vector<TokenizedExample> tokenize_all(const std::vector<DialogueExample>& examples, const Vocab& vocab,
                                           const SequenceLimits& limits) {
  std::vector<TokenizedExample> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) out.push_back(tokenize_example(examples[i], vocab, limits, i));
  return out;
}

TrainResult train(Model& model, const TrainConfig& config, const std::vector<TokenizedExample>& train_set,
                  const std::vector<TokenizedExample>& dev_set, const TrainLogger& logger) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  ParamSet& params = model.params();
  AdamState state(params);
  Rng shuffle_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  auto emit = [&](const TrainLogEntry& entry) {
    result.log.push_back(entry);
    if (logger) logger(entry);
  };

  std::vector<std::vector<double>> best;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  bool capped = false;
  for (std::size_t epoch = 1; epoch <= config.max_epochs && !capped; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_id) {
      if (config.max_steps && result.steps >= config.max_steps) {
        capped = true;
        break;
      }
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double lr = lr_schedule(config, result.steps);
      double loss_value = 0.0;
      try {
        params.zero_grad();
        std::vector<Tensor> losses;
        for (std::size_t i = start; i < end; ++i) {
          losses.push_back(model.loss(train_set[order[i]], {true, &dropout_rng}));
        }
        const Tensor loss = mean(concat(losses, 0));
        loss_value = loss.item();
        loss.backward();
        adam_step(params, state, lr);
      } catch (const NumericError& e) {
        throw NumericError("training aborted at step " + std::to_string(result.steps) + ", epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch_id) + ": " + e.what());
      }
      TrainLogEntry entry;
      entry.kind = TrainLogEntry::Kind::step;
      entry.step = result.steps;
      entry.epoch = epoch;
      entry.loss = loss_value;
      entry.lr = lr;
      emit(entry);
      ++result.steps;
    }
    if (!dev_set.empty()) {
      const EvalReport dev = evaluate(model, dev_set);
      TrainLogEntry entry;
      entry.kind = TrainLogEntry::Kind::epoch;
      entry.step = result.steps;
      entry.epoch = epoch;
      entry.lr = lr_schedule(config, result.steps);
      entry.dev_hits_at_1 = dev.hits_at_1;
      entry.dev_mrr = dev.mrr;
      emit(entry);
      if (dev.hits_at_1 > result.best_dev_hits_at_1) {
        result.best_dev_hits_at_1 = dev.hits_at_1;
        result.best_epoch = epoch;
        best.clear();
        for (const auto& p : params.entries()) best.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
      }
    }
  }
  if (!best.empty()) {
    auto& entries = params.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto dst = entries[i].tensor.mutable_data();
      std::copy(best[i].begin(), best[i].end(), dst.begin());
    }
  }
  return result;
}

Model build_model(const TrainConfig& config, const Vocab& vocab, const EmbeddingSources& sources) {
  config.validate();
  Model model(config.model, vocab.size(), vocab.char_size(), config.seed);
  Rng rng(config.seed + 1);
  if (sources.pretrained) {
    model.set_pretrained_table(
        load_pretrained(*sources.pretrained, vocab, config.model.embedding.pretrained_dim, rng));
  }
  if (sources.task) {
    model.set_task_table(load_pretrained(*sources.task, vocab, config.model.embedding.task_dim, rng), true);
  }
  return model;
}

ExperimentResult run_experiment(const TrainConfig& config, const Corpora& corpora, const EmbeddingSources& sources,
                                const TrainLogger& logger) {
  if (corpora.train.empty()) throw DataError("training corpus is empty");
  Vocab vocab = build_vocab(corpora.train, config.min_count);
  Model model = build_model(config, vocab, sources);
  const auto train_set = tokenize_all(corpora.train, vocab, config.limits);
  const auto dev_set = tokenize_all(corpora.dev, vocab, config.limits);
  TrainResult training = train(model, config, train_set, dev_set, logger);
  const auto& held_out = !corpora.test.empty() ? corpora.test : corpora.dev;
  EvalReport test = evaluate(model, tokenize_all(held_out.empty() ? corpora.train : held_out, vocab, config.limits));
  return ExperimentResult{std::move(vocab), std::move(model), std::move(training), std::move(test)};
}

AblationReports ablate(const TrainConfig& config, const Corpora& corpora, const EmbeddingSources& sources) {
  AblationReports out;
  TrainConfig reduced = config;
  reduced.model.variant = Variant::dim_minus_persona;
  out.without_persona = run_experiment(reduced, corpora, sources).test;
  reduced.model.variant = Variant::dim_minus_context;
  out.without_context = run_experiment(reduced, corpora, sources).test;
  return out;
}

TransferGrid transfer_eval(const TrainConfig& config, const Corpora& original, const Corpora& revised,
                           const EmbeddingSources& sources) {
  const Corpora* sets[2] = {&original, &revised};
  for (const Corpora* c : sets) {
    if (c->train.empty() || c->test.empty()) throw DataError("transfer needs train and test splits for both persona versions");
  }
  TransferGrid grid;
  for (int from = 0; from < 2; ++from) {
    TrainConfig cfg = config;
    cfg.persona_version = from == 0 ? PersonaVersion::original : PersonaVersion::revised;
    ExperimentResult run = run_experiment(cfg, *sets[from], sources);
    for (int to = 0; to < 2; ++to) {
      grid.cells[from][to] = to == from ? run.test
                                        : evaluate(run.model, tokenize_all(sets[to]->test, run.vocab, cfg.limits));
    }
  }
  return grid;
}

}  // namespace dim
