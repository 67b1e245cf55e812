#include "dim/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dim/checkpoint.hpp"
#include "dim/error.hpp"
#include "dim/train.hpp"

namespace dim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::optional<std::string> train_file, dev_file, test_file, embeddings, vocab, checkpoint, output_dir, config;
  std::optional<std::string> variant, persona_side, persona_version, seed, batch_size, lr, epochs, hidden_dim,
      embed_dims;
  std::optional<std::size_t> example_id;
};

const char* const kCheckpointName = "checkpoint.dimc";
const char* const kVocabName = "vocab.txt";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

fs::path require_path(const std::optional<std::string>& value, const char* flag, const std::string& command) {
  if (!value) throw UsageError("command '" + command + "' requires " + flag);
  return fs::path(*value);
}

fs::path require_existing(const std::optional<std::string>& value, const char* flag, const std::string& command) {
  fs::path p = require_path(value, flag, command);
  if (!fs::exists(p)) throw DataError(std::string(flag) + ": no such file " + p.string());
  return p;
}

fs::path output_dir(const Options& o) {
  fs::path dir = require_path(o.output_dir, "--output-dir", o.command);
  fs::create_directories(dir);
  return dir;
}

// Defaults, then the --config file, then individual flags.
TrainConfig resolve_config(const Options& o, TrainConfig config = {}) {
  if (o.config) config.apply(read_text(*o.config));
  auto apply = [&](const std::optional<std::string>& v, const char* key) {
    if (v) config.set(key, *v);
  };
  apply(o.variant, "variant");
  apply(o.persona_side, "persona_side");
  apply(o.persona_version, "persona_version");
  apply(o.seed, "seed");
  apply(o.batch_size, "batch_size");
  apply(o.lr, "lr");
  apply(o.epochs, "epochs");
  apply(o.hidden_dim, "hidden_dim");
  if (o.embed_dims) {
    std::vector<std::string> parts;
    std::stringstream ss(*o.embed_dims);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("--embed-dims expects pretrained,task,char_filters");
    config.set("pretrained_dim", parts[0]);
    config.set("task_dim", parts[1]);
    config.set("char_filters", parts[2]);
  }
  if (config.persona_side == PersonaSide::none) config.model.variant = Variant::imn;
  config.validate();
  return config;
}

std::vector<DialogueExample> load(const fs::path& path, const TrainConfig& config) {
  return load_corpus(path, config.persona_side, config.persona_version);
}

std::vector<DialogueExample> load_optional(const std::optional<std::string>& path, const char* flag,
                                           const std::string& command, const TrainConfig& config) {
  if (!path) return {};
  return load(require_existing(path, flag, command), config);
}

std::string checkpoint_config(const TrainConfig& config, const Model& model) {
  return config.to_key_values() + "vocab_size=" + std::to_string(model.vocab_size()) +
         "\nchar_vocab_size=" + std::to_string(model.char_vocab_size()) + "\n";
}

struct LoadedModel {
  TrainConfig config;
  Vocab vocab;
  Model model;
};

LoadedModel load_model(const Options& o) {
  const fs::path ckpt_path = require_existing(o.checkpoint, "--checkpoint", o.command);
  const fs::path vocab_path = require_existing(o.vocab, "--vocab", o.command);
  const Checkpoint ckpt = read_checkpoint(ckpt_path);

  TrainConfig stored;
  std::size_t vocab_size = 0, char_vocab_size = 0;
  std::istringstream lines(ckpt.config);
  std::string line;
  std::string rest;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    const std::string key = line.substr(0, eq);
    if (eq != std::string::npos && key == "vocab_size") vocab_size = std::stoull(line.substr(eq + 1));
    else if (eq != std::string::npos && key == "char_vocab_size") char_vocab_size = std::stoull(line.substr(eq + 1));
    else rest += line + "\n";
  }
  try {
    stored.apply(rest);
  } catch (const ConfigError& e) {
    throw FormatError(ckpt_path.string() + ": bad configuration block: " + e.what());
  }

  // Only data-facing settings may be overridden at evaluation time.
  TrainConfig config = stored;
  if (o.persona_side) config.set("persona_side", *o.persona_side);
  if (o.persona_version) config.set("persona_version", *o.persona_version);
  if (config.persona_side == PersonaSide::none && config.model.variant != Variant::imn) {
    throw ConfigError("checkpoint variant " + to_string(config.model.variant) + " needs a persona side");
  }

  Vocab vocab = Vocab::load(vocab_path);
  if (vocab_size != vocab.size() || char_vocab_size != vocab.char_size()) {
    throw DimensionError("vocabulary " + vocab_path.string() + " has " + std::to_string(vocab.size()) + " words / " +
                         std::to_string(vocab.char_size()) + " characters but the checkpoint expects " +
                         std::to_string(vocab_size) + " / " + std::to_string(char_vocab_size));
  }
  Model model(config.model, vocab.size(), vocab.char_size(), config.seed);
  restore_params(ckpt, model.params());
  return LoadedModel{std::move(config), std::move(vocab), std::move(model)};
}

std::string report_text(const EvalReport& r, const std::string& title) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << title << "\n"
     << "examples: " << r.count << "\n"
     << "hits@1: " << r.hits_at_1 << "\n"
     << "mrr: " << r.mrr << "\n";
  return os.str();
}

std::string ranks_jsonl(const EvalReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.ranks.size(); ++i) {
    ojson row;
    row["id"] = i;
    row["rank"] = r.ranks[i];
    row["reciprocal_rank"] = 1.0 / static_cast<double>(r.ranks[i]);
    out += row.dump() + "\n";
  }
  return out;
}

void write_report(const fs::path& dir, const std::string& stem, const EvalReport& r, const std::string& title,
                  std::ostream& out) {
  const std::string text = report_text(r, title);
  write_text(dir / (stem + ".txt"), text);
  write_text(dir / (stem + "_ranks.jsonl"), ranks_jsonl(r));
  out << text;
}

std::string log_line(const TrainLogEntry& e) {
  ojson row;
  row["kind"] = e.kind == TrainLogEntry::Kind::step ? "step" : "epoch";
  row["step"] = e.step;
  row["epoch"] = e.epoch;
  if (e.kind == TrainLogEntry::Kind::step) row["loss"] = e.loss;
  row["lr"] = e.lr;
  if (e.dev_hits_at_1) row["dev_hits_at_1"] = *e.dev_hits_at_1;
  if (e.dev_mrr) row["dev_mrr"] = *e.dev_mrr;
  return row.dump();
}

EmbeddingSources sources_of(const Options& o) {
  EmbeddingSources s;
  if (o.embeddings) s.pretrained = require_existing(o.embeddings, "--embeddings", o.command);
  return s;
}

int cmd_vocab(const Options& o, std::ostream& out) {
  const TrainConfig config = resolve_config(o);
  const auto train_set = load(require_existing(o.train_file, "--train-file", o.command), config);
  const fs::path dir = output_dir(o);
  const Vocab vocab = build_vocab(train_set, config.min_count);
  vocab.save(dir / kVocabName);
  out << "vocabulary: " << vocab.size() << " words, " << vocab.char_size() << " characters\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const TrainConfig config = resolve_config(o);
  const auto train_examples = load(require_existing(o.train_file, "--train-file", o.command), config);
  const auto dev_examples = load_optional(o.dev_file, "--dev-file", o.command, config);
  const auto test_examples = load_optional(o.test_file, "--test-file", o.command, config);
  const EmbeddingSources sources = sources_of(o);
  const fs::path dir = output_dir(o);

  const Vocab vocab = o.vocab ? Vocab::load(require_existing(o.vocab, "--vocab", o.command))
                              : build_vocab(train_examples, config.min_count);
  Model model = build_model(config, vocab, sources);
  const auto train_set = tokenize_all(train_examples, vocab, config.limits);
  const auto dev_set = tokenize_all(dev_examples, vocab, config.limits);

  std::ofstream log(dir / "train_log.jsonl", std::ios::binary);
  const TrainResult result = train(model, config, train_set, dev_set, [&](const TrainLogEntry& e) {
    log << log_line(e) << "\n";
  });
  log.close();

  vocab.save(dir / kVocabName);
  write_checkpoint(dir / kCheckpointName, checkpoint_config(config, model), model.params());
  out << "trained " << to_string(config.model.variant) << " for " << result.steps << " steps";
  if (result.best_epoch) out << ", best dev hits@1 " << result.best_dev_hits_at_1 << " at epoch " << result.best_epoch;
  out << "\n";
  if (!test_examples.empty()) {
    const EvalReport report = evaluate(model, tokenize_all(test_examples, vocab, config.limits));
    write_report(dir, "report", report, "test " + to_string(config.model.variant), out);
  }
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  LoadedModel loaded = load_model(o);
  const auto examples = load(require_existing(o.test_file, "--test-file", o.command), loaded.config);
  const fs::path dir = output_dir(o);
  const EvalReport report = evaluate(loaded.model, tokenize_all(examples, loaded.vocab, loaded.config.limits));
  write_report(dir, "report", report, "eval " + to_string(loaded.config.model.variant), out);
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const TrainConfig config = resolve_config(o);
  if (config.persona_side == PersonaSide::none) throw ConfigError("ablation needs a persona side");
  Corpora corpora;
  corpora.train = load(require_existing(o.train_file, "--train-file", o.command), config);
  corpora.test = load(require_existing(o.test_file, "--test-file", o.command), config);
  corpora.dev = load_optional(o.dev_file, "--dev-file", o.command, config);
  const EmbeddingSources sources = sources_of(o);
  const fs::path dir = output_dir(o);
  const AblationReports reports = ablate(config, corpora, sources);
  write_report(dir, "report_DIM-persona", reports.without_persona, "DIM-persona", out);
  write_report(dir, "report_DIM-context", reports.without_context, "DIM-context", out);
  return kExitOk;
}

fs::path revised_counterpart(const fs::path& original) {
  std::string name = original.filename().string();
  const auto pos = name.find("original");
  if (pos == std::string::npos) {
    throw DataError("cannot derive the revised-persona file from " + original.string() +
                    " (file name lacks 'original')");
  }
  name.replace(pos, 8, "revised");
  const fs::path revised = original.parent_path() / name;
  if (!fs::exists(revised)) throw DataError("missing revised-persona file " + revised.string());
  return revised;
}

int cmd_transfer(const Options& o, std::ostream& out) {
  TrainConfig config = resolve_config(o);
  if (config.persona_side == PersonaSide::none) throw ConfigError("transfer needs a persona side");
  const fs::path train_path = require_existing(o.train_file, "--train-file", o.command);
  const fs::path test_path = require_existing(o.test_file, "--test-file", o.command);
  std::optional<fs::path> dev_path;
  if (o.dev_file) dev_path = require_existing(o.dev_file, "--dev-file", o.command);

  Corpora sets[2];
  for (int v = 0; v < 2; ++v) {
    const auto version = v == 0 ? PersonaVersion::original : PersonaVersion::revised;
    auto pick = [&](const fs::path& p) { return v == 0 ? p : revised_counterpart(p); };
    sets[v].train = load_corpus(pick(train_path), config.persona_side, version);
    sets[v].test = load_corpus(pick(test_path), config.persona_side, version);
    if (dev_path) sets[v].dev = load_corpus(pick(*dev_path), config.persona_side, version);
  }
  const EmbeddingSources sources = sources_of(o);
  const fs::path dir = output_dir(o);
  const TransferGrid grid = transfer_eval(config, sets[0], sets[1], sources);

  const char* names[2] = {"original", "revised"};
  std::ostringstream text;
  text << std::fixed << std::setprecision(6);
  text << "train\\test hits@1 (mrr)\n";
  ojson cells = ojson::array();
  for (int from = 0; from < 2; ++from) {
    text << names[from];
    for (int to = 0; to < 2; ++to) {
      const EvalReport& r = grid.cells[from][to];
      text << "  " << names[to] << ": " << r.hits_at_1 << " (" << r.mrr << ")";
      ojson cell;
      cell["train"] = names[from];
      cell["test"] = names[to];
      cell["examples"] = r.count;
      cell["hits_at_1"] = r.hits_at_1;
      cell["mrr"] = r.mrr;
      cells.push_back(cell);
    }
    text << "\n";
  }
  write_text(dir / "transfer.txt", text.str());
  write_text(dir / "transfer.json", cells.dump(2) + "\n");
  out << text.str();
  return kExitOk;
}

// Token strings for each grid cell, mirroring tokenize_example's truncation.
std::vector<std::vector<std::string>> grid_tokens(const std::vector<std::string>& sentences, std::size_t first,
                                                  std::size_t count, std::size_t max_words) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = first; i < first + count; ++i) {
    auto tokens = tokenize(sentences[i]);
    if (tokens.size() > max_words) tokens.resize(max_words);
    rows.push_back(std::move(tokens));
  }
  return rows;
}

// Extracts weights[candidate] restricted to real rows and columns.
ojson attention_matrix(const Tensor& weights, std::size_t candidate, const std::vector<std::vector<std::string>>& rows,
                       std::size_t row_stride, const std::vector<std::vector<std::string>>& cols,
                       std::size_t col_stride) {
  const std::size_t lr = weights.extent(1);
  const std::size_t lc = weights.extent(2);
  const auto data = weights.data();
  std::vector<std::size_t> row_index, col_index;
  ojson row_labels = ojson::array(), col_labels = ojson::array();
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t w = 0; w < rows[s].size(); ++w) {
      row_index.push_back(s * row_stride + w);
      row_labels.push_back(rows[s][w]);
    }
  }
  for (std::size_t s = 0; s < cols.size(); ++s) {
    for (std::size_t w = 0; w < cols[s].size(); ++w) {
      col_index.push_back(s * col_stride + w);
      col_labels.push_back(cols[s][w]);
    }
  }
  ojson matrix = ojson::array();
  for (const std::size_t r : row_index) {
    ojson line = ojson::array();
    for (const std::size_t c : col_index) line.push_back(data[(candidate * lr + r) * lc + c]);
    matrix.push_back(std::move(line));
  }
  ojson out;
  out["rows"] = row_labels;
  out["columns"] = col_labels;
  out["weights"] = matrix;
  return out;
}

int cmd_attn_dump(const Options& o, std::ostream& out) {
  LoadedModel loaded = load_model(o);
  const auto examples = load(require_existing(o.test_file, "--test-file", o.command), loaded.config);
  if (!o.example_id) throw UsageError("command 'attn-dump' requires --example-id");
  const std::size_t id = *o.example_id;
  if (id >= examples.size()) {
    throw IndexError("example id " + std::to_string(id) + " out of range (corpus has " +
                     std::to_string(examples.size()) + " examples)");
  }
  const fs::path dir = output_dir(o);
  const DialogueExample& ex = examples[id];
  const SequenceLimits& lim = loaded.config.limits;
  const TokenizedExample tok = tokenize_example(ex, loaded.vocab, lim, id);
  const ForwardResult fwd = loaded.model.forward(tok);
  const std::size_t pos = ex.positive_index;

  const auto response = grid_tokens(ex.candidates, pos, 1, lim.max_response_words);
  ojson doc;
  doc["example_id"] = id;
  doc["variant"] = to_string(loaded.config.model.variant);
  doc["candidate"] = pos;
  if (fwd.matching.context_alignment.weights_b.node()) {
    const std::size_t keep = std::min(ex.context.size(), lim.max_utterances);
    const auto context = grid_tokens(ex.context, ex.context.size() - keep, keep, lim.max_utterance_words);
    doc["response_to_context"] = attention_matrix(fwd.matching.context_alignment.weights_b, pos, response,
                                                  lim.max_response_words, context, lim.max_utterance_words);
  }
  if (fwd.matching.persona_alignment.weights_b.node()) {
    const std::size_t keep = std::min(ex.persona.size(), lim.max_profiles);
    const auto persona = grid_tokens(ex.persona, 0, keep, lim.max_profile_words);
    doc["response_to_persona"] = attention_matrix(fwd.matching.persona_alignment.weights_b, pos, response,
                                                  lim.max_response_words, persona, lim.max_profile_words);
  }
  write_text(dir / "attention.json", doc.dump(2) + "\n");
  out << "attention for example " << id << " written to " << (dir / "attention.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persona-conditioned response selection: training, evaluation and analysis", "dim"};
  Options o;
  app.add_option("command", o.command, "train | eval | ablate | transfer | attn-dump | vocab")
      ->required()
      ->check(CLI::IsMember({"train", "eval", "ablate", "transfer", "attn-dump", "vocab"}));
  app.add_option("--train-file", o.train_file, "training corpus (text or .jsonl)");
  app.add_option("--dev-file", o.dev_file, "development corpus used for model selection");
  app.add_option("--test-file", o.test_file, "evaluation corpus");
  app.add_option("--embeddings", o.embeddings, "pretrained word vectors, '<token> <values...>' per line");
  app.add_option("--vocab", o.vocab, "vocabulary file");
  app.add_option("--checkpoint", o.checkpoint, "model checkpoint");
  app.add_option("--output-dir", o.output_dir, "directory receiving every output file");
  app.add_option("--config", o.config, "key=value configuration file (flags take precedence)");
  app.add_option("--variant", o.variant, "IMN | IMN_ctx | IMN_utr | DIM | DIM-persona | DIM-context");
  app.add_option("--persona-side", o.persona_side, "self | their | none (none forces IMN)");
  app.add_option("--persona-version", o.persona_version, "original | revised");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--batch-size", o.batch_size, "mini-batch size");
  app.add_option("--lr", o.lr, "initial learning rate");
  app.add_option("--epochs", o.epochs, "maximum number of epochs");
  app.add_option("--hidden-dim", o.hidden_dim, "BiLSTM hidden size per direction");
  app.add_option("--embed-dims", o.embed_dims, "pretrained,task,char_filters widths");
  app.add_option("--example-id", o.example_id, "0-based example index for attn-dump");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (o.command == "train") return cmd_train(o, out);
    if (o.command == "eval") return cmd_eval(o, out);
    if (o.command == "ablate") return cmd_ablate(o, out);
    if (o.command == "transfer") return cmd_transfer(o, out);
    if (o.command == "attn-dump") return cmd_attn_dump(o, out);
    return cmd_vocab(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace dim
