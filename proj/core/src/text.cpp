#include "dim/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dim/error.hpp"

namespace dim {

PersonaSide parse_persona_side(std::string_view text) {
  if (text == "self") return PersonaSide::self;
  if (text == "their") return PersonaSide::their;
  if (text == "none") return PersonaSide::none;
  throw ConfigError("persona side must be self, their or none, got '" + std::string(text) + "'");
}

PersonaVersion parse_persona_version(std::string_view text) {
  if (text == "original") return PersonaVersion::original;
  if (text == "revised") return PersonaVersion::revised;
  throw ConfigError("persona version must be original or revised, got '" + std::string(text) + "'");
}

std::string to_string(PersonaSide side) {
  switch (side) {
    case PersonaSide::self: return "self";
    case PersonaSide::their: return "their";
    case PersonaSide::none: return "none";
  }
  return "?";
}

std::string to_string(PersonaVersion version) {
  return version == PersonaVersion::original ? "original" : "revised";
}

void validate(const DialogueExample& example) {
  if (example.candidates.empty()) throw DataError("example has no candidates");
  if (example.positive_index >= example.candidates.size()) {
    throw DataError("positive index " + std::to_string(example.positive_index) + " outside " +
                    std::to_string(example.candidates.size()) + " candidates");
  }
  if (example.persona_side != PersonaSide::none && example.persona.empty()) {
    throw DataError("persona-conditioned example has no profile sentence");
  }
}

namespace {

constexpr std::string_view kSelfPrefix = "your persona: ";
constexpr std::string_view kTheirPrefix = "partner's persona: ";

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<DialogueExample> parse_personachat(std::istream& in, const std::string& source,
                                               PersonaSide side, PersonaVersion version) {
  std::vector<DialogueExample> out;
  std::vector<std::string> history;
  std::vector<std::string> persona;
  std::size_t previous_turn = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits == 0 || digits >= line.size() || line[digits] != ' ') {
      throw ParseError(source, line_no, "expected '<turn number> <payload>'");
    }
    const std::size_t turn = std::stoul(line.substr(0, digits));
    const std::string payload = line.substr(digits + 1);
    if (turn == 1) {
      history.clear();
      persona.clear();
    } else if (turn != previous_turn + 1) {
      throw ParseError(source, line_no,
                       "turn number " + std::to_string(turn) + " does not follow " +
                           std::to_string(previous_turn));
    }
    previous_turn = turn;

    if (payload.starts_with(kSelfPrefix)) {
      if (side == PersonaSide::self) persona.push_back(payload.substr(kSelfPrefix.size()));
      continue;
    }
    if (payload.starts_with(kTheirPrefix)) {
      if (side == PersonaSide::their) persona.push_back(payload.substr(kTheirPrefix.size()));
      continue;
    }

    const std::vector<std::string> fields = split(payload, '\t');
    if (fields.size() < 4) {
      throw ParseError(source, line_no,
                       "turn line needs '<utterance>\\t<response>\\t<reward>\\t<candidates>'");
    }
    DialogueExample ex;
    history.push_back(fields[0]);
    ex.context = history;
    ex.persona = persona;
    ex.candidates = split(fields[3], '|');
    ex.persona_side = side;
    ex.persona_version = version;
    const auto hit = std::find(ex.candidates.begin(), ex.candidates.end(), fields[1]);
    if (hit == ex.candidates.end()) {
      throw DataError(source + ":" + std::to_string(line_no) +
                      ": true response is not among the candidates");
    }
    ex.positive_index = static_cast<std::size_t>(hit - ex.candidates.begin());
    try {
      validate(ex);
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    history.push_back(fields[1]);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<DialogueExample> parse_personachat(const std::filesystem::path& path, PersonaSide side,
                                               PersonaVersion version) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_personachat(in, path.string(), side, version);
}

std::vector<DialogueExample> parse_jsonl(std::istream& in, const std::string& source, PersonaSide side,
                                         PersonaVersion version) {
  std::vector<DialogueExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DialogueExample ex;
    try {
      const auto obj = nlohmann::json::parse(line);
      ex.context = obj.at("context").get<std::vector<std::string>>();
      if (side != PersonaSide::none) ex.persona = obj.at("persona").get<std::vector<std::string>>();
      ex.candidates = obj.at("candidates").get<std::vector<std::string>>();
      ex.positive_index = obj.at("positive_index").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
    ex.persona_side = side;
    ex.persona_version = version;
    try {
      validate(ex);
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<DialogueExample> load_corpus(const std::filesystem::path& path, PersonaSide side,
                                         PersonaVersion version) {
  if (path.extension() == ".jsonl") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file " + path.string());
    return parse_jsonl(in, path.string(), side, version);
  }
  return parse_personachat(path, side, version);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, raw);
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

Vocab::Vocab() {
  tokens_ = {kPadToken, kUnkToken};
  counts_ = {0, 0};
  index_[kPadToken] = kPad;
  index_[kUnkToken] = kUnk;
  char_ids_.fill(kUnk);
}

Vocab Vocab::from_entries(const std::vector<std::pair<std::string, std::int64_t>>& entries) {
  Vocab v;
  for (const auto& [token, count] : entries) {
    if (v.index_.count(token)) throw DataError("duplicate vocabulary token '" + token + "'");
    v.index_[token] = static_cast<std::int32_t>(v.tokens_.size());
    v.tokens_.push_back(token);
    v.counts_.push_back(count);
  }
  v.build_chars();
  return v;
}

void Vocab::build_chars() {
  std::array<std::int64_t, 256> totals{};
  for (std::size_t id = 2; id < tokens_.size(); ++id) {
    for (char c : tokens_[id]) totals[static_cast<unsigned char>(c)] += std::max<std::int64_t>(counts_[id], 1);
  }
  std::vector<int> present;
  for (int c = 0; c < 256; ++c) {
    if (totals[c] > 0) present.push_back(c);
  }
  std::stable_sort(present.begin(), present.end(),
                   [&](int a, int b) { return totals[a] > totals[b]; });
  char_ids_.fill(kUnk);
  std::int32_t next = 2;
  for (int c : present) char_ids_[c] = next++;
  char_size_ = static_cast<std::size_t>(next);
}

std::int32_t Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << ' ' << i << ' ' << counts_[i] << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::pair<std::string, std::int64_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    std::int64_t id = -1;
    std::int64_t count = 0;
    if (!(fields >> token >> id >> count)) throw ParseError(path.string(), line_no, "expected '<token> <id> <count>'");
    if (id != static_cast<std::int64_t>(line_no - 1)) {
      throw ParseError(path.string(), line_no, "ids must be contiguous from 0");
    }
    if (id == kPad && token != kPadToken) throw ParseError(path.string(), line_no, "id 0 must be <pad>");
    if (id == kUnk && token != kUnkToken) throw ParseError(path.string(), line_no, "id 1 must be <unk>");
    if (id >= 2) entries.emplace_back(token, count);
  }
  if (line_no < 2) throw ParseError(path.string(), line_no, "missing reserved entries");
  return from_entries(entries);
}

Vocab build_vocab(const std::vector<DialogueExample>& examples, std::size_t min_count) {
  std::map<std::string, std::int64_t> counts;
  auto add = [&](const std::string& text) {
    for (auto& tok : tokenize(text)) ++counts[tok];
  };
  for (const auto& ex : examples) {
    for (const auto& s : ex.context) add(s);
    for (const auto& s : ex.persona) add(s);
    for (const auto& s : ex.candidates) add(s);
  }
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= static_cast<std::int64_t>(min_count)) kept.emplace_back(tok, n);
  }
  // std::map iteration is already lexicographic, so a stable sort by count
  // yields (count desc, token asc).
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return Vocab::from_entries(kept);
}

std::size_t TokenGrid::real_rows() const {
  return static_cast<std::size_t>(std::count(row_mask.begin(), row_mask.end(), 1.0));
}

std::size_t TokenGrid::real_words(std::size_t row) const {
  return static_cast<std::size_t>(
      std::count(word_mask.begin() + row * words, word_mask.begin() + (row + 1) * words, 1.0));
}

TokenGrid make_grid(const std::vector<std::vector<std::string>>& sentences, std::size_t rows,
                    std::size_t words, std::size_t chars, const Vocab& vocab) {
  if (sentences.size() > rows) throw DataError("more sentences than grid rows");
  TokenGrid g;
  g.rows = rows;
  g.words = words;
  g.chars = chars;
  g.ids.assign(rows * words, Vocab::kPad);
  g.char_ids.assign(rows * words * chars, Vocab::kPad);
  g.word_mask.assign(rows * words, 0.0);
  g.row_mask.assign(rows, 0.0);
  for (std::size_t r = 0; r < sentences.size(); ++r) {
    const auto& toks = sentences[r];
    if (toks.empty()) throw DataError("sentence without tokens");
    g.row_mask[r] = 1.0;
    const std::size_t n = std::min(words, toks.size());
    for (std::size_t w = 0; w < n; ++w) {
      const std::size_t cell = r * words + w;
      g.ids[cell] = vocab.id(toks[w]);
      g.word_mask[cell] = 1.0;
      const std::string& tok = toks[w];
      const std::size_t nc = std::min(chars, tok.size());
      for (std::size_t c = 0; c < nc; ++c) {
        g.char_ids[cell * chars + c] = vocab.char_id(static_cast<unsigned char>(tok[c]));
      }
    }
  }
  return g;
}

TokenizedExample tokenize_example(const DialogueExample& example, const Vocab& vocab,
                                  const SequenceLimits& limits, std::size_t example_index) {
  validate(example);
  auto tokenize_all = [](auto first, auto last) {
    std::vector<std::vector<std::string>> out;
    for (auto it = first; it != last; ++it) out.push_back(tokenize(*it));
    return out;
  };

  const std::size_t n_ctx = example.context.size();
  const std::size_t keep = std::min(n_ctx, limits.max_utterances);
  const std::size_t n_profiles = std::min(example.persona.size(), limits.max_profiles);

  TokenizedExample out;
  try {
    out.context = make_grid(tokenize_all(example.context.end() - keep, example.context.end()),
                            limits.max_utterances, limits.max_utterance_words, limits.max_chars, vocab);
    out.persona = make_grid(tokenize_all(example.persona.begin(), example.persona.begin() + n_profiles),
                            limits.max_profiles, limits.max_profile_words, limits.max_chars, vocab);
    out.candidates = make_grid(tokenize_all(example.candidates.begin(), example.candidates.end()),
                               example.candidates.size(), limits.max_response_words, limits.max_chars,
                               vocab);
  } catch (const DataError& e) {
    throw DataError("example " + std::to_string(example_index) + ": " + e.what());
  }
  out.positive_index = example.positive_index;
  out.example_index = example_index;
  return out;
}

std::vector<TokenizedBatch> batchify(const std::vector<DialogueExample>& examples, const Vocab& vocab,
                                     const SequenceLimits& limits, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<TokenizedBatch> batches;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i % batch_size == 0) batches.emplace_back();
    batches.back().examples.push_back(tokenize_example(examples[i], vocab, limits, i));
  }
  return batches;
}

}  // namespace dim
