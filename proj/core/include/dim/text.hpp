#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dim {

enum class PersonaSide { self, their, none };
enum class PersonaVersion { original, revised };

PersonaSide parse_persona_side(std::string_view text);
PersonaVersion parse_persona_version(std::string_view text);
std::string to_string(PersonaSide side);
std::string to_string(PersonaVersion version);

/// One ranking instance (context, persona, candidate responses, label).
struct DialogueExample {
  std::vector<std::string> context;
  std::vector<std::string> persona;
  std::vector<std::string> candidates;
  std::size_t positive_index = 0;
  PersonaSide persona_side = PersonaSide::self;
  PersonaVersion persona_version = PersonaVersion::original;
};

/// Throws DataError when the label is out of range, there are no candidates,
/// or a persona-conditioned example carries no profile.
void validate(const DialogueExample& example);

/// Reads the ParlAI-style text format: one example per dialogue turn, with the
/// context accumulating every earlier utterance of the dialogue. Persona lines
/// are kept for the requested side only.
std::vector<DialogueExample> parse_personachat(const std::filesystem::path& path, PersonaSide side,
                                               PersonaVersion version);
std::vector<DialogueExample> parse_personachat(std::istream& in, const std::string& source,
                                               PersonaSide side, PersonaVersion version);

/// JSON-lines mirror: {"context": [...], "persona": [...], "candidates": [...],
/// "positive_index": k} per line.
std::vector<DialogueExample> parse_jsonl(std::istream& in, const std::string& source, PersonaSide side,
                                         PersonaVersion version);

/// Dispatches on extension: ".jsonl" uses the JSON mirror, anything else the
/// native text format.
std::vector<DialogueExample> load_corpus(const std::filesystem::path& path, PersonaSide side,
                                         PersonaVersion version);

/// Lowercases, splits on whitespace and detaches every ASCII punctuation
/// character as its own token.
std::vector<std::string> tokenize(std::string_view text);

/// Word and character vocabularies. Id 0 is padding and id 1 the unknown
/// token in both. The character table is derived from the word table.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();

  /// `entries` are (token, count) pairs already in id order, starting at id 2.
  static Vocab from_entries(const std::vector<std::pair<std::string, std::int64_t>>& entries);
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::int64_t count(std::int32_t id) const { return counts_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  std::int32_t char_id(unsigned char c) const { return char_ids_[c]; }
  std::size_t char_size() const { return char_size_; }

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_;
  }

 private:
  void build_chars();

  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::array<std::int32_t, 256> char_ids_{};
  std::size_t char_size_ = 2;
};

/// Tokens with count >= min_count, ordered by descending count then
/// lexicographically.
Vocab build_vocab(const std::vector<DialogueExample>& examples, std::size_t min_count);

struct SequenceLimits {
  std::size_t max_chars = 18;
  std::size_t max_utterance_words = 20;
  std::size_t max_utterances = 15;
  std::size_t max_response_words = 20;
  std::size_t max_profile_words = 15;
  std::size_t max_profiles = 5;
};

/// Padded id grids for a group of sentences: ids [rows x words], chars
/// [rows x words x chars], word mask [rows x words], row mask [rows].
struct TokenGrid {
  std::size_t rows = 0;
  std::size_t words = 0;
  std::size_t chars = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> char_ids;
  std::vector<double> word_mask;
  std::vector<double> row_mask;

  std::size_t real_rows() const;
  std::size_t real_words(std::size_t row) const;
};

struct TokenizedExample {
  TokenGrid context;     // max_utterances x max_utterance_words
  TokenGrid persona;     // max_profiles x max_profile_words
  TokenGrid candidates;  // |candidates| x max_response_words
  std::size_t positive_index = 0;
  std::size_t example_index = 0;
};

struct TokenizedBatch {
  std::vector<TokenizedExample> examples;
  std::size_t size() const { return examples.size(); }
};

/// Builds a grid from already-tokenized sentences, placing them in rows
/// 0..n-1. Words and characters are truncated from the right.
TokenGrid make_grid(const std::vector<std::vector<std::string>>& sentences, std::size_t rows,
                    std::size_t words, std::size_t chars, const Vocab& vocab);

/// Keeps the last `max_utterances` context utterances; truncates words and
/// characters from the right.
TokenizedExample tokenize_example(const DialogueExample& example, const Vocab& vocab,
                                  const SequenceLimits& limits, std::size_t example_index = 0);

std::vector<TokenizedBatch> batchify(const std::vector<DialogueExample>& examples, const Vocab& vocab,
                                     const SequenceLimits& limits, std::size_t batch_size);

}  // namespace dim
