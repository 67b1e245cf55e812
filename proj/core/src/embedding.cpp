#include "dim/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "dim/error.hpp"

namespace dim {

namespace {

Tensor uniform_table(std::size_t rows, std::size_t cols, double bound, Rng& rng, bool zero_pad_row) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = dist(rng);
  if (zero_pad_row) std::fill_n(values.begin(), cols, 0.0);
  return Tensor({rows, cols}, std::move(values), true);
}

}  // namespace

WordRepr init_word_repr(const EmbeddingConfig& config, std::size_t vocab_size,
                        std::size_t char_vocab_size, Rng& rng, ParamSet& params) {
  if (config.char_windows.empty() || config.char_filters_per_window == 0 || config.char_embed_dim == 0) {
    throw ConfigError("character CNN needs at least one window, filter and embedding dimension");
  }
  WordRepr repr;
  repr.config = config;
  if (config.pretrained_dim > 0) {
    repr.pretrained = params.add("embed.pretrained",
                                 uniform_table(vocab_size, config.pretrained_dim, 0.1, rng, true));
    repr.pretrained.set_requires_grad(!config.freeze_pretrained);
  }
  if (config.task_dim > 0) {
    repr.task = params.add("embed.task", uniform_table(vocab_size, config.task_dim, 0.1, rng, true));
    repr.task.set_requires_grad(!config.freeze_task);
  }
  repr.chars = params.add("embed.chars",
                          uniform_table(char_vocab_size, config.char_embed_dim, 0.1, rng, true));
  for (std::size_t w : config.char_windows) {
    if (w == 0) throw ConfigError("character window must be positive");
    const std::size_t fan_in = w * config.char_embed_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const std::string name = "embed.conv" + std::to_string(w);
    repr.conv_weights.push_back(
        params.add(name + ".w", uniform_table(fan_in, config.char_filters_per_window, bound, rng, false)));
    const Tensor bias = uniform_table(1, config.char_filters_per_window, bound, rng, false);
    repr.conv_biases.push_back(params.add(
        name + ".b", Tensor({config.char_filters_per_window},
                            std::vector<double>(bias.data().begin(), bias.data().end()), true)));
  }
  return repr;
}

Tensor load_pretrained(const std::filesystem::path& path, const Vocab& vocab, std::size_t dim, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::vector<double> table(vocab.size() * dim, 0.0);
  std::vector<bool> found(vocab.size(), false);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> row;
    double v;
    while (fields >> v) row.push_back(v);
    if (!fields.eof()) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
    if (width == 0) width = row.size();
    if (row.size() != width || width == 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " values, found " + std::to_string(row.size()));
    }
    if (width != dim) {
      throw FormatError(path.string() + ": vectors have " + std::to_string(width) +
                        " dimensions, configuration expects " + std::to_string(dim));
    }
    const std::int32_t id = vocab.id(token);
    if (id == Vocab::kUnk && token != Vocab::kUnkToken) continue;
    if (id == Vocab::kPad || found[id]) continue;
    std::copy(row.begin(), row.end(), table.begin() + id * dim);
    found[id] = true;
  }
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    if (found[id]) continue;
    for (std::size_t j = 0; j < dim; ++j) table[id * dim + j] = dist(rng);
  }
  return Tensor({vocab.size(), dim}, std::move(table), false);
}

Tensor char_conv(const std::vector<std::int32_t>& char_ids, std::size_t chars_per_word,
                 const WordRepr& repr) {
  if (chars_per_word == 0 || char_ids.empty() || char_ids.size() % chars_per_word != 0) {
    throw DimensionError("char_conv: char id count is not a multiple of the per-word length");
  }
  const std::size_t words = char_ids.size() / chars_per_word;
  const std::size_t embed = repr.config.char_embed_dim;
  const std::size_t filters = repr.config.char_filters_per_window;

  std::vector<std::int64_t> lookup(char_ids.size());
  for (std::size_t i = 0; i < char_ids.size(); ++i) {
    lookup[i] = char_ids[i] == Vocab::kPad ? -1 : char_ids[i];
  }
  const Tensor embedded = gather_rows(repr.chars, lookup);  // [words*chars x embed]
  const Tensor all_steps = Tensor::full({words, chars_per_word}, 1.0);

  std::vector<Tensor> features;
  for (std::size_t k = 0; k < repr.config.char_windows.size(); ++k) {
    const std::size_t w = repr.config.char_windows[k];
    // Window at position t covers chars t..t+w-1; slots past the word end are zero.
    std::vector<std::int64_t> patch(words * chars_per_word * w);
    for (std::size_t m = 0; m < words; ++m) {
      for (std::size_t t = 0; t < chars_per_word; ++t) {
        for (std::size_t j = 0; j < w; ++j) {
          const std::size_t src = t + j;
          patch[(m * chars_per_word + t) * w + j] =
              src < chars_per_word ? static_cast<std::int64_t>(m * chars_per_word + src) : -1;
        }
      }
    }
    Tensor cols = reshape(gather_rows(embedded, patch), {words * chars_per_word, w * embed});
    Tensor act = relu(add_bias(matmul(cols, repr.conv_weights[k]), repr.conv_biases[k]));
    features.push_back(pool(reshape(act, {words, chars_per_word, filters}), PoolKind::max, all_steps));
  }
  return features.size() == 1 ? features.front() : concat(features, 1);
}

Tensor embed_words(const TokenGrid& grid, const WordRepr& repr) {
  const std::size_t n = grid.rows * grid.words;
  std::vector<std::int64_t> lookup(n);
  for (std::size_t i = 0; i < n; ++i) {
    lookup[i] = grid.word_mask[i] == 0.0 || grid.ids[i] == Vocab::kPad ? -1 : grid.ids[i];
  }
  std::vector<Tensor> parts;
  if (repr.pretrained.defined()) parts.push_back(gather_rows(repr.pretrained, lookup));
  if (repr.task.defined()) parts.push_back(gather_rows(repr.task, lookup));
  parts.push_back(char_conv(grid.char_ids, grid.chars, repr));
  Tensor words = reshape(concat(parts, 1), {grid.rows, grid.words, repr.config.word_dim()});
  return mask_rows(words, Tensor({grid.rows, grid.words}, grid.word_mask));
}

}  // namespace dim
