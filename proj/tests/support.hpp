#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dim/grad_check.hpp"
#include "dim/model.hpp"
#include "dim/ops.hpp"
#include "dim/tensor.hpp"
#include "dim/text.hpp"
#include "dim/train.hpp"

namespace dim::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DIM_TEST_DATA_DIR) / name;
}

inline Tensor random_tensor(const Shape& shape, Rng& rng, bool requires_grad = true, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor(shape, v, requires_grad);
}

// Prefix mask [n x t] with the given real lengths.
inline Tensor prefix_mask(const std::vector<std::size_t>& lengths, std::size_t t) {
  std::vector<double> m(lengths.size() * t, 0.0);
  for (std::size_t i = 0; i < lengths.size(); ++i)
    for (std::size_t j = 0; j < lengths[i]; ++j) m[i * t + j] = 1.0;
  return Tensor({lengths.size(), t}, m);
}

// Reduces any tensor to a scalar with fixed random weights so every output
// cell contributes a distinct coefficient to the gradient.
inline Tensor weighted_sum(const Tensor& y, std::uint64_t seed = 99) {
  Rng rng(seed);
  const Tensor w = random_tensor(y.shape(), rng, false);
  return sum(mul(y, w));
}

// Configuration small enough for finite differences and fast training.
inline TrainConfig micro_config(Variant variant = Variant::dim) {
  TrainConfig c;
  c.model.variant = variant;
  c.model.hidden_dim = 4;
  c.model.mlp_hidden = 8;
  c.model.dropout = 0.0;
  c.model.embedding.pretrained_dim = 0;
  c.model.embedding.task_dim = 6;
  c.model.embedding.char_embed_dim = 3;
  c.model.embedding.char_filters_per_window = 2;
  c.model.embedding.char_windows = {2, 3};
  c.limits.max_chars = 8;
  c.limits.max_utterance_words = 8;
  c.limits.max_utterances = 4;
  c.limits.max_response_words = 8;
  c.limits.max_profile_words = 8;
  c.limits.max_profiles = 3;
  c.batch_size = 4;
  c.max_epochs = 2;
  return c;
}

inline DialogueExample make_example(std::vector<std::string> context, std::vector<std::string> persona,
                                    std::vector<std::string> candidates, std::size_t positive) {
  DialogueExample ex;
  ex.context = std::move(context);
  ex.persona = std::move(persona);
  ex.candidates = std::move(candidates);
  ex.positive_index = positive;
  return ex;
}

inline std::vector<DialogueExample> toy_corpus() {
  return {
      make_example({"hi , how are you ?", "fine thanks ."}, {"i like cats .", "i am a nurse ."},
                   {"i work at a hospital .", "the sky is green .", "pizza is great !"}, 0),
      make_example({"what do you do ?"}, {"i play guitar .", "my dog is brown ."},
                   {"nothing much .", "i play in a band .", "what ?"}, 1),
  };
}

// Finite-difference check of a model loss over every trainable tensor.
// Tensors with a live gradient are compared by norm-relative error; tensors
// whose gradient vanishes identically (shift-invariant biases, inactive
// units) must have both analytic and numeric norms below `zero_norm`.
struct ModelGradReport {
  double worst_relative = 0.0;
  std::string worst_tensor;
  double worst_zero_norm = 0.0;
  std::vector<std::string> zero_tensors;
  std::size_t live_tensors = 0;

  bool ok(double tol, double zero_norm = 1e-9) const {
    return worst_relative < tol && worst_zero_norm < zero_norm;
  }
};

inline ModelGradReport model_grad_check(Model& model, const TokenizedExample& ex, double zero_norm = 1e-9) {
  ModelGradReport report;
  for (auto& entry : model.params().entries()) {
    if (!entry.tensor.requires_grad()) continue;
    const GradComparison c = grad_check_norm([&](const Tensor&) { return model.loss(ex); }, entry.tensor);
    if (c.analytic_norm < zero_norm && c.numeric_norm < zero_norm) {
      report.zero_tensors.push_back(entry.name);
      report.worst_zero_norm = std::max({report.worst_zero_norm, c.analytic_norm, c.numeric_norm});
      continue;
    }
    ++report.live_tensors;
    if (c.relative >= report.worst_relative) {
      report.worst_relative = c.relative;
      report.worst_tensor = entry.name;
    }
  }
  return report;
}

}  // namespace dim::testing
