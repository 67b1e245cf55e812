#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "dim/encoder.hpp"
#include "dim/model.hpp"
#include "dim/ops.hpp"
#include "dim/text.hpp"
#include "dim/train.hpp"

namespace {

using namespace dim;

Tensor random_tensor(const Shape& shape, Rng& rng, bool requires_grad) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(shape, std::move(v), requires_grad);
}

Tensor full_mask(std::size_t rows, std::size_t steps) { return Tensor::full({rows, steps}, 1.0); }

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor({n, n}, rng, false);
  const Tensor b = random_tensor({n, n}, rng, false);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_MaskedSoftmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor x = random_tensor({n, n}, rng, false);
  const Tensor mask = full_mask(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(masked_softmax(x, mask));
}
BENCHMARK(BM_MaskedSoftmax)->Arg(64)->Arg(256);

void BM_BiLstmForwardBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const std::size_t batch = 8, steps = 20, input = 2 * hidden;
  Rng rng(3);
  ParamSet params;
  const BiLstmParams lstm = init_bilstm("bench", input, hidden, rng, params);
  const Tensor x = random_tensor({batch, steps, input}, rng, false);
  const Tensor mask = full_mask(batch, steps);
  for (auto _ : state) {
    params.zero_grad();
    sum(bilstm(x, mask, lstm)).backward();
  }
}
BENCHMARK(BM_BiLstmForwardBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

struct ModelFixture {
  TrainConfig config;
  Vocab vocab;
  TokenizedExample example;
};

ModelFixture model_fixture(std::size_t hidden, std::size_t candidates) {
  ModelFixture f;
  f.config.model.hidden_dim = hidden;
  f.config.model.mlp_hidden = 2 * hidden;
  f.config.model.dropout = 0.0;
  f.config.model.embedding.pretrained_dim = 0;
  f.config.model.embedding.task_dim = hidden;
  DialogueExample ex;
  ex.context = {"hi , how are you doing today ?", "i am fine , just got back from work .",
                "what do you do for a living ?"};
  ex.persona = {"i work as a nurse .", "i have two cats .", "i like to hike on weekends ."};
  for (std::size_t c = 0; c < candidates; ++c) {
    ex.candidates.push_back("candidate reply number " + std::to_string(c) + " about the hospital .");
  }
  f.vocab = build_vocab({ex}, 1);
  f.example = tokenize_example(ex, f.vocab, f.config.limits);
  return f;
}

void BM_ModelForward(benchmark::State& state) {
  const ModelFixture f = model_fixture(static_cast<std::size_t>(state.range(0)), 20);
  const Model model(f.config.model, f.vocab.size(), f.vocab.char_size(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(f.example).logits);
}
BENCHMARK(BM_ModelForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModelTrainStep(benchmark::State& state) {
  const ModelFixture f = model_fixture(static_cast<std::size_t>(state.range(0)), 20);
  Model model(f.config.model, f.vocab.size(), f.vocab.char_size(), 1);
  for (auto _ : state) {
    model.params().zero_grad();
    model.loss(f.example).backward();
  }
}
BENCHMARK(BM_ModelTrainStep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
