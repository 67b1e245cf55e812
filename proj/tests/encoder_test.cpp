#include <gtest/gtest.h>

#include <cmath>

#include "dim/encoder.hpp"
#include "dim/error.hpp"
#include "dim/grad_check.hpp"
#include "support.hpp"

using namespace dim;
using dim::testing::prefix_mask;
using dim::testing::random_tensor;

namespace {

double sigm(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Scalar-loop LSTM over rows [len x d] of one sequence; returns [len x h].
std::vector<std::vector<double>> lstm_oracle(const std::vector<std::vector<double>>& xs, const LstmCell& c,
                                             std::size_t h) {
  const std::size_t d = xs.empty() ? 0 : xs[0].size();
  const auto W = c.input_weights.data(), U = c.recurrent_weights.data(), b = c.bias.data();
  std::vector<double> hid(h, 0.0), cell(h, 0.0);
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) {
    std::vector<double> z(4 * h);
    for (std::size_t g = 0; g < 4 * h; ++g) {
      z[g] = b[g];
      for (std::size_t k = 0; k < d; ++k) z[g] += x[k] * W[k * 4 * h + g];
      for (std::size_t k = 0; k < h; ++k) z[g] += hid[k] * U[k * 4 * h + g];
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sigm(z[j]), f = sigm(z[h + j]), g = std::tanh(z[2 * h + j]), o = sigm(z[3 * h + j]);
      cell[j] = f * cell[j] + i * g;
      hid[j] = o * std::tanh(cell[j]);
    }
    out.push_back(hid);
  }
  return out;
}

}  // namespace

TEST(BiLstm, InitialisationLayout) {
  Rng rng(1);
  ParamSet p;
  const BiLstmParams b = init_bilstm("enc", 5, 3, rng, p);
  EXPECT_EQ(p.size(), 6u);
  EXPECT_EQ(p.entries()[0].name, "enc.fwd.w");
  EXPECT_EQ(p.entries()[5].name, "enc.bwd.b");
  EXPECT_EQ(b.forward.input_weights.shape(), (Shape{5, 12}));
  EXPECT_EQ(b.forward.recurrent_weights.shape(), (Shape{3, 12}));
  const auto bias = b.backward.bias.data();
  for (std::size_t g = 0; g < 12; ++g) EXPECT_EQ(bias[g], (g >= 3 && g < 6) ? 1.0 : 0.0);
  const double k = 1.0 / std::sqrt(3.0);
  for (double v : b.forward.input_weights.data()) EXPECT_LE(std::abs(v), k);
  EXPECT_EQ(b.output_dim(), 6u);
}

TEST(BiLstm, MatchesScalarOracleInBothDirections) {
  Rng rng(2);
  ParamSet p;
  const std::size_t d = 3, h = 2, T = 5;
  const BiLstmParams b = init_bilstm("enc", d, h, rng, p);
  const Tensor x = random_tensor({3, T, d}, rng, false);
  const std::vector<std::size_t> lengths = {5, 2, 4};
  const Tensor out = bilstm(x, prefix_mask(lengths, T), b);
  ASSERT_EQ(out.shape(), (Shape{3, T, 2 * h}));
  for (std::size_t n = 0; n < 3; ++n) {
    std::vector<std::vector<double>> seq;
    for (std::size_t t = 0; t < lengths[n]; ++t) {
      seq.emplace_back();
      for (std::size_t k = 0; k < d; ++k) seq.back().push_back(x.at({n, t, k}));
    }
    const auto fwd = lstm_oracle(seq, b.forward, h);
    std::vector<std::vector<double>> rev(seq.rbegin(), seq.rend());
    const auto bwd = lstm_oracle(rev, b.backward, h);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < h; ++j) {
        if (t < lengths[n]) {
          EXPECT_NEAR(out.at({n, t, j}), fwd[t][j], 1e-14);
          EXPECT_NEAR(out.at({n, t, h + j}), bwd[lengths[n] - 1 - t][j], 1e-14);
        } else {
          EXPECT_EQ(out.at({n, t, j}), 0.0);
          EXPECT_EQ(out.at({n, t, h + j}), 0.0);
        }
      }
    }
  }
}

TEST(BiLstm, PaddingContentAndLengthDoNotLeak) {
  Rng rng(3);
  ParamSet p;
  const BiLstmParams b = init_bilstm("enc", 2, 3, rng, p);
  const Tensor x = random_tensor({2, 4, 2}, rng, false);
  const Tensor mask = prefix_mask({3, 1}, 4);
  const Tensor base = bilstm(x, mask, b);

  // Garbage in padded cells.
  Tensor noisy = x.detach();
  auto v = noisy.mutable_data();
  v[3 * 2] = 100.0;
  v[(4 + 2) * 2 + 1] = -50.0;
  const Tensor with_noise = bilstm(noisy, mask, b);
  for (std::size_t i = 0; i < base.numel(); ++i) EXPECT_EQ(with_noise.data()[i], base.data()[i]);

  // Extra trailing padding.
  std::vector<double> wide(2 * 7 * 2, 0.0);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t k = 0; k < 2; ++k) wide[(n * 7 + t) * 2 + k] = x.at({n, t, k});
  const Tensor longer = bilstm(Tensor({2, 7, 2}, wide), prefix_mask({3, 1}, 7), b);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(longer.at({n, t, j}), base.at({n, t, j}), 1e-12);
}

TEST(BiLstm, RejectsBadMasksAndShapes) {
  Rng rng(4);
  ParamSet p;
  const BiLstmParams b = init_bilstm("enc", 2, 2, rng, p);
  const Tensor x = random_tensor({1, 3, 2}, rng, false);
  EXPECT_THROW(bilstm(x, Tensor({1, 3}, {1, 0, 1}), b), ContractError);
  EXPECT_THROW(bilstm(x, Tensor({1, 2}, {1, 1}), b), DimensionError);
  EXPECT_THROW(bilstm(random_tensor({1, 3, 4}, rng), Tensor({1, 3}, {1, 1, 1}), b), DimensionError);
  const Tensor empty = bilstm(x, Tensor({1, 3}, {0, 0, 0}), b);
  for (double v : empty.data()) EXPECT_EQ(v, 0.0);
}

TEST(BiLstm, Gradients) {
  Rng rng(5);
  ParamSet p;
  const BiLstmParams b = init_bilstm("enc", 3, 2, rng, p);
  const Tensor x = random_tensor({2, 4, 3}, rng);
  const Tensor mask = prefix_mask({4, 2}, 4);
  EXPECT_LT(grad_check([&](const Tensor& v) { return dim::testing::weighted_sum(bilstm(v, mask, b)); }, x), 1e-6);
  for (const auto& entry : p.entries()) {
    EXPECT_LT(grad_check(
                  [&](const Tensor& v) {
                    BiLstmParams copy = b;
                    for (LstmCell* c : {&copy.forward, &copy.backward}) {
                      for (Tensor* t : {&c->input_weights, &c->recurrent_weights, &c->bias}) {
                        if (t->node() == entry.tensor.node()) *t = v;
                      }
                    }
                    return dim::testing::weighted_sum(bilstm(x, mask, copy));
                  },
                  entry.tensor),
              1e-6)
        << entry.name;
  }
}
