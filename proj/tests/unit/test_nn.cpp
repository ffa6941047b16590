#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "courtformer/nn/adam.hpp"
#include "courtformer/nn/grad_check.hpp"
#include "courtformer/nn/layers.hpp"
#include "courtformer/nn/ops.hpp"

using namespace courtformer;
using namespace courtformer::nn;

namespace {

Tensor<double> matrix(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor<double>(Shape{r, c}, std::move(v));
}

Tensor<double> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor<double> t(Shape{r, c});
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Hand-rolled x * W + b used as an independent reference.
std::vector<double> affine_oracle(const std::vector<double>& x, const std::vector<std::vector<double>>& w,
                                  const std::vector<double>& b) {
  std::vector<double> out = b;
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t k = 0; k < x.size(); ++k) out[j] += x[k] * w[k][j];
  }
  return out;
}

}  // namespace

TEST(Linear, IdentityWeightsPassInputThrough) {
  Tape<double> tape;
  auto y = linear(tape.constant(matrix(1, 2, {1, 2})), tape.constant(matrix(2, 2, {1, 0, 0, 1})),
                  tape.constant(Tensor<double>(Shape{2})));
  EXPECT_DOUBLE_EQ(y.value()[0], 1.0);
  EXPECT_DOUBLE_EQ(y.value()[1], 2.0);
}

TEST(Linear, MatchesHandMultiply) {
  const auto expected = affine_oracle({1, 0}, {{2, 3}, {5, 7}}, {1, 1});
  ASSERT_EQ(expected, (std::vector<double>{3, 4}));
  Tape<double> tape;
  auto y = linear(tape.constant(matrix(1, 2, {1, 0})), tape.constant(matrix(2, 2, {2, 3, 5, 7})),
                  tape.constant(Tensor<double>(Shape{2}, std::vector<double>{1, 1})));
  EXPECT_DOUBLE_EQ(y.value()[0], expected[0]);
  EXPECT_DOUBLE_EQ(y.value()[1], expected[1]);
}

TEST(Linear, ZeroInputReturnsBias) {
  Tape<double> tape;
  auto y = linear(tape.constant(matrix(1, 2, {0, 0})), tape.constant(matrix(2, 2, {9, -3, 2, 8})),
                  tape.constant(Tensor<double>(Shape{2}, std::vector<double>{4, -4})));
  EXPECT_DOUBLE_EQ(y.value()[0], 4.0);
  EXPECT_DOUBLE_EQ(y.value()[1], -4.0);
}

TEST(Linear, ShapeMismatchNamesBothShapes) {
  Tape<double> tape;
  try {
    linear(tape.constant(matrix(1, 3, {1, 2, 3})), tape.constant(matrix(2, 2, {1, 0, 0, 1})),
           tape.constant(Tensor<double>(Shape{2})));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[1, 3]"), std::string::npos);
    EXPECT_NE(what.find("[2, 2]"), std::string::npos);
  }
}

TEST(Relu, Definition) {
  Tape<double> tape;
  auto y = relu(tape.constant(Tensor<double>(Shape{3}, std::vector<double>{-1, 0, 2})));
  EXPECT_EQ(y.value(), Tensor<double>(Shape{3}, std::vector<double>({0, 0, 2})));
  auto neg = relu(tape.constant(Tensor<double>(Shape{3}, std::vector<double>{-1, -2, -0.5})));
  for (auto v : neg.value().data()) EXPECT_EQ(v, 0.0);
  auto pos = relu(tape.constant(Tensor<double>(Shape{2}, std::vector<double>{0.5, 3})));
  EXPECT_EQ(pos.value(), Tensor<double>(Shape{2}, std::vector<double>({0.5, 3})));
}

TEST(Relu, SubgradientAtZeroIsZero) {
  Parameter<double> p("x", Tensor<double>(Shape{3}, std::vector<double>{0.0, 1.0, -1.0}));
  Tape<double> tape;
  tape.backward(sum(relu(tape.parameter(p))));
  EXPECT_EQ(p.grad[0], 0.0);
  EXPECT_EQ(p.grad[1], 1.0);
  EXPECT_EQ(p.grad[2], 0.0);
}

TEST(LayerNorm, ConstantVectorCollapsesToShift) {
  Tape<double> tape;
  auto y = layer_norm(tape.constant(matrix(1, 3, {3, 3, 3})), tape.constant(Tensor<double>(Shape{3}, 1.0)),
                      tape.constant(Tensor<double>(Shape{3}, 0.0)), 1e-5);
  for (auto v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, AlreadyStandardizedInput) {
  Tape<double> tape;
  auto y = layer_norm(tape.constant(matrix(1, 2, {1, -1})), tape.constant(Tensor<double>(Shape{2}, 1.0)),
                      tape.constant(Tensor<double>(Shape{2}, 0.0)), 1e-5);
  EXPECT_NEAR(y.value()[0], 1.0, 1e-5);
  EXPECT_NEAR(y.value()[1], -1.0, 1e-5);
}

TEST(LayerNorm, AffineMatchesScalarOracle) {
  // mean 1, biased variance 1: standardized [1, -1], then 2*z + 1.
  const double mean = (2.0 + 0.0) / 2.0;
  const double var = ((2.0 - mean) * (2.0 - mean) + (0.0 - mean) * (0.0 - mean)) / 2.0;
  const double inv = 1.0 / std::sqrt(var + 1e-5);
  Tape<double> tape;
  auto y = layer_norm(tape.constant(matrix(1, 2, {2, 0})), tape.constant(Tensor<double>(Shape{2}, 2.0)),
                      tape.constant(Tensor<double>(Shape{2}, 1.0)), 1e-5);
  EXPECT_NEAR(y.value()[0], 2.0 * (2.0 - mean) * inv + 1.0, 1e-12);
  EXPECT_NEAR(y.value()[1], 2.0 * (0.0 - mean) * inv + 1.0, 1e-12);
  EXPECT_NEAR(y.value()[0], 3.0, 1e-4);
  EXPECT_NEAR(y.value()[1], -1.0, 1e-4);
}

TEST(LayerNorm, StandardizesRandomRows) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor<float> x(Shape{4, 16});
    std::normal_distribution<float> dist(3.0f, 5.0f);
    for (auto& v : x.data()) v = dist(rng);
    Tape<float> tape(false);
    auto y = layer_norm(tape.constant(x), tape.constant(Tensor<float>(Shape{16}, 1.0f)),
                        tape.constant(Tensor<float>(Shape{16}, 0.0f)), 1e-5f);
    for (std::size_t r = 0; r < 4; ++r) {
      double mean = 0, var = 0;
      for (auto v : y.value().row(r)) mean += v;
      mean /= 16;
      for (auto v : y.value().row(r)) var += (v - mean) * (v - mean);
      var /= 16;
      EXPECT_LT(std::abs(mean), 1e-6);
      EXPECT_NEAR(var, 1.0, 1e-4);
    }
  }
}

TEST(MaskedSoftmax, Examples) {
  auto even = masked_softmax(Tensor<double>(Shape{1, 2}, std::vector<double>{0, 0}), std::vector<std::uint8_t>{1, 1});
  EXPECT_DOUBLE_EQ(even[0], 0.5);
  EXPECT_DOUBLE_EQ(even[1], 0.5);

  auto single = masked_softmax(Tensor<double>(Shape{1, 2}, std::vector<double>{5, 100}),
                               std::vector<std::uint8_t>{1, 0});
  EXPECT_EQ(single[0], 1.0);
  EXPECT_EQ(single[1], 0.0);

  // exp(ln 2) = 2 against 1 + 1.
  auto closed = masked_softmax(Tensor<double>(Shape{1, 3}, std::vector<double>{std::log(2.0), 0, 0}),
                               std::vector<std::uint8_t>{1, 1, 1});
  EXPECT_NEAR(closed[0], 2.0 / 4.0, 1e-15);
  EXPECT_NEAR(closed[1], 1.0 / 4.0, 1e-15);
  EXPECT_NEAR(closed[2], 1.0 / 4.0, 1e-15);
}

TEST(MaskedSoftmax, FullyMaskedRowIsRejected) {
  EXPECT_THROW(masked_softmax(Tensor<double>(Shape{2, 2}, std::vector<double>{0, 0, 1, 1}),
                              std::vector<std::uint8_t>{1, 0, 0, 0}),
               InvalidMaskError);
}

TEST(MaskedSoftmax, RowsSumToOneWithExactZeros) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor<float> logits(Shape{3, 9});
    std::normal_distribution<float> dist(0.0f, 10.0f);
    for (auto& v : logits.data()) v = dist(rng);
    std::vector<std::uint8_t> allow(27);
    for (auto& a : allow) a = static_cast<std::uint8_t>(coin(rng));
    for (int r = 0; r < 3; ++r) allow[r * 9 + trial % 9] = 1;
    auto p = masked_softmax(logits, allow);
    for (std::size_t r = 0; r < 3; ++r) {
      double total = 0;
      for (std::size_t j = 0; j < 9; ++j) {
        total += p.at(r, j);
        if (!allow[r * 9 + j]) EXPECT_EQ(p.at(r, j), 0.0f);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(CrossEntropy, Examples) {
  std::vector<double> certain{0.0, 1.0, 0.0};
  EXPECT_EQ(cross_entropy_nll(certain, 1), 0.0);
  std::vector<double> uniform(121, 1.0 / 121.0);
  EXPECT_NEAR(cross_entropy_nll(uniform, 17), std::log(121.0), 1e-12);
  EXPECT_NEAR(cross_entropy_nll(uniform, 17), 4.7958, 1e-4);
  std::vector<double> quarter{0.25, 0.75};
  EXPECT_NEAR(cross_entropy_nll(quarter, 0), std::log(4.0), 1e-15);
  EXPECT_THROW(cross_entropy_nll(quarter, 2), IndexError);
  EXPECT_THROW(cross_entropy_nll(quarter, -1), IndexError);
}

TEST(SoftmaxCrossEntropy, MatchesSoftmaxThenNll) {
  std::mt19937_64 rng(3);
  auto logits = random_matrix(4, 7, rng, 2.0);
  std::vector<std::int32_t> labels{0, 6, 3, 3};
  Tape<double> tape;
  auto loss = softmax_cross_entropy(tape.constant(logits), labels);
  auto p = softmax_rows(logits);
  double expected = 0;
  for (std::size_t r = 0; r < 4; ++r) expected += cross_entropy_nll(p.row(r), labels[r]);
  EXPECT_NEAR(loss.value()[0], expected, 1e-12);
  EXPECT_THROW(softmax_cross_entropy(tape.constant(logits), std::vector<std::int32_t>{0, 7, 0, 0}), IndexError);
}

class AttentionFixture : public ::testing::Test {
 protected:
  AttentionFixture() : rng_(5), mha_(store_, "mha", 8, 2, rng_) {}

  std::mt19937_64 rng_;
  ParameterStore<double> store_;
  MultiHeadAttention<double> mha_;
};

TEST_F(AttentionFixture, SingleTokenReturnsValueProjection) {
  auto x = random_matrix(1, 8, rng_);
  Tape<double> tape;
  auto attended = mha_(tape.constant(x), AttentionMask::all_allowed(1));
  auto expected = mha_.output()(mha_.value()(tape.constant(x)));
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(attended.value()[j], expected.value()[j], 1e-12);
}

TEST_F(AttentionFixture, SelfOnlyMaskIsPerTokenValueTransform) {
  auto x = random_matrix(5, 8, rng_);
  AttentionMask self_only(5);
  for (std::size_t i = 0; i < 5; ++i) self_only.set(i, i, true);
  Tape<double> tape;
  auto attended = mha_(tape.constant(x), self_only);
  for (std::size_t i = 0; i < 5; ++i) {
    Tensor<double> row(Shape{1, 8}, std::vector<double>(x.row(i).begin(), x.row(i).end()));
    auto single = mha_.output()(mha_.value()(tape.constant(row)));
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(attended.value().at(i, j), single.value()[j], 1e-12);
  }
}

TEST_F(AttentionFixture, PermutingTokensPermutesOutputs) {
  const std::size_t s = 6;
  auto x = random_matrix(s, 8, rng_);
  AttentionMask mask(s);
  std::bernoulli_distribution coin(0.6);
  for (std::size_t i = 0; i < s; ++i) {
    mask.set(i, i, true);
    for (std::size_t j = 0; j < s; ++j) {
      if (coin(rng_)) mask.set(i, j, true);
    }
  }
  std::vector<std::size_t> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng_);
  Tensor<double> xp(Shape{s, 8});
  AttentionMask mp(s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < 8; ++j) xp.at(i, j) = x.at(perm[i], j);
    for (std::size_t j = 0; j < s; ++j) mp.set(i, j, mask.allowed(perm[i], perm[j]));
  }
  Tape<double> tape;
  auto y = mha_(tape.constant(x), mask);
  auto yp = mha_(tape.constant(xp), mp);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(yp.value().at(i, j), y.value().at(perm[i], j), 1e-12);
  }
}

TEST_F(AttentionFixture, IdenticalTokensGiveIdenticalRows) {
  auto one = random_matrix(1, 8, rng_);
  Tensor<double> x(Shape{4, 8});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 8; ++j) x.at(i, j) = one[j];
  }
  Tape<double> tape;
  auto y = mha_(tape.constant(x), AttentionMask::all_allowed(4));
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(y.value().at(i, j), y.value().at(0, j));
  }
}

TEST(Attention, IndivisibleWidthIsConfigError) {
  std::mt19937_64 rng(1);
  ParameterStore<float> store;
  EXPECT_THROW(MultiHeadAttention<float>(store, "bad", 10, 4, rng), ConfigError);
}

TEST(Attention, CapturedWeightsArePartitionsWithMaskedZeros) {
  std::mt19937_64 rng(2);
  ParameterStore<double> store;
  MultiHeadAttention<double> mha(store, "mha", 8, 4, rng);
  AttentionMask mask(4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j <= i; ++j) mask.set(i, j, true);
  }
  Tape<double> tape;
  AttentionCapture<double> capture;
  mha(tape.constant(random_matrix(4, 8, rng)), mask, &capture);
  ASSERT_EQ(capture.weights.size(), 4u);
  for (const auto& w : capture.weights) {
    for (std::size_t i = 0; i < 4; ++i) {
      double total = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        total += w.at(i, j);
        if (j > i) EXPECT_EQ(w.at(i, j), 0.0);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Adam, ZeroGradientIsExactNoOp) {
  Tensor<float> value(Shape{3}, std::vector<float>{0.5f, -2.0f, 7.25f});
  const auto before = value;
  AdamState<float> state(value.shape(), AdamOptions{});
  adam_step(value, Tensor<float>(Shape{3}), state);
  EXPECT_EQ(value, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMatchesScalarOracle) {
  // m = 0.1, v = 0.001; bias-corrected both are 1, so the step is lr / (1 + eps).
  const double lr = 1e-6, b1 = 0.9, b2 = 0.999, eps = 1e-9;
  const double m_hat = ((1 - b1) * 1.0) / (1 - b1);
  const double v_hat = ((1 - b2) * 1.0) / (1 - b2);
  const double expected = 0.0 - lr * m_hat / (std::sqrt(v_hat) + eps);
  Tensor<double> value(Shape{1});
  AdamState<double> state(value.shape(), AdamOptions{lr, b1, b2, eps});
  adam_step(value, Tensor<double>(Shape{1}, 1.0), state);
  EXPECT_NEAR(value[0], expected, 1e-18);
  EXPECT_NEAR(value[0], -1e-6, 1e-12);
}

TEST(Adam, ConstantGradientAccumulates) {
  Tensor<double> once(Shape{1}), twice(Shape{1});
  AdamState<double> s1(once.shape(), AdamOptions{}), s2(twice.shape(), AdamOptions{});
  const Tensor<double> g(Shape{1}, 1.0);
  adam_step(once, g, s1);
  adam_step(twice, g, s2);
  adam_step(twice, g, s2);
  EXPECT_LT(twice[0], once[0]);
  EXPECT_EQ(s2.step, 2u);
}

TEST(Adam, OptimizerSkipsFrozenParameters) {
  Parameter<float> live("live", Tensor<float>(Shape{1}, 1.0f));
  Parameter<float> frozen("frozen", Tensor<float>(Shape{1}, 1.0f), false);
  live.grad[0] = 1.0f;
  frozen.grad[0] = 1.0f;
  Adam<float> adam({&live, &frozen}, AdamOptions{0.1});
  adam.step();
  EXPECT_LT(live.value[0], 1.0f);
  EXPECT_EQ(frozen.value[0], 1.0f);
  adam.zero_grad();
  EXPECT_EQ(live.grad[0], 0.0f);
}

TEST(GradCheck, LinearLayerHighPrecision) {
  std::mt19937_64 rng(17);
  ParameterStore<double> store;
  Linear<double> layer(store, "lin", 6, 5, rng);
  auto x = random_matrix(3, 6, rng);
  auto report = grad_check<double>([&](Tape<double>& t) { return sum(mul(layer(t.constant(x)), layer(t.constant(x)))); },
                                   store.all(), GradCheckOptions{200, 1e-6, 1e-8, 1});
  EXPECT_EQ(report.coordinates_checked, 35u);
  EXPECT_LT(report.max_relative_error, 1e-5) << report.worst_coordinate;
}

TEST(GradCheck, EveryLayerType) {
  std::mt19937_64 rng(19);
  ParameterStore<double> store;
  const std::size_t s = 6, d = 8;
  Mlp<double> mlp(store, "mlp", 5, {12, d}, rng);
  TransformerLayer<double> block(store, "block", d, 2, 16, rng);
  TffBlock<double> tff(store, "tff", d, 10, rng);
  Linear<double> head(store, "head", 2 * d, 7, rng);
  auto& table = store.add("table", random_matrix(4, 5, rng));
  AttentionMask mask(s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j <= i; ++j) mask.set(i, j, true);
  }
  std::vector<std::int32_t> labels{0, 3, 6, 2, 1, 5};
  LossBuilder<double> loss = [&](Tape<double>& t) {
    auto rows = gather_rows(t.parameter(table), {0, 1, 2, 3, 1, 0});
    auto h = mlp(rows);
    h = block(h, mask);
    auto gated = mul(sigmoid(tff(h)), tanh(h));
    auto pooled = group_mean(gated, {0, 0, 1, 1, 2, 2}, 3);
    const std::vector<Var<double>> parts{gated, pooled};
    auto both = concat_rows<double>(parts);
    auto mixed = one_minus(scale(both, 0.5));
    auto logits = head(concat_cols(mixed, both));
    auto top = gather_rows(logits, {0, 1, 2, 3, 4, 5});
    return softmax_cross_entropy(top, labels);
  };
  auto report = grad_check<double>(loss, store.all(), GradCheckOptions{400, 1e-6, 1e-6, 3});
  EXPECT_GE(report.coordinates_checked, 200u);
  EXPECT_LT(report.max_relative_error, 1e-3) << report.worst_coordinate;
}

TEST(GradCheck, SecondStepRecoversNearAKink) {
  // relu(x) at x = 4e-6: a 1e-5 step straddles the kink, a 1e-6 step does not.
  ParameterStore<double> store;
  auto& x = store.add("x", Tensor<double>(Shape{1}, 4e-6));
  LossBuilder<double> loss = [&](Tape<double>& t) { return sum(relu(t.parameter(x))); };
  const auto coarse = grad_check<double>(loss, store.all(), GradCheckOptions{1, 1e-5, 1e-6, 0});
  EXPECT_NEAR(coarse.max_relative_error, 0.3, 1e-9);
  const auto retried = grad_check<double>(loss, store.all(), GradCheckOptions{1, 1e-5, 1e-6, 0, 1e-6});
  EXPECT_LT(retried.max_relative_error, 1e-9);
}

TEST(GradCheck, SaturatedPredictionHasNearZeroGradient) {
  Parameter<double> logits("logits", Tensor<double>(Shape{1, 3}, std::vector<double>{60.0, 0.0, 0.0}));
  Tape<double> tape;
  std::vector<std::int32_t> label{0};
  tape.backward(softmax_cross_entropy(tape.parameter(logits), label));
  for (auto g : logits.grad.data()) EXPECT_LT(std::abs(g), 1e-20);
}

TEST(Parameter, ZeroGradClearsExactly) {
  Parameter<float> p("p", Tensor<float>(Shape{2, 2}, 1.0f));
  p.grad.fill(3.5f);
  p.zero_grad();
  for (auto g : p.grad.data()) EXPECT_EQ(g, 0.0f);
  EXPECT_EQ(p.grad.shape(), p.value.shape());
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor<float>(Shape{2, 0}), DimensionError);
}
