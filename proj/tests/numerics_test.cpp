#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gentrap/numerics/adam.hpp"
#include "gentrap/numerics/checkpoint.hpp"
#include "gentrap/numerics/grad_check.hpp"
#include "gentrap/numerics/layers.hpp"
#include "gentrap/numerics/ops.hpp"
#include "test_util.hpp"

namespace nx = gentrap::nx;
using gentrap::testing::leaf;
using gentrap::testing::random_tensor;
using Tensor = nx::Tensor<double>;

namespace {

void expect_values(const Tensor& t, const std::vector<double>& expected, double tol = 1e-12) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t[i], expected[i], tol) << "index " << i;
}

nx::AttentionParams<double> random_attention(std::size_t feat, std::size_t heads, std::size_t head_dim, std::uint64_t seed) {
  const std::size_t w = heads * head_dim;
  return {random_tensor({feat, w}, seed), random_tensor({w}, seed + 1), random_tensor({feat, w}, seed + 2),
          random_tensor({w}, seed + 3),   random_tensor({feat, w}, seed + 4), random_tensor({w}, seed + 5),
          random_tensor({w, feat}, seed + 6), random_tensor({feat}, seed + 7)};
}

}  // namespace

// --- matmul -----------------------------------------------------------------

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor m({2, 2}, {1, 2, 3, 4});
  expect_values(nx::matmul(eye, m), {1, 2, 3, 4});
}

TEST(Matmul, RowTimesColumn) {
  const auto out = nx::matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
  EXPECT_EQ(out.shape(), (nx::Shape{1, 1}));
  EXPECT_DOUBLE_EQ(out.item(), 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    nx::matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
    FAIL() << "expected DimensionError";
  } catch (const gentrap::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos);
    EXPECT_NE(msg.find("[4,2]"), std::string::npos);
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  const auto b = random_tensor({4, 2}, 11);
  const auto report = nx::grad_check([&](const Tensor& a) { return nx::sum_all(nx::matmul(a, b)); }, random_tensor({3, 4}, 10),
                                     {.tolerance = 1e-3});
  EXPECT_TRUE(report.passed) << report.max_relative_error;
  const auto a = random_tensor({3, 4}, 12);
  const auto rb = nx::grad_check([&](const Tensor& bb) { return nx::sum_all(nx::square(nx::matmul(a, bb))); },
                                 random_tensor({4, 2}, 13));
  EXPECT_TRUE(rb.passed) << rb.max_relative_error;
}

TEST(Matmul, BatchedGradient) {
  const auto b = random_tensor({2, 3, 4, 2}, 21);
  const auto r = nx::grad_check([&](const Tensor& a) { return nx::sum_all(nx::square(nx::matmul(a, b))); },
                                random_tensor({2, 3, 5, 4}, 20));
  EXPECT_TRUE(r.passed) << r.max_relative_error;
}

// --- elementwise and structural ops ----------------------------------------

TEST(Matmul, AffineMatchesMatmulPlusBiasAndGradients) {
  const auto x = random_tensor({2, 3, 4}, 76), w = random_tensor({4, 5}, 77), b = random_tensor({5}, 78);
  const auto ref = nx::add_bias(nx::matmul(x, w), b);
  expect_values(nx::affine(x, w, b), std::vector<double>(ref.values().begin(), ref.values().end()), 1e-12);
  const auto wt = random_tensor({2, 3, 5}, 79);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::affine(v, w, b), wt)); }, x).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::affine(x, v, b), wt)); }, w).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::affine(x, w, v), wt)); }, b).passed);
}

TEST(ElementwiseOps, GradientsPassAtTightTolerance) {
  const auto x = random_tensor({2, 3, 4}, 30);
  const auto w = random_tensor({2, 3, 4}, 31);
  const auto weighted = [&](const Tensor& y) { return nx::sum_all(nx::mul(y, w)); };
  // relu probed away from the kink
  auto shifted = random_tensor({2, 3, 4}, 32, 0.1, 1.0);
  for (std::size_t i = 0; i < shifted.size(); i += 2) shifted.mutable_values()[i] *= -1.0;
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return weighted(nx::relu(v)); }, shifted).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return weighted(nx::sigmoid(v)); }, x).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return weighted(nx::tanh(v)); }, x).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return weighted(nx::softmax_lastdim(v)); }, x).passed);
  const auto wp = random_tensor({4, 2, 3}, 33);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::permute(v, {2, 0, 1}), wp)); }, x).passed);
  const auto wm = random_tensor({2, 4}, 34);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::mean_axis(v, 1), wm)); }, x).passed);
  const auto ws = random_tensor({2, 4}, 35);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::select(v, 1, 2), ws)); }, x).passed);
  const auto wt = random_tensor({2, 4, 3}, 36);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::transpose_last2(v), wt)); }, x).passed);
  const auto wc = random_tensor({2, 3, 7}, 37);
  const auto other = random_tensor({2, 3, 3}, 38);
  EXPECT_TRUE(
      nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::concat_lastdim<double>({v, other}), wc)); }, x)
          .passed);
  const auto wst = random_tensor({2, 2, 3, 4}, 39);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::stack<double>({v, nx::square(v)}, 1), wst)); }, x)
                  .passed);
  const auto wr = random_tensor({2, 3, 3, 4}, 40);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::repeat_axis(v, 2, 3), wr)); }, x).passed);
  const auto wsl = random_tensor({2, 3, 2}, 41);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return nx::sum_all(nx::mul(nx::slice_lastdim(v, 1, 2), wsl)); }, x).passed);
  const auto bias = random_tensor({4}, 42);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& v) { return weighted(nx::add_bias(v, bias)); }, x).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& b) { return weighted(nx::add_bias(x, b)); }, bias).passed);
}

TEST(Softmax, UniformOnEqualLogits) { expect_values(nx::softmax_lastdim(Tensor({1, 2}, {0, 0})), {0.5, 0.5}); }

TEST(Softmax, RowsArePositiveAndSumToOne) {
  const auto y = nx::softmax_lastdim(random_tensor({7, 5}, 50, -20, 20));
  for (std::size_t r = 0; r < 7; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_GT(y[r * 5 + j], 0.0);
      EXPECT_LT(y[r * 5 + j], 1.0);
      s += y[r * 5 + j];
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(ElementwiseMax, SingletonIsIdentity) {
  const auto x = random_tensor({3, 4}, 60);
  expect_values(nx::elementwise_max_over_set<double>({x}), std::vector<double>(x.values().begin(), x.values().end()), 0.0);
}

TEST(ElementwiseMax, HandCaseAndSubgradientRouting) {
  auto a = leaf({2}, {1, 5});
  auto b = leaf({2}, {4, 2});
  const auto m = nx::elementwise_max_over_set<double>({a, b});
  expect_values(m, {4, 5});
  nx::sum_all(m).backward();
  expect_values(Tensor({2}, std::vector<double>(a.grad().begin(), a.grad().end())), {0, 1});
  expect_values(Tensor({2}, std::vector<double>(b.grad().begin(), b.grad().end())), {1, 0});
}

TEST(ElementwiseMax, TiesRouteToLowestIndex) {
  auto a = leaf({1}, {3});
  auto b = leaf({1}, {3});
  nx::sum_all(nx::elementwise_max_over_set<double>({a, b})).backward();
  EXPECT_EQ(a.grad()[0], 1.0);
  EXPECT_FALSE(b.has_grad());
}

TEST(ElementwiseMax, EmptySetIsPreconditionError) {
  EXPECT_THROW(nx::elementwise_max_over_set<double>({}), gentrap::PreconditionError);
}

TEST(ElementwiseMax, PermutationInvariantAndMonotone) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tensor> set;
    for (int i = 0; i < 4; ++i) set.push_back(random_tensor({5}, rng()));
    const auto base = nx::elementwise_max_over_set(set);
    auto shuffled = set;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto perm = nx::elementwise_max_over_set(shuffled);
    set.push_back(random_tensor({5}, rng()));
    const auto grown = nx::elementwise_max_over_set(set);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(base[i], perm[i]);
      EXPECT_GE(grown[i], base[i]);
    }
  }
}

TEST(ElementwiseMax, AxisFormMatchesSetForm) {
  const auto x = random_tensor({2, 3, 4}, 62);
  const auto via_axis = nx::max_axis(x, 1);
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<Tensor> set;
    for (std::size_t k = 0; k < 3; ++k) set.push_back(nx::select(nx::select(x, 0, b), 0, k));
    const auto via_set = nx::elementwise_max_over_set(set);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(via_axis[b * 4 + i], via_set[i]);
  }
}

TEST(OneHot, MapsIdsToBasisVectors) {
  const std::vector<std::size_t> ids{2, 0};
  expect_values(nx::one_hot<double>(ids, 3), {0, 0, 1, 1, 0, 0});
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(nx::one_hot<double>(bad, 3), gentrap::PreconditionError);
}

TEST(GlobalAveragePool, RemovesTimeAxisByMean) {
  const Tensor x({1, 2, 2}, {1, 2, 3, 6});
  const auto y = nx::mean_axis(x, 1);
  EXPECT_EQ(y.shape(), (nx::Shape{1, 2}));
  expect_values(y, {2, 4});
}

// --- batch norm ---------------------------------------------------------------

namespace {
nx::BatchNormParams<double> fresh_bn(std::size_t f) {
  return {Tensor::full({f}, 1.0), Tensor::zeros({f}), Tensor::zeros({f}), Tensor::full({f}, 1.0)};
}
}  // namespace

TEST(BatchNorm, ConstantChannelNormalizesToZero) {
  auto bn = fresh_bn(1);
  const auto y = nx::batch_norm_features(Tensor::full({2, 3, 1}, 7.5), bn, nx::Mode::train);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(BatchNorm, UnitVarianceSymmetricInputIsFixedPoint) {
  auto bn = fresh_bn(1);
  const auto y = nx::batch_norm_features(Tensor({2, 2, 1}, {-1, 1, 1, -1}), bn, nx::Mode::train);
  expect_values(y, {-1, 1, 1, -1}, 1e-5);
}

TEST(BatchNorm, TrainModeOutputMomentsAreStandard) {
  auto bn = fresh_bn(4);
  const auto y = nx::batch_norm_features(random_tensor({3, 5, 4}, 70, -3, 9), bn, nx::Mode::train);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0, var = 0;
    for (std::size_t r = 0; r < 15; ++r) mean += y[r * 4 + c];
    mean /= 15;
    for (std::size_t r = 0; r < 15; ++r) var += (y[r * 4 + c] - mean) * (y[r * 4 + c] - mean);
    var /= 15;
    EXPECT_LT(std::abs(mean), 1e-5);
    EXPECT_LT(std::abs(var - 1.0), 1e-4);
  }
}

TEST(BatchNorm, InferModeUsesRunningStatistics) {
  auto bn = fresh_bn(1);
  bn.running_mean.mutable_values()[0] = 2.0;
  bn.running_var.mutable_values()[0] = 4.0;
  const auto y = nx::batch_norm_features(Tensor({1, 1, 1}, {6.0}), bn, nx::Mode::infer);
  EXPECT_NEAR(y.item(), 4.0 / std::sqrt(4.0 + 1e-5), 1e-12);
}

TEST(BatchNorm, GradientsInBothModes) {
  auto bn = fresh_bn(4);
  bn.gamma = random_tensor({4}, 71, 0.5, 1.5);
  bn.beta = random_tensor({4}, 72);
  const auto w = random_tensor({2, 3, 4}, 73);
  for (auto mode : {nx::Mode::train, nx::Mode::infer}) {
    const auto r = nx::grad_check(
        [&](const Tensor& x) { return nx::sum_all(nx::mul(nx::batch_norm_features(x, bn, mode), w)); },
        random_tensor({2, 3, 4}, 74, -2, 2), {.tolerance = 1e-5});
    EXPECT_TRUE(r.passed) << r.max_relative_error;
  }
  const auto x = random_tensor({2, 3, 4}, 75);
  const auto rg = nx::grad_check(
      [&](const Tensor& g) {
        auto p = bn;
        p.gamma = g;
        return nx::sum_all(nx::mul(nx::batch_norm_features(x, p, nx::Mode::train), w));
      },
      bn.gamma);
  EXPECT_TRUE(rg.passed) << rg.max_relative_error;
}

// --- conv1d -----------------------------------------------------------------

TEST(Conv1d, IdentityKernelIsIdentity) {
  const auto x = random_tensor({2, 3, 4}, 80);
  Tensor eye = Tensor::zeros({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.mutable_values()[i * 5] = 1.0;
  expect_values(nx::conv1d_pointwise(x, eye, Tensor::zeros({4})), std::vector<double>(x.values().begin(), x.values().end()));
}

TEST(Conv1d, FilterPairPreservesShape) {
  const auto x = random_tensor({3, 5, 17}, 81);
  const auto mid = nx::relu(nx::conv1d_pointwise(x, random_tensor({17, 32}, 82), random_tensor({32}, 83)));
  const auto out = nx::conv1d_pointwise(mid, random_tensor({32, 17}, 84), random_tensor({17}, 85));
  EXPECT_EQ(out.shape(), (nx::Shape{3, 5, 17}));
}

TEST(Conv1d, GradientMatchesFiniteDifferences) {
  const auto w = random_tensor({4, 3}, 86);
  const auto b = random_tensor({3}, 87);
  const auto r = nx::grad_check([&](const Tensor& x) { return nx::sum_all(nx::square(nx::conv1d_pointwise(x, w, b))); },
                                random_tensor({2, 3, 4}, 88), {.tolerance = 1e-3});
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_THROW(nx::conv1d_pointwise(random_tensor({2, 3, 5}, 1), w, b), gentrap::DimensionError);
}

// --- attention ----------------------------------------------------------------

TEST(Attention, ZeroQueriesAndKeysAverageValues) {
  const std::size_t feat = 3, heads = 2, hd = 2, w = heads * hd;
  auto p = random_attention(feat, heads, hd, 90);
  p.wq = Tensor::zeros({feat, w});
  p.bq = Tensor::zeros({w});
  p.wk = Tensor::zeros({feat, w});
  p.bk = Tensor::zeros({w});
  const auto x = random_tensor({2, 4, feat}, 91);
  const auto y = nx::multi_head_attention(x, heads, hd, p);
  const auto expected = nx::add_bias(nx::matmul(nx::add_bias(nx::matmul(nx::mean_axis(x, 1), p.wv), p.bv), p.wo), p.bo);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t f = 0; f < feat; ++f) EXPECT_NEAR(y[(b * 4 + t) * feat + f], expected[b * feat + f], 1e-12);
}

TEST(Attention, SingleStepAttendsToItself) {
  const auto p = random_attention(3, 2, 2, 92);
  const auto x = random_tensor({2, 1, 3}, 93);
  const auto y = nx::multi_head_attention(x, 2, 2, p);
  const auto expected = nx::add_bias(nx::matmul(nx::add_bias(nx::matmul(x, p.wv), p.bv), p.wo), p.bo);
  expect_values(y, std::vector<double>(expected.values().begin(), expected.values().end()), 1e-12);
}

TEST(Attention, DefaultConfigurationPreservesShape) {
  const auto p = random_attention(17, 4, 32, 94);
  EXPECT_EQ(nx::multi_head_attention(random_tensor({2, 5, 17}, 95), 4, 32, p).shape(), (nx::Shape{2, 5, 17}));
}

TEST(Attention, MismatchedWidthsAreConfigErrors) {
  const auto p = random_attention(17, 4, 32, 96);
  EXPECT_THROW(nx::multi_head_attention(random_tensor({2, 5, 16}, 97), 4, 32, p), gentrap::ConfigError);
  EXPECT_THROW(nx::multi_head_attention(random_tensor({2, 5, 17}, 97), 2, 32, p), gentrap::ConfigError);
}

TEST(Attention, GradientMatchesFiniteDifferences) {
  const auto p = random_attention(4, 2, 3, 98);
  const auto w = random_tensor({2, 3, 4}, 99);
  const auto r = nx::grad_check([&](const Tensor& x) { return nx::sum_all(nx::mul(nx::multi_head_attention(x, 2, 3, p), w)); },
                                random_tensor({2, 3, 4}, 100), {.tolerance = 1e-3});
  EXPECT_TRUE(r.passed) << r.max_relative_error;
}

TEST(Attention, ScaledDotProductGradientsPerInput) {
  const auto q = random_tensor({2, 3, 6}, 101), k = random_tensor({2, 3, 6}, 102), v = random_tensor({2, 3, 6}, 103);
  const auto w = random_tensor({2, 3, 6}, 104);
  const auto loss = [&](const Tensor& a, const Tensor& b, const Tensor& c) {
    return nx::sum_all(nx::mul(nx::scaled_dot_product_attention(a, b, c, 2, 3), w));
  };
  EXPECT_TRUE(nx::grad_check([&](const Tensor& x) { return loss(x, k, v); }, q).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& x) { return loss(q, x, v); }, k).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& x) { return loss(q, k, x); }, v).passed);
}

// --- LSTM -------------------------------------------------------------------

namespace {
nx::LstmParams<double> random_lstm(std::size_t in, std::size_t h, std::uint64_t seed) {
  return {random_tensor({in, 4 * h}, seed, -0.5, 0.5), random_tensor({h, 4 * h}, seed + 1, -0.5, 0.5),
          random_tensor({4 * h}, seed + 2, -0.5, 0.5)};
}
double sigm(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace

TEST(Lstm, ZeroWeightsGiveZeroHidden) {
  const nx::LstmParams<double> p{Tensor::zeros({4, 20}), Tensor::zeros({5, 20}), Tensor::zeros({20})};
  const auto out = nx::lstm_layer(random_tensor({2, 3, 4}, 110), p);
  EXPECT_EQ(out.sequence.shape(), (nx::Shape{2, 3, 5}));
  for (double v : out.sequence.values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleStepMatchesDirectCell) {
  const std::size_t in = 3, h = 2;
  const auto p = random_lstm(in, h, 111);
  const auto x = random_tensor({1, 1, in}, 114);
  const auto out = nx::lstm_layer(x, p);
  // direct cell from zero state: c = i*g, h = o*tanh(c)
  for (std::size_t u = 0; u < h; ++u) {
    double pre[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      pre[gate] = p.bias[gate * h + u];
      for (std::size_t f = 0; f < in; ++f) pre[gate] += x[f] * p.w_input[f * 4 * h + gate * h + u];
    }
    const double c = sigm(pre[0]) * std::tanh(pre[2]);
    EXPECT_NEAR(out.last_cell[u], c, 1e-14);
    EXPECT_NEAR(out.last_hidden[u], sigm(pre[3]) * std::tanh(c), 1e-14);
  }
}

TEST(Lstm, GradientMatchesFiniteDifferences) {
  const auto p = random_lstm(4, 5, 120);
  const auto w = random_tensor({2, 3, 5}, 123);
  const auto r = nx::grad_check([&](const Tensor& x) { return nx::sum_all(nx::mul(nx::lstm_layer(x, p).sequence, w)); },
                                random_tensor({2, 3, 4}, 124), {.tolerance = 1e-3});
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  nx::ParameterSet<double> ps;
  ps.add("wx", p.w_input.shape(), {p.w_input.values().begin(), p.w_input.values().end()});
  ps.add("wh", p.w_hidden.shape(), {p.w_hidden.values().begin(), p.w_hidden.values().end()});
  ps.add("b", p.bias.shape(), {p.bias.values().begin(), p.bias.values().end()});
  const auto x = random_tensor({2, 3, 4}, 125);
  const auto rp = nx::grad_check_parameters(
      [&] {
        const nx::LstmParams<double> q{ps.at("wx"), ps.at("wh"), ps.at("b")};
        return nx::sum_all(nx::mul(nx::lstm_layer(x, q).sequence, w));
      },
      ps, {.tolerance = 1e-3});
  EXPECT_TRUE(rp.passed) << rp.max_relative_error;
}

TEST(Lstm, CellGradientsPerInput) {
  const auto pre = random_tensor({2, 12}, 126, -2, 2), c = random_tensor({2, 3}, 127);
  const auto w = random_tensor({2, 6}, 128);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& x) { return nx::sum_all(nx::mul(nx::lstm_cell(x, c), w)); }, pre).passed);
  EXPECT_TRUE(nx::grad_check([&](const Tensor& x) { return nx::sum_all(nx::mul(nx::lstm_cell(pre, x), w)); }, c).passed);
  EXPECT_THROW(nx::lstm_cell(pre, random_tensor({2, 4}, 1)), gentrap::DimensionError);
}

// --- Adam ---------------------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  nx::ParameterSet<double> ps;
  auto& w = ps.add("w", {3}, {1, 2, 3});
  w.mutable_grad();
  nx::AdamState<double> st;
  nx::adam_step(ps, st);
  EXPECT_EQ(st.step, 1u);
  expect_values(ps.at("w"), {1, 2, 3}, 0.0);
}

TEST(Adam, FirstStepMatchesClosedForm) {
  nx::ParameterSet<double> ps;
  auto& w = ps.add("w", {1}, {0.0});
  w.mutable_grad()[0] = 1.0;
  nx::AdamState<double> st{.config = {.learning_rate = 0.1}};
  nx::adam_step(ps, st);
  // m_hat = g, v_hat = g^2 after bias correction
  EXPECT_NEAR(ps.at("w").item(), -0.1 * 1.0 / (1.0 + 1e-8), 1e-15);
  EXPECT_FALSE(ps.at("w").has_grad());
}

TEST(Adam, TwoStepsDecreaseQuadratic) {
  nx::ParameterSet<double> ps;
  ps.add("x", {1}, {1.0});
  nx::AdamState<double> st{.config = {.learning_rate = 0.1}};
  double previous = 1.0;
  for (int i = 0; i < 2; ++i) {
    nx::square(ps.at("x")).backward();
    nx::adam_step(ps, st);
    const double f = ps.at("x").item() * ps.at("x").item();
    EXPECT_LT(f, previous);
    previous = f;
  }
}

TEST(Adam, MissingGradientNamesParameter) {
  nx::ParameterSet<double> ps;
  ps.add("layer.w", {1}, {1.0});
  nx::AdamState<double> st;
  try {
    nx::adam_step(ps, st);
    FAIL();
  } catch (const gentrap::PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.w"), std::string::npos);
  }
}

TEST(Adam, BitwiseDeterministic) {
  auto run = [] {
    nx::ParameterSet<double> ps;
    ps.add("w", {4}, {0.3, -0.2, 0.9, 1.1});
    nx::AdamState<double> st{.config = {.learning_rate = 0.01}};
    const auto x = random_tensor({4}, 130);
    for (int i = 0; i < 5; ++i) {
      nx::sum_all(nx::square(nx::mul(ps.at("w"), x))).backward();
      nx::adam_step(ps, st);
    }
    return std::vector<double>(ps.at("w").values().begin(), ps.at("w").values().end());
  };
  EXPECT_EQ(run(), run());
}

// --- grad_check and checkpoints ---------------------------------------------

TEST(GradCheck, SumOfSquaresAtThree) {
  const auto r = nx::grad_check([](const Tensor& x) { return nx::sum_all(nx::square(x)); }, Tensor({1}, {3.0}));
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_absolute_error, 1e-8);
}

TEST(Checkpoint, RoundTripIsValueExact) {
  nx::ParameterSet<float> ps;
  std::mt19937_64 rng(140);
  ps.add_glorot("a.w", 5, 7, rng);
  ps.add("a.b", {3}, {0.1f, -1e-30f, 3.4e38f});
  ps.add_zeros("bn.running_mean", {2}, false);
  std::stringstream ss;
  nx::write_checkpoint(ss, ps);
  nx::ParameterSet<float> loaded;
  loaded.add_zeros("a.w", {5, 7});
  loaded.add_zeros("a.b", {3});
  loaded.add_zeros("bn.running_mean", {2}, false);
  nx::read_checkpoint(ss, loaded);
  for (std::size_t i = 0; i < ps.entries().size(); ++i) {
    const auto a = ps.entries()[i].tensor.values();
    const auto b = loaded.entries()[i].tensor.values();
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(Checkpoint, RejectsShapeMismatchAndBadHeader) {
  nx::ParameterSet<double> ps;
  ps.add_zeros("w", {2, 2});
  std::stringstream ss;
  nx::write_checkpoint(ss, ps);
  nx::ParameterSet<double> other;
  other.add_zeros("w", {4});
  EXPECT_THROW(nx::read_checkpoint(ss, other), gentrap::SchemaError);
  std::stringstream bad("not-a-checkpoint 1");
  EXPECT_THROW(nx::read_checkpoint(bad, ps), gentrap::SchemaError);
}
