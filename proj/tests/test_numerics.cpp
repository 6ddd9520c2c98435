// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "xdv/adam.hpp"
#include "xdv/error.hpp"
#include "xdv/grad_check.hpp"
#include "xdv/ops.hpp"
#include "xdv/random.hpp"
#include "xdv/serialize.hpp"

using namespace xdv;

namespace {

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Tensor t(Shape{r, c});
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Naive triple loop, kept independent of the kernel under test.
Tensor triple_loop(const Tensor& a, const Tensor& b) {
  Tensor c(Shape{a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  return c;
}

}  // namespace

TEST(Tensor, RejectsValueCountMismatchAndZeroExtent) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), DimensionError);
  EXPECT_THROW(Shape({2, 0}), DimensionError);
  Tensor t(Shape{2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(t.grad(), ContractError);
  t.set_requires_grad(true);
  EXPECT_EQ(t.grad().size(), t.size());
}

TEST(Matmul, IdentityAndHandArithmetic) {
  Tape tape;
  auto eye = tape.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
  auto m = tape.constant(Tensor::from_rows({{2, 3}, {4, 5}}));
  EXPECT_TRUE(identical(matmul(eye, m).value(), Tensor::from_rows({{2, 3}, {4, 5}})));

  auto row = tape.constant(Tensor::from_rows({{1, 2}}));
  auto col = tape.constant(Tensor::from_rows({{3}, {4}}));
  EXPECT_EQ(matmul(row, col).value()[0], 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape tape;
  auto a = tape.constant(Tensor(Shape{2, 3}));
  auto b = tape.constant(Tensor(Shape{2, 3}));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] and [2x3]"), std::string::npos);
  }
}

TEST(Matmul, MatchesTripleLoopOnRandomShapes) {
  Rng rng(11);
  {
    Tape tape;
    const Tensor a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 2);
    EXPECT_LE(max_abs_diff(matmul(tape.constant(a), tape.constant(b)).value(), triple_loop(a, b)), 1e-12);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.index(16), k = 1 + rng.index(16), n = 1 + rng.index(16);
    const Tensor a = random_matrix(rng, m, k), b = random_matrix(rng, k, n);
    Tape tape;
    EXPECT_LE(max_abs_diff(matmul(tape.constant(a), tape.constant(b)).value(), triple_loop(a, b)), 1e-12)
        << m << "x" << k << "x" << n;
  }
}

TEST(Softmax, SymmetryStabilityAndDirectFormula) {
  Tape tape;
  auto u = softmax(tape.constant(Tensor::vector({0, 0, 0})));
  for (double v : u.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  auto big = softmax(tape.constant(Tensor::vector({1000, 0})));
  EXPECT_TRUE(big.value().all_finite());
  EXPECT_NEAR(big.value()[0], 1.0, 1e-15);
  EXPECT_LT(big.value()[1], 1e-300);

  auto s = softmax(tape.constant(Tensor::vector({1, 2, 3})));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(s.value()[0], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(s.value()[1], std::exp(2.0) / z, 1e-12);
  EXPECT_NEAR(s.value()[2], std::exp(3.0) / z, 1e-12);
}

TEST(Softmax, SumsToOneAcrossWideRange) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(40);
    Tape tape;
    auto s = softmax(tape.constant(random_matrix(rng, 1, n, -1e3, 1e3)), 1);
    double total = 0.0;
    for (double v : s.value().data()) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, AxisZeroNormalisesColumns) {
  Tape tape;
  auto s = softmax(tape.constant(Tensor::from_rows({{1, 5}, {2, 5}, {3, 5}})), 0);
  for (std::size_t c = 0; c < 2; ++c) {
    double col = 0.0;
    for (std::size_t r = 0; r < 3; ++r) col += s.value().at(r, c);
    EXPECT_NEAR(col, 1.0, 1e-12);
  }
  EXPECT_NEAR(s.value().at(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(Backward, QuadraticUnusedAndAccumulation) {
  Tensor w = Tensor::vector({1, 2});
  Tensor unused = Tensor::vector({7, 7});
  w.set_requires_grad(true);
  unused.set_requires_grad(true);
  {
    Tape tape;
    auto wv = tape.leaf(w);
    tape.leaf(unused);
    backward(sum(mul(wv, wv)));
  }
  EXPECT_EQ(w.grad()[0], 2.0);
  EXPECT_EQ(w.grad()[1], 4.0);
  EXPECT_EQ(unused.grad()[0], 0.0);
  EXPECT_EQ(unused.grad()[1], 0.0);

  // A second pass adds on top of the first.
  {
    Tape tape;
    backward(sum(tape.leaf(w)));
  }
  EXPECT_EQ(w.grad()[0], 3.0);
  EXPECT_EQ(w.grad()[1], 5.0);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tensor w = Tensor::vector({1, 2});
  w.set_requires_grad(true);
  Tape tape;
  EXPECT_THROW(backward(scale(tape.leaf(w), 2.0)), ContractError);
}

TEST(Backward, InferenceTapeRecordsNoGradients) {
  Tensor w = Tensor::vector({1, 2});
  w.set_requires_grad(true);
  Tape tape(Tape::Mode::inference);
  auto loss = sum(mul(tape.leaf(w), tape.leaf(w)));
  EXPECT_FALSE(loss.needs_grad());
  backward(loss);
  EXPECT_EQ(w.grad()[0], 0.0);
}

TEST(Adam, ZeroGradientIsIdentity) {
  Tensor w = Tensor::vector({0.3, -1.2, 5.0});
  const Tensor before = w;
  AdamState state;
  std::vector<Tensor*> params{&w};
  std::vector<Tensor> grads{Tensor(w.shape(), 0.0)};
  for (int i = 0; i < 10; ++i) adam_step(params, grads, state);
  EXPECT_TRUE(identical(w, before));
  EXPECT_EQ(state.step, 10u);
}

TEST(Adam, FirstStepIsAlphaTimesSign) {
  Tensor w = Tensor::vector({0.0, 0.0, 0.0});
  AdamState state;
  state.config.alpha = 0.01;
  std::vector<Tensor*> params{&w};
  std::vector<Tensor> grads{Tensor::vector({2.5, -0.004, 1e3})};
  adam_step(params, grads, state);
  // m_hat = g and v_hat = g^2, so the step is alpha * g / (|g| + eps).
  for (std::size_t i = 0; i < 3; ++i) {
    const double g = grads[0][i];
    EXPECT_NEAR(w[i], -0.01 * (g > 0 ? 1.0 : -1.0), 0.01 * 1e-8 / std::abs(g) + 1e-15);
  }
}

TEST(Adam, ConvergesOnOneDimensionalQuadratic) {
  Tensor w = Tensor::vector({0.0});
  w.set_requires_grad(true);
  Adam opt({&w}, {.alpha = 0.01});
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    w.grad()[0] = 2.0 * (w[0] - 3.0);
    opt.step();
  }
  EXPECT_LT(std::abs(w[0] - 3.0), 1e-3);
}

TEST(Adam, ShapeMismatchAndFrozenRegistration) {
  Tensor w = Tensor::vector({0.0, 1.0});
  AdamState state;
  std::vector<Tensor*> params{&w};
  std::vector<Tensor> grads{Tensor::vector({1.0})};
  EXPECT_THROW(adam_step(params, grads, state), DimensionError);
  EXPECT_THROW(Adam({&w}), ContractError);
}

TEST(GradCheck, LinearFunctionIsExact) {
  Tensor w = Tensor::vector({0.5, -2.0, 3.0});
  const Tensor coeff = Tensor::vector({1.0, 2.0, -4.0});
  auto f = taped_objective([&](Tape& t) { return sum(mul(t.leaf(w), t.constant(coeff))); });
  std::vector<NamedTensor> params{{"w", &w}};
  const auto report = grad_check(f, params, 1e-5, 1e-4);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_rel_error, 1e-9);
}

TEST(GradCheck, SoftmaxCrossEntropyToy) {
  Rng rng(3);
  Tensor w = random_matrix(rng, 4, 5);
  Tensor b = Tensor::vector({0.1, -0.2, 0.3, 0.0, 0.05});
  const Tensor x = random_matrix(rng, 3, 4);
  const std::vector<int> targets{1, 4, 0};
  auto f = taped_objective([&](Tape& t) {
    return cross_entropy(add(matmul(t.constant(x), t.leaf(w)), t.leaf(b)), targets);
  });
  std::vector<NamedTensor> params{{"w", &w}, {"b", &b}};
  const auto report = grad_check(f, params, 1e-5, 1e-6);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(GradCheck, DetectsNonDeterminism) {
  Tensor w = Tensor::vector({1.0});
  int calls = 0;
  ScalarObjective f = [&](bool) { return w[0] + 1e-3 * ++calls; };
  std::vector<NamedTensor> params{{"w", &w}};
  EXPECT_THROW(grad_check(f, params), ContractError);
}

TEST(GradCheck, FlagsSmallAnalyticErrors) {
  Tensor w = Tensor::vector({0.3, -0.7});
  std::vector<NamedTensor> params{{"w", &w}};
  for (double bias : {1e-3, 1e-8}) {
    ScalarObjective f = [&](bool with_grad) {
      if (with_grad) {
        w.grad()[0] += 2.0 * w[0] * (1.0 + bias);
        w.grad()[1] += 2.0 * w[1];
      }
      return w[0] * w[0] + w[1] * w[1];
    };
    const auto report = grad_check(f, params);
    EXPECT_EQ(report.passed, bias < 1e-4) << bias << " " << report.max_rel_error;
    EXPECT_EQ(report.entries[0].worst_index, 0u);
  }
}

TEST(GradCheck, EveryOperationPassesOnRandomInputs) {
  Rng rng(17);
  Tensor a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 3), c = random_matrix(rng, 3, 3);
  Tensor bias = random_matrix(rng, 1, 3);
  Tensor table = random_matrix(rng, 6, 3);
  const std::vector<int> ids{5, 0, 5, 2};
  auto f = taped_objective([&](Tape& t) {
    auto A = t.leaf(a), B = t.leaf(b), C = t.leaf(c);
    auto prod = add(matmul(A, B), t.leaf(bias));
    auto act = mul(sigmoid(prod), tanh(transpose(C)));
    auto sm0 = softmax(act, 0);
    auto sm1 = softmax(sub(act, relu(C)), 1);
    auto parts = std::vector<Var>{row(sm0, 2), sm1};
    auto stacked = concat_rows(parts);
    auto wide = concat_cols(std::vector<Var>{slice_cols(stacked, 1, 2), sum_cols(stacked)});
    auto g = gather_rows(t.leaf(table), ids);
    auto terms = std::vector<Var>{sum(mul(wide, wide)), squared_norm(flatten(C)), squared_norm(mean_rows(g)), sum(sum_rows(scale(g, 0.7))),
                                  cross_entropy(add_scalar(prod, 0.3), std::vector<int>{0, 2, 1})};
    return sum(concat_cols(terms));
  });
  std::vector<NamedTensor> params{{"a", &a}, {"b", &b}, {"c", &c}, {"bias", &bias}, {"table", &table}};
  const auto report = grad_check(f, params, 1e-5, 1e-6);
  for (const auto& e : report.entries) EXPECT_LT(e.max_rel_error, 1e-6) << e.name;
}

TEST(GruGates, FusedMatchesComposedPrimitives) {
  Rng rng(23);
  const std::size_t d = 4;
  Tensor gx = random_matrix(rng, 2, 3 * d), gh = random_matrix(rng, 2, 3 * d), h = random_matrix(rng, 2, d);
  Tape tape;
  auto X = tape.leaf(gx), H = tape.leaf(gh), S = tape.leaf(h);
  auto fused = gru_gates(X, H, S);
  // u = sig(xu+hu), r = sig(xr+hr), c = tanh(xc + r*hc), h' = c + u*(h - c)
  auto u = sigmoid(add(slice_cols(X, 0, d), slice_cols(H, 0, d)));
  auto r = sigmoid(add(slice_cols(X, d, d), slice_cols(H, d, d)));
  auto c = tanh(add(slice_cols(X, 2 * d, d), mul(r, slice_cols(H, 2 * d, d))));
  auto composed = add(c, mul(u, sub(S, c)));
  EXPECT_LE(max_abs_diff(fused.value(), composed.value()), 1e-14);

  std::vector<NamedTensor> params{{"gx", &gx}, {"gh", &gh}, {"h", &h}};
  auto f = taped_objective([&](Tape& t) {
    auto y = gru_gates(t.leaf(gx), t.leaf(gh), t.leaf(h));
    return sum(mul(y, y));
  });
  EXPECT_TRUE(grad_check(f, params, 1e-5, 1e-7).passed);
}

TEST(TensorSerialization, RoundTripIsBitwise) {
  Rng rng(9);
  for (std::size_t rank = 0; rank <= 4; ++rank) {
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < rank; ++i) dims.push_back(1 + rng.index(4));
    Tensor t{Shape(std::span<const std::size_t>(dims))};
    for (double& v : t.data()) v = rng.uniform(-1e6, 1e6);
    EXPECT_TRUE(identical(deserialize_tensor(serialize_tensor(t)), t));
  }
}

TEST(TensorSerialization, LayoutAndTruncation) {
  const std::string bytes = serialize_tensor(Tensor::from_rows({{1.5, -2.0}}));
  ASSERT_EQ(bytes.size(), 4u + 4u + 2 * 8u + 2 * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "XDVT");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_THROW(deserialize_tensor(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(deserialize_tensor("XDVQ" + bytes.substr(4)), FormatError);
}
