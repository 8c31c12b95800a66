#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "cap/ctf.hpp"
#include "cap/ops.hpp"
#include "cap/verify.hpp"

using namespace cap;

namespace {

void expect_tensor_near(const Tensor& got, const Tensor& want, double tol = 1e-12) {
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "at flat index " << i;
}

Tensor run(const std::function<Var(Tape&)>& f) {
  Tape tape;
  return f(tape).value();
}

}  // namespace

TEST(Tensor, ShapeAndDataAgree) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(num_elements(t.shape()), t.size());
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
}

TEST(Tensor, GlorotBoundsAndDeterminism) {
  Rng a(3), b(3);
  const Tensor x = glorot_uniform({10, 20}, 10, 20, a);
  const Tensor y = glorot_uniform({10, 20}, 10, 20, b);
  EXPECT_EQ(x, y);
  const double limit = std::sqrt(6.0 / 30.0);
  for (double v : x.data()) EXPECT_LE(std::abs(v), limit);
}

TEST(Matmul, IdentityCase) {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor got = run([&](Tape& t) { return matmul(t.constant(Tensor::matrix({{1, 0}, {0, 1}})), t.constant(m)); });
  EXPECT_EQ(got, m);
}

TEST(Matmul, SmallProduct) {
  const Tensor got = run([](Tape& t) {
    return matmul(t.constant(Tensor::matrix({{1, 2}, {3, 4}})), t.constant(Tensor::matrix({{5}, {6}})));
  });
  EXPECT_EQ(got, Tensor::matrix({{17}, {39}}));
}

TEST(Matmul, ZeroAnnihilates) {
  Rng rng(1);
  const Tensor got = run([&](Tape& t) { return matmul(t.constant(Tensor({2, 3})), t.constant(uniform({3, 4}, -1, 1, rng))); });
  EXPECT_EQ(got, Tensor({2, 4}));
}

TEST(Matmul, MismatchNamesBothShapes) {
  Tape t;
  try {
    matmul(t.constant(Tensor({2, 3})), t.constant(Tensor({4, 5})));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x5"), std::string::npos) << msg;
  }
}

TEST(Softmax, UniformInput) {
  const Tensor got = run([](Tape& t) { return softmax(t.constant(Tensor({3})), 0); });
  expect_tensor_near(got, Tensor::from({1.0 / 3, 1.0 / 3, 1.0 / 3}));
}

TEST(Softmax, ClosedForm) {
  const Tensor got = run([](Tape& t) { return softmax(t.constant(Tensor::from({0.0, std::log(2.0)})), 0); });
  expect_tensor_near(got, Tensor::from({1.0 / 3, 2.0 / 3}));
}

TEST(Softmax, ShiftInvariantAndStable) {
  Rng rng(2);
  const Tensor x = uniform({3, 5}, -4, 4, rng);
  Tensor shifted = x;
  for (auto& v : shifted.data()) v += 700.0;  // overflows without max subtraction
  const Tensor a = run([&](Tape& t) { return softmax(t.constant(x), 1); });
  const Tensor b = run([&](Tape& t) { return softmax(t.constant(shifted), 1); });
  EXPECT_TRUE(b.all_finite());
  expect_tensor_near(a, b, 1e-12);
}

TEST(Softmax, RowsSumToOneAlongEitherAxis) {
  Rng rng(4);
  const Tensor x = uniform({4, 6}, -3, 3, rng);
  const Tensor rows = run([&](Tape& t) { return softmax(t.constant(x), 1); });
  const Tensor cols = run([&](Tape& t) { return softmax(t.constant(x), 0); });
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 6; ++c) s += rows[r * 6 + c];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  for (std::size_t c = 0; c < 6; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r) s += cols[r * 6 + c];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Conv1x1, IdentityWeights) {
  Rng rng(5);
  const Tensor x = uniform({3, 4, 2}, -1, 1, rng);
  const Tensor got = run([&](Tape& t) {
    return conv1x1(t.constant(x), t.constant(Tensor::matrix({{1, 0}, {0, 1}})), t.constant(Tensor({2})));
  });
  EXPECT_EQ(got, x);
}

TEST(Conv1x1, ScalarCase) {
  const Tensor got = run([](Tape& t) {
    return conv1x1(t.constant(Tensor({1, 1, 2}, {3, 4})), t.constant(Tensor::matrix({{1}, {1}})),
                   t.constant(Tensor({1})));
  });
  EXPECT_EQ(got, Tensor({1, 1, 1}, {7}));
}

TEST(Conv1x1, ChannelMismatch) {
  Tape t;
  EXPECT_THROW(conv1x1(t.constant(Tensor({2, 2, 3})), t.constant(Tensor({2, 4})), t.constant(Tensor({4}))),
               DimensionError);
}

TEST(Conv3x3, DeltaKernelIsIdentity) {
  Rng rng(6);
  const Tensor x = uniform({5, 6, 2}, -1, 1, rng);
  Tensor w({3, 3, 2, 2});
  w.at({1, 1, 0, 0}) = 1.0;
  w.at({1, 1, 1, 1}) = 1.0;
  const Tensor got = run([&](Tape& t) { return conv3x3(t.constant(x), t.constant(w), t.constant(Tensor({2}))); });
  EXPECT_EQ(got, x);
}

TEST(Conv3x3, OnesKernelValid) {
  const Tensor got = run([](Tape& t) {
    return conv3x3(t.constant(Tensor({5, 5, 1}, 1.0)), t.constant(Tensor({3, 3, 1, 1}, 1.0)),
                   t.constant(Tensor({1})), 1, Padding::valid);
  });
  EXPECT_EQ(got, Tensor({3, 3, 1}, 9.0));
}

TEST(Conv3x3, OutputShapeFormula) {
  EXPECT_EQ(conv3x3_output_shape({7, 9, 2}, 5, 2, Padding::same), (Shape{4, 5, 5}));
  EXPECT_EQ(conv3x3_output_shape({7, 9, 2}, 5, 2, Padding::valid), (Shape{3, 4, 5}));
  EXPECT_EQ(conv3x3_output_shape({7, 9, 2}, 5, 1, Padding::valid), (Shape{5, 7, 5}));
}

TEST(Conv3x3, TooSmallForValid) {
  Tape t;
  EXPECT_THROW(conv3x3(t.constant(Tensor({2, 5, 1})), t.constant(Tensor({3, 3, 1, 1})), t.constant(Tensor({1})), 1,
                       Padding::valid),
               DimensionError);
}

TEST(Elementwise, Definitions) {
  const Tensor x = Tensor::from({-3.0, 0.0, 3.0});
  const Tensor th = run([&](Tape& t) { return tanh(t.constant(x)); });
  const Tensor sg = run([&](Tape& t) { return sigmoid(t.constant(x)); });
  const Tensor rl = run([&](Tape& t) { return relu(t.constant(x)); });
  EXPECT_EQ(th[1], 0.0);
  EXPECT_EQ(sg[1], 0.5);
  EXPECT_EQ(rl, Tensor::from({0.0, 0.0, 3.0}));
}

TEST(Elementwise, TrailingBroadcastOnly) {
  Tape t;
  const Var a = t.constant(Tensor({2, 3, 4}, 1.0));
  EXPECT_EQ(add(a, t.constant(Tensor({4}, 2.0))).value(), Tensor({2, 3, 4}, 3.0));
  EXPECT_EQ(mul(a, t.constant(Tensor({3, 4}, 2.0))).value(), Tensor({2, 3, 4}, 2.0));
  EXPECT_EQ(add(a, t.constant(Tensor::scalar(1.0))).value(), Tensor({2, 3, 4}, 2.0));
  EXPECT_THROW(add(a, t.constant(Tensor({2}))), DimensionError);
  EXPECT_THROW(add(a, t.constant(Tensor({2, 3}))), DimensionError);
}

TEST(GlobalAvgPool, Cases) {
  EXPECT_EQ(run([](Tape& t) { return global_avg_pool(t.constant(Tensor({3, 2, 4}, 1.5))); }), Tensor({4}, 1.5));
  EXPECT_EQ(run([](Tape& t) { return global_avg_pool(t.constant(Tensor({2, 2, 1}, {1, 2, 3, 4}))); }),
            Tensor::from({2.5}));
  EXPECT_EQ(run([](Tape& t) { return global_avg_pool(t.constant(Tensor({1, 1, 3}, {1, 2, 3}))); }),
            Tensor::from({1, 2, 3}));
}

TEST(Backward, LinearAndQuadratic) {
  Rng rng(7);
  const Tensor x = uniform({3, 4}, -2, 2, rng);
  {
    Tape t;
    const Var v = t.leaf(x);
    t.backward(sum(v));
    EXPECT_EQ(t.grad(v), Tensor({3, 4}, 1.0));
  }
  {
    Tape t;
    const Var v = t.leaf(x);
    t.backward(sum(mul(v, v)));
    Tensor want = x;
    for (auto& e : want.data()) e *= 2.0;
    EXPECT_EQ(t.grad(v), want);
  }
}

TEST(Backward, UnreachedLeafGetsZero) {
  Tape t;
  const Var a = t.leaf(Tensor({2}, 1.0));
  const Var b = t.leaf(Tensor({3}, 1.0));
  t.backward(sum(a));
  EXPECT_EQ(t.grad(b), Tensor({3}));
}

TEST(Backward, NonScalarLossRejected) {
  Tape t;
  const Var a = t.leaf(Tensor({2}, 1.0));
  EXPECT_THROW(t.backward(a), ContractViolation);
}

TEST(Backward, SecondPassRejected) {
  Tape t;
  const Var a = t.leaf(Tensor({2}, 1.0));
  const Var loss = sum(a);
  t.backward(loss);
  EXPECT_TRUE(t.consumed());
  EXPECT_THROW(t.backward(loss), ContractViolation);
}

TEST(Backward, CompositeGraphMatchesFiniteDifferences) {
  Rng rng(8);
  const verify::GraphFn f = [](Tape&, const std::vector<Var>& in) {
    return softmax(tanh(add(matmul(in[0], in[1]), in[2])), 1);
  };
  const double err = verify::gradcheck(f, {uniform({3, 4}, -1, 1, rng), uniform({4, 5}, -1, 1, rng),
                                           uniform({5}, -1, 1, rng)});
  EXPECT_LT(err, 1e-6);
}

TEST(Ctf, RoundTripIsBitExact) {
  Rng rng(9);
  const Tensor x = normal({2, 3, 4}, 1e3, rng);
  std::stringstream ss;
  ctf::write(ss, x);
  EXPECT_EQ(ss.str().substr(0, 4), "CTF1");
  EXPECT_EQ(ss.str().size(), 4 + 4 + 3 * 8 + 24 * 8u);
  EXPECT_EQ(ctf::read(ss), x);
}

TEST(Ctf, BadMagicAndTruncation) {
  Rng rng(10);
  std::stringstream ss;
  ctf::write(ss, uniform({5}, 0, 1, rng));
  std::string bytes = ss.str();
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream a(bad), b(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(ctf::read(a), FormatError);
  EXPECT_THROW(ctf::read(b), FormatError);
}
