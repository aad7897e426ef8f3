#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "epdkit/autodiff/ops.hpp"
#include "epdkit/autodiff/optim.hpp"
#include "epdkit/core/error.hpp"
#include "gradcheck.hpp"

using namespace epd;
using namespace epd::ad;
using epd::testing::check_gradients;
using epd::testing::distinct_tensor;
using epd::testing::project;
using epd::testing::random_tensor;
using epd::testing::TapeD;
using epd::testing::TensorD;
using epd::testing::VarD;

namespace {

constexpr int kInstances = 20;
constexpr double kOpTolerance = 1e-4;

// Direct convolution loop, independent of the im2col/GEMM path.
TensorD naive_conv(const TensorD& x, const TensorD& w, const TensorD& b, int stride, int pad) {
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const auto k = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  TensorD out({n, k, oh, ow});
  for (std::size_t b0 = 0; b0 < n; ++b0)
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b[o];
          for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long iy = static_cast<long>(oy * stride + i) - pad;
                const long ix = static_cast<long>(ox * stride + j) - pad;
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
                acc += x[((b0 * c + ci) * h + iy) * wd + ix] * w[((o * c + ci) * kh + i) * kw + j];
              }
          out[((b0 * k + o) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- conv2d

TEST(Conv2d, ScalarKernelScalesInput) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 1, 2, 2}, {1, 2, 3, 4}));
  auto w = tape.constant(TensorD({1, 1, 1, 1}, {2}));
  auto b = tape.constant(TensorD({1}, {0}));
  auto y = conv2d(x, w, b, 1, 0);
  EXPECT_EQ(y.value(), TensorD({1, 1, 2, 2}, {2, 4, 6, 8}));
}

TEST(Conv2d, IdentityKernelIsExactIdentity) {
  for (int seed = 0; seed < 5; ++seed) {
    Tape<float> tape;
    Tensor<float> xin = random_tensor({2, 3, 7, 6}, seed).cast<float>();
    Tensor<float> kernel({3, 3, 3, 3});
    for (std::size_t c = 0; c < 3; ++c) kernel[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0f;
    auto y = conv2d(tape.constant(xin), tape.constant(kernel), tape.constant(Tensor<float>({3})), 1, 1);
    EXPECT_EQ(y.value(), xin);
  }
}

TEST(Conv2d, MatchesDirectLoop) {
  for (int seed = 0; seed < kInstances; ++seed) {
    const int stride = 1 + seed % 2, pad = seed % 3;
    TensorD x = random_tensor({2, 3, 7, 6}, seed), w = random_tensor({4, 3, 3, 3}, seed + 100),
            b = random_tensor({4}, seed + 200);
    Tape<double> tape;
    auto y = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), stride, pad);
    TensorD expected = naive_conv(x, w, b, stride, pad);
    ASSERT_EQ(y.shape(), expected.shape());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.value()[i], expected[i], 1e-12);
  }
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kInstances; ++seed) {
    const int stride = seed % 3 == 2 ? 2 : 1;
    auto build = [&](TapeD&, const std::vector<VarD>& v) {
      return project(conv2d(v[0], v[1], v[2], stride, 1), seed);
    };
    auto r = check_gradients(build, {random_tensor({1, 2, 5, 5}, seed), random_tensor({3, 2, 3, 3}, seed + 50),
                                     random_tensor({3}, seed + 90)});
    EXPECT_LT(r.max_rel_error, kOpTolerance) << "seed " << seed;
  }
}

TEST(Conv2d, PointwiseGradientMatchesFiniteDifferences) {
  auto build = [](TapeD&, const std::vector<VarD>& v) { return project(conv2d(v[0], v[1], v[2], 1, 0), 3); };
  auto r = check_gradients(build, {random_tensor({2, 3, 4, 4}, 1), random_tensor({2, 3, 1, 1}, 2),
                                   random_tensor({2}, 3)});
  EXPECT_LT(r.max_rel_error, kOpTolerance);
}

TEST(Conv2d, ChannelMismatchNamesAxis) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 3, 4, 4}));
  auto w = tape.constant(TensorD({2, 2, 3, 3}));
  auto b = tape.constant(TensorD({2}));
  try {
    conv2d(x, w, b, 1, 1);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("axis 1"), std::string::npos) << e.what();
  }
}

TEST(Conv2d, KernelLargerThanPaddedInputRejected) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 1, 3, 3}));
  auto w = tape.constant(TensorD({1, 1, 7, 7}));
  auto b = tape.constant(TensorD({1}));
  EXPECT_THROW(conv2d(x, w, b, 1, 1), DimensionError);
  EXPECT_NO_THROW(conv2d(x, w, b, 1, 2));
}

// ---------------------------------------------------------------- pooling

TEST(Pool, WindowedMaxAndAverage) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(pool(x, PoolMode::max, 2, 2).value().item(), 4.0);
  EXPECT_EQ(pool(x, PoolMode::avg, 2, 2).value().item(), 2.5);
}

TEST(Pool, GlobalModesEmitOnePerChannel) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({2, 3, 4, 5}, 0.37));
  auto avg = pool(x, PoolMode::global_avg);
  EXPECT_EQ(avg.shape(), (Shape{2, 3, 1, 1}));
  for (double v : avg.value().values()) EXPECT_NEAR(v, 0.37, 1e-15);
  EXPECT_EQ(pool(x, PoolMode::global_max).shape(), (Shape{2, 3, 1, 1}));
}

TEST(Pool, WindowLargerThanExtentRejected) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 1, 2, 3}));
  EXPECT_THROW(pool(x, PoolMode::max, 3, 1), DimensionError);
}

TEST(Pool, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kInstances; ++seed) {
    for (PoolMode mode : {PoolMode::max, PoolMode::avg, PoolMode::global_avg, PoolMode::global_max}) {
      auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(pool(v[0], mode, 2, 2), seed); };
      auto r = check_gradients(build, {distinct_tensor({2, 2, 4, 6}, seed)});
      EXPECT_LT(r.max_rel_error, kOpTolerance) << "seed " << seed << " mode " << static_cast<int>(mode);
    }
  }
}

// ---------------------------------------------------------------- channel reduction

TEST(ReduceChannel, AverageOfTwoChannels) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 2, 1, 1}, {1, 3}));
  EXPECT_EQ(reduce_channel(x, ChannelReduce::avg).value().item(), 2.0);
}

TEST(ReduceChannel, MaxEqualsAverageWhenChannelsAgree) {
  Tape<double> tape;
  TensorD x({2, 4, 3, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 9);  // same per channel
  auto v = tape.constant(x);
  EXPECT_EQ(reduce_channel(v, ChannelReduce::max).value(), reduce_channel(v, ChannelReduce::avg).value());
}

TEST(ReduceChannel, MatchesPerPixelLoop) {
  for (int seed = 0; seed < kInstances; ++seed) {
    TensorD x = random_tensor({2, 5, 3, 4}, seed);
    Tape<double> tape;
    auto v = tape.constant(x);
    auto mx = reduce_channel(v, ChannelReduce::max).value();
    auto av = reduce_channel(v, ChannelReduce::avg).value();
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t p = 0; p < 12; ++p) {
        double best = -1e300, total = 0;
        for (std::size_t c = 0; c < 5; ++c) {
          best = std::max(best, x[(b * 5 + c) * 12 + p]);
          total += x[(b * 5 + c) * 12 + p];
        }
        EXPECT_EQ(mx[b * 12 + p], best);
        EXPECT_DOUBLE_EQ(av[b * 12 + p], total / 5.0);
      }
  }
}

TEST(ReduceChannel, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kInstances; ++seed) {
    for (ChannelReduce mode : {ChannelReduce::max, ChannelReduce::avg}) {
      auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(reduce_channel(v[0], mode), seed); };
      auto r = check_gradients(build, {distinct_tensor({2, 3, 3, 3}, seed)});
      EXPECT_LT(r.max_rel_error, kOpTolerance);
    }
  }
}

TEST(ConcatChannels, GradientRoutesToParts) {
  auto build = [](TapeD&, const std::vector<VarD>& v) {
    std::vector<VarD> parts{v[0], v[1]};
    return project(concat_channels<double>(parts), 9);
  };
  auto r = check_gradients(build, {random_tensor({2, 1, 3, 3}, 1), random_tensor({2, 2, 3, 3}, 2)});
  EXPECT_LT(r.max_rel_error, kOpTolerance);
}

// ---------------------------------------------------------------- upsampling

TEST(Upsample, ConstantStaysConstant) {
  Tape<double> tape;
  auto x = tape.constant(TensorD({1, 2, 3, 5}, 0.7));
  for (auto [h, w] : {std::pair{3, 5}, {7, 11}, {1, 1}, {16, 2}}) {
    for (double v : upsample_bilinear(x, h, w).value().values()) EXPECT_NEAR(v, 0.7, 1e-15);
  }
}

TEST(Upsample, SinglePixelBroadcasts) {
  Tape<double> tape;
  auto y = upsample_bilinear(tape.constant(TensorD({1, 1, 1, 1}, {0.25})), 4, 4);
  EXPECT_EQ(y.value(), TensorD({1, 1, 4, 4}, 0.25));
}

TEST(Upsample, CornersSampleInputCorners) {
  TensorD x = random_tensor({1, 1, 3, 4}, 5);
  Tape<double> tape;
  auto y = upsample_bilinear(tape.constant(x), 9, 10).value();
  EXPECT_EQ(y[0], x[0]);
  EXPECT_EQ(y[9], x[3]);
  EXPECT_EQ(y[80], x[8]);
  EXPECT_EQ(y[89], x[11]);
}

TEST(Upsample, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kInstances; ++seed) {
    auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(upsample_bilinear(v[0], 4, 4), seed); };
    auto r = check_gradients(build, {random_tensor({1, 2, 2, 2}, seed)});
    EXPECT_LT(r.max_rel_error, kOpTolerance);
  }
}

// ---------------------------------------------------------------- activations

TEST(Activation, KnownValues) {
  Tape<double> tape;
  EXPECT_EQ(sigmoid(tape.constant(TensorD::scalar(0.0))).value().item(), 0.5);
  auto r = relu(tape.constant(TensorD({2}, {-1.0, 2.0}))).value();
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 2.0);
}

TEST(Activation, SigmoidStrictlyInsideUnitInterval) {
  Tape<float> tape;
  Tensor<float> x({7}, {-1000.f, -90.f, -20.f, 0.f, 20.f, 90.f, 1000.f});
  for (float v : sigmoid(tape.constant(x)).value().values()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
  for (float v : relu(tape.constant(random_tensor({50}, 3).cast<float>())).value().values()) EXPECT_GE(v, 0.0f);
}

TEST(Activation, SigmoidGradientAbsoluteError) {
  for (int seed = 0; seed < kInstances; ++seed) {
    auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(sigmoid(v[0]), seed); };
    auto r = check_gradients(build, {random_tensor({10}, seed, -4.0, 4.0)});
    EXPECT_LT(r.max_abs_error, 1e-6);
  }
}

TEST(Activation, ReluGradientAwayFromKink) {
  for (int seed = 0; seed < kInstances; ++seed) {
    auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(relu(v[0]), seed); };
    // distinct_tensor values sit on a 0.05 grid offset from zero by at least 0.025
    TensorD x = distinct_tensor({12}, seed);
    for (double& v : x.values()) v += 0.025;
    EXPECT_LT(check_gradients(build, {x}).max_rel_error, kOpTolerance);
  }
}

// ---------------------------------------------------------------- linear

TEST(Linear, IdentityWeightAndZeroBias) {
  TensorD x = random_tensor({3, 4}, 1);
  TensorD eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  Tape<double> tape;
  EXPECT_EQ(linear(tape.constant(x), tape.constant(eye), tape.constant(TensorD({4}))).value(), x);
}

TEST(Linear, ZeroWeightYieldsBiasRows) {
  TensorD bias({2}, {0.5, -1.5});
  Tape<double> tape;
  auto y = linear(tape.constant(random_tensor({3, 4}, 1)), tape.constant(TensorD({4, 2})), tape.constant(bias)).value();
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(y[r * 2], 0.5);
    EXPECT_EQ(y[r * 2 + 1], -1.5);
  }
}

TEST(Linear, MatchesTripleLoop) {
  for (int seed = 0; seed < kInstances; ++seed) {
    TensorD x = random_tensor({3, 4}, seed), w = random_tensor({4, 2}, seed + 1), b = random_tensor({2}, seed + 2);
    Tape<double> tape;
    auto y = linear(tape.constant(x), tape.constant(w), tape.constant(b)).value();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double acc = b[j];
        for (std::size_t k = 0; k < 4; ++k) acc += x[i * 4 + k] * w[k * 2 + j];
        EXPECT_NEAR(y[i * 2 + j], acc, 1e-12);
      }
  }
}

TEST(Linear, InnerDimensionMismatchRejected) {
  Tape<double> tape;
  EXPECT_THROW(linear(tape.constant(TensorD({3, 4})), tape.constant(TensorD({5, 2})), tape.constant(TensorD({2}))),
               DimensionError);
}

TEST(Linear, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kInstances; ++seed) {
    auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(linear(v[0], v[1], v[2]), seed); };
    auto r = check_gradients(build, {random_tensor({3, 4}, seed), random_tensor({4, 2}, seed + 7),
                                     random_tensor({2}, seed + 8)});
    EXPECT_LT(r.max_rel_error, kOpTolerance);
  }
}

// ---------------------------------------------------------------- elementwise

TEST(Elementwise, OnesMaskIsBitwiseIdentity) {
  Tensor<float> x = random_tensor({2, 3, 4, 5}, 11).cast<float>();
  Tape<float> tape;
  auto y = mul(tape.constant(x), tape.constant(Tensor<float>({3, 1, 1}, 1.0f)));
  EXPECT_EQ(y.value(), x);
}

TEST(Elementwise, ScalarZeroAnnihilates) {
  Tape<double> tape;
  auto y = mul(tape.constant(TensorD::scalar(0.0)), tape.constant(random_tensor({2, 3}, 1)));
  EXPECT_EQ(y.value(), TensorD({2, 3}, 0.0));
}

TEST(Elementwise, IncompatibleShapesRejected) {
  Tape<double> tape;
  EXPECT_THROW(add(tape.constant(TensorD({2, 3})), tape.constant(TensorD({4}))), DimensionError);
}

TEST(Elementwise, BroadcastGradientsMatchFiniteDifferences) {
  const std::vector<std::pair<Shape, Shape>> cases{
      {{2, 3, 4, 4}, {3, 1, 1}}, {{2, 3, 4, 4}, {2, 1, 4, 4}}, {{2, 3}, {2, 3}}, {{1, 4}, {3, 1}}};
  for (int seed = 0; seed < kInstances; ++seed) {
    for (const auto& [sa, sb] : cases) {
      for (Binary op : {Binary::add, Binary::mul}) {
        auto build = [&](TapeD&, const std::vector<VarD>& v) { return project(elementwise(v[0], v[1], op), seed); };
        auto r = check_gradients(build, {random_tensor(sa, seed), random_tensor(sb, seed + 3)});
        EXPECT_LT(r.max_rel_error, kOpTolerance);
      }
    }
  }
}

// ---------------------------------------------------------------- loss and backward

TEST(MseLoss, KnownValues) {
  Tape<double> tape;
  EXPECT_EQ(mse_loss(tape.constant(TensorD({2}, {1, 2})), tape.constant(TensorD({2}, {1, 3}))).value().item(), 0.5);
  EXPECT_EQ(mse_loss(tape.constant(TensorD({3}, {1, 2, 3})), tape.constant(TensorD({3}, {1, 2, 3}))).value().item(), 0.0);
}

TEST(MseLoss, ClosedFormGradient) {
  TensorD pred = random_tensor({5}, 1), target = random_tensor({5}, 2);
  Tape<double> tape;
  auto p = tape.leaf(pred);
  tape.backward(mse_loss(p, tape.constant(target)));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(p.grad()[i], 2.0 * (pred[i] - target[i]) / 5.0, 1e-15);
  auto build = [](TapeD&, const std::vector<VarD>& v) { return mse_loss(v[0], v[1]); };
  EXPECT_LT(check_gradients(build, {pred, target}).max_rel_error, kOpTolerance);
}

TEST(MseLoss, LengthMismatchRejected) {
  Tape<double> tape;
  EXPECT_THROW(mse_loss(tape.constant(TensorD({2})), tape.constant(TensorD({3}))), DimensionError);
}

TEST(Backward, SumSeedsOnes) {
  Tape<double> tape;
  auto w = tape.leaf(random_tensor({3, 2}, 4));
  tape.backward(sum(w));
  EXPECT_EQ(w.grad(), TensorD({3, 2}, 1.0));
}

TEST(Backward, CompositeRegressionGraph) {
  for (int seed = 0; seed < kInstances; ++seed) {
    auto build = [](TapeD& tape, const std::vector<VarD>& v) {
      auto pred = reshape(sigmoid(linear(v[0], v[1], v[2])), {4});
      return mse_loss(pred, tape.constant(TensorD({4}, {0.1, 0.9, 0.4, 0.6})));
    };
    auto r = check_gradients(build, {random_tensor({4, 3}, seed), random_tensor({3, 1}, seed + 1),
                                     random_tensor({1}, seed + 2)});
    EXPECT_LT(r.max_rel_error, kOpTolerance);
  }
}

TEST(Backward, SecondCallRecomputesInsteadOfAccumulating) {
  Tape<double> tape;
  auto w = tape.leaf(random_tensor({4}, 1));
  auto loss = sum(mul(w, w));
  tape.backward(loss);
  const TensorD first = w.grad();
  tape.backward(loss);
  EXPECT_EQ(w.grad(), first);
}

TEST(Backward, NonScalarLossRejected) {
  Tape<double> tape;
  auto w = tape.leaf(random_tensor({4}, 1));
  EXPECT_THROW(tape.backward(relu(w)), ContractError);
}

TEST(Backward, DeterministicAcrossIdenticalTapes) {
  auto run = [] {
    Tape<float> tape;
    auto x = tape.leaf(random_tensor({2, 3, 8, 8}, 1).cast<float>());
    auto w = tape.leaf(random_tensor({4, 3, 3, 3}, 2).cast<float>());
    auto b = tape.leaf(random_tensor({4}, 3).cast<float>());
    auto y = pool(relu(conv2d(x, w, b, 2, 1)), PoolMode::global_max);
    tape.backward(sum(y));
    return std::vector<Tensor<float>>{x.grad(), w.grad(), b.grad()};
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, SharedParameterAccumulatesOnce) {
  Parameter<double> p{"w", TensorD({2}, {1.5, -2.0}), std::nullopt};
  Tape<double> tape;
  auto a = tape.param(p);
  auto b = tape.param(p);
  EXPECT_EQ(a.id(), b.id());
  tape.backward(sum(mul(a, b)));
  std::vector<Parameter<double>*> params{&p};
  copy_gradients(tape, params);
  ASSERT_TRUE(p.grad);
  EXPECT_EQ(*p.grad, TensorD({2}, {3.0, -4.0}));
}

// ---------------------------------------------------------------- optimizers

TEST(Optimizer, SgdStep) {
  Parameter<double> p{"w", TensorD::scalar(1.0), TensorD::scalar(0.5)};
  Optimizer<double> opt({OptimizerKind::sgd, 0.1});
  opt.step({&p});
  EXPECT_NEAR(p.value.item(), 0.95, 1e-15);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  Parameter<double> p{"w", TensorD::scalar(1.0), TensorD::scalar(0.5)};
  OptimizerConfig cfg;
  cfg.lr = 0.1;
  Optimizer<double> opt(cfg);
  opt.step({&p});
  EXPECT_NEAR(p.value.item(), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p.value.item(), 0.9, 1e-7);
}

TEST(Optimizer, SgdConvergesOnQuadratic) {
  Parameter<double> p{"w", TensorD::scalar(0.0), std::nullopt};
  Optimizer<double> opt({OptimizerKind::sgd, 0.1});
  for (int i = 0; i < 200; ++i) {
    Tape<double> tape;
    auto w = tape.param(p);
    auto diff = add(w, tape.constant(TensorD::scalar(-3.0)));
    tape.backward(sum(mul(diff, diff)));
    copy_gradients(tape, {&p});
    opt.step({&p});
  }
  EXPECT_LT(std::abs(p.value.item() - 3.0), 1e-6);
}

TEST(Optimizer, MissingGradientNamesParameter) {
  Parameter<double> a{"alpha", TensorD::scalar(1.0), TensorD::scalar(0.1)};
  Parameter<double> b{"beta", TensorD::scalar(1.0), std::nullopt};
  Optimizer<double> opt({OptimizerKind::sgd, 0.1});
  try {
    opt.step({&a, &b});
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  EXPECT_EQ(a.value.item(), 1.0);
}
