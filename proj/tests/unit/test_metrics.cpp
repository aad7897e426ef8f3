#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "corpus.hpp"
#include "epdkit/core/error.hpp"
#include "epdkit/distort/distort.hpp"
#include "epdkit/metrics/correlation.hpp"
#include "epdkit/metrics/full_reference.hpp"
#include "epdkit/metrics/stats.hpp"
#include "metric_oracles.hpp"

using namespace epd;
using namespace epd::metrics;
using V = std::vector<double>;

namespace {

// ---------------------------------------------------------------- PSNR / SSIM

TEST(Psnr, IdenticalImagesAreInfinite) {
  const ImageBuf img = epd::testing::corpus_image(1, 32);
  EXPECT_EQ(psnr(img, img), std::numeric_limits<double>::infinity());
}

TEST(Psnr, UniformDifferences) {
  EXPECT_NEAR(psnr(ImageBuf(16, 16, 0.25f), ImageBuf(16, 16, 0.35f)), 20.0, 1e-5);
  EXPECT_NEAR(psnr(ImageBuf(16, 16, 0.0f), ImageBuf(16, 16, 0.5f)), 20.0 * std::log10(2.0), 1e-12);
  EXPECT_THROW(psnr(ImageBuf(16, 16), ImageBuf(16, 17)), DimensionError);
}

TEST(Psnr, DecreasesAcrossNoiseTable) {
  const ImageBuf ref = epd::testing::corpus_image(2);
  for (auto kind : {distort::Kind::white_noise, distort::Kind::color_noise}) {
    double previous = std::numeric_limits<double>::infinity();
    for (int level = 1; level <= 5; ++level) {
      const double value = psnr(ref, distort::apply_distortion(ref, {kind, level, 9}));
      EXPECT_LT(value, previous);
      previous = value;
    }
  }
}

TEST(Ssim, IdenticalIsOne) {
  const ImageBuf img = epd::testing::corpus_image(3, 40);
  EXPECT_DOUBLE_EQ(ssim(img, img), 1.0);
}

TEST(Ssim, ConstantImagesReduceToLuminanceTerm) {
  const double expected = (2 * 0.5 * 0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4);
  EXPECT_NEAR(ssim(ImageBuf(16, 16, 0.5f), ImageBuf(16, 16, 0.25f)), expected, 1e-9);
  EXPECT_NEAR(expected, 0.80006, 1e-5);
}

TEST(Ssim, NoiseSeverityLowersSsim) {
  const ImageBuf ref = epd::testing::corpus_image(4);
  const double mild = ssim(ref, distort::apply_distortion(ref, {distort::Kind::white_noise, 1, 3}));
  const double harsh = ssim(ref, distort::apply_distortion(ref, {distort::Kind::white_noise, 5, 3}));
  EXPECT_LT(harsh, mild);
  EXPECT_LE(mild, 1.0);
  EXPECT_GE(harsh, -1.0);
}

TEST(Ssim, RejectsSmallOrMismatchedImages) {
  EXPECT_THROW(ssim(ImageBuf(10, 20), ImageBuf(10, 20)), DimensionError);
  EXPECT_THROW(ssim(ImageBuf(20, 20), ImageBuf(20, 21)), DimensionError);
}

// ---------------------------------------------------------------- correlation examples

TEST(Srcc, Examples) {
  EXPECT_DOUBLE_EQ(srcc(V{1, 2, 3}, V{3, 1, 2}), -0.5);
  EXPECT_DOUBLE_EQ(srcc(V{1, 2, 3, 4}, V{1, 8, 27, 64}), 1.0);
  EXPECT_DOUBLE_EQ(srcc(V{1, 2, 3, 4}, V{4, 3, 2, 1}), -1.0);
  EXPECT_THROW(srcc(V{1, 1, 1}, V{1, 2, 3}), UndefinedError);
  EXPECT_THROW(srcc(V{1, 2}, V{1, 2, 3}), DimensionError);
  EXPECT_THROW(srcc(V{1}, V{1}), RangeError);
}

TEST(Krcc, Examples) {
  EXPECT_NEAR(krcc(V{1, 2, 3}, V{1, 3, 2}), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(krcc(V{4, 1, 7}, V{4, 1, 7}), 1.0);
  EXPECT_DOUBLE_EQ(krcc(V{1, 2}, V{2, 1}), -1.0);
  EXPECT_THROW(krcc(V{2, 2, 2}, V{1, 2, 3}), UndefinedError);
}

TEST(Plcc, Examples) {
  const V x{1, 2, 3, 4, 5};
  V affine(x.size());
  std::transform(x.begin(), x.end(), affine.begin(), [](double v) { return 2 * v + 1; });
  EXPECT_NEAR(plcc(x, affine).value, 1.0, 1e-15);
  EXPECT_NEAR(plcc(V{1, 2, 3}, V{1, 2, 4}).value, 3.0 / std::sqrt(2.0 * 42.0 / 9.0), 1e-15);
  EXPECT_NEAR(plcc(V{1, 2, 3}, V{1, 2, 4}).value, 0.9820, 1e-4);
  EXPECT_NEAR(plcc(x, V{-1, -2, -3, -4, -5}).value, -1.0, 1e-15);
  EXPECT_THROW(plcc(V{1, 2, 3}, V{1, 2, 4}, Mapping::poly3), RangeError);
}

TEST(Plcc, Poly3RecoversCubicExactly) {
  V x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i * 0.3 - 2.0);
    y.push_back(0.5 - x.back() + 0.25 * std::pow(x.back(), 3));
  }
  const Poly3 fit = fit_poly3(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(fit(x[i]), y[i], 1e-10);
  const auto r = plcc(x, y, Mapping::poly3);
  EXPECT_FALSE(r.fallback);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(Plcc, Logistic4RecoversSigmoid) {
  const Logistic4 truth{5.0, 1.0, 0.3, 0.7};
  V x, y;
  Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    x.push_back(rng.uniform(-3, 3));
    y.push_back(truth(x.back()));
  }
  const auto fit = fit_logistic4(x, y);
  ASSERT_TRUE(fit.converged);
  for (double v : x) EXPECT_NEAR(fit.curve(v), truth(v), 1e-6);
  EXPECT_NEAR(plcc(x, y, Mapping::logistic4).value, 1.0, 1e-9);
}

TEST(Plcc, MappingNames) {
  for (auto m : {Mapping::none, Mapping::poly3, Mapping::logistic4}) EXPECT_EQ(parse_mapping(mapping_name(m)), m);
  EXPECT_THROW(parse_mapping("cubic"), RangeError);
}

// ---------------------------------------------------------------- oracle agreement and properties

TEST(Correlation, MatchesDefinitionalOracles) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 5 + rng.below(46);
    const V x = epd::testing::tied_vector(rng, n), y = epd::testing::tied_vector(rng, n);
    ASSERT_NEAR(srcc(x, y), epd::testing::srcc_oracle(x, y), 1e-12) << trial;
    ASSERT_NEAR(krcc(x, y), epd::testing::krcc_oracle(x, y), 1e-12) << trial;
    ASSERT_NEAR(pearson(x, y), epd::testing::pearson_oracle(x, y), 1e-12) << trial;
    ASSERT_EQ(average_ranks(x), epd::testing::rank_oracle(x));
  }
}

TEST(Correlation, InvarianceAndSymmetry) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.below(30);
    const V x = epd::testing::tied_vector(rng, n), y = epd::testing::tied_vector(rng, n);
    V monotone(n), affine(n), negated(n);
    for (std::size_t i = 0; i < n; ++i) {
      monotone[i] = std::exp(0.5 * x[i]) + x[i] * x[i] * x[i];
      affine[i] = 3.0 * x[i] - 7.0;
      negated[i] = -x[i];
    }
    EXPECT_NEAR(srcc(monotone, y), srcc(x, y), 1e-12);
    EXPECT_NEAR(krcc(monotone, y), krcc(x, y), 1e-12);
    EXPECT_NEAR(plcc(affine, y).value, plcc(x, y).value, 1e-12);
    EXPECT_NEAR(plcc(negated, y).value, -plcc(x, y).value, 1e-12);
    EXPECT_NEAR(srcc(x, y), srcc(y, x), 1e-12);
    EXPECT_NEAR(krcc(x, y), krcc(y, x), 1e-12);
    EXPECT_NEAR(plcc(x, y).value, plcc(y, x).value, 1e-12);
  }
}

TEST(Correlation, ReportBundlesAllThree) {
  const V x{1, 2, 3, 4, 5, 6}, y{1, 3, 2, 5, 4, 6};
  const auto r = correlate(x, y, Mapping::poly3);
  EXPECT_EQ(r.n, 6u);
  EXPECT_EQ(r.mapping, Mapping::poly3);
  EXPECT_DOUBLE_EQ(r.srcc, srcc(x, y));
  EXPECT_DOUBLE_EQ(r.krcc, krcc(x, y));
  for (double v : {r.srcc, r.krcc, r.plcc}) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

// ---------------------------------------------------------------- normalization and grouping

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_scores(V{10, 20, 30}), (V{0, 2.5, 5}));
  const V already{0, 1.25, 3.5, 5};
  EXPECT_EQ(normalize_scores(already), already);
  EXPECT_THROW(normalize_scores(V{2, 2, 2}), RangeError);
  EXPECT_THROW(normalize_scores(V{2}), RangeError);
}

TEST(Normalize, PreservesOrderAndHitsEndpoints) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const V raw = epd::testing::tied_vector(rng, 5 + rng.below(40));
    const V out = normalize_scores(raw, -1.0, 4.0);
    EXPECT_EQ(*std::min_element(out.begin(), out.end()), -1.0);
    EXPECT_EQ(*std::max_element(out.begin(), out.end()), 4.0);
    EXPECT_DOUBLE_EQ(srcc(raw, out), 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t j = 0; j < raw.size(); ++j)
        if (raw[i] < raw[j]) {
          ASSERT_LT(out[i], out[j]);
        }
  }
}

TEST(GroupStats, SmallExamples) {
  const std::vector<ScoredItem> items{{"a", 1, 2}, {"a", 1, 2}, {"a", 1, 2}, {"b", 1, 1}, {"b", 1, 3}};
  const std::vector<std::string> groups{"a", "b", "c"};
  const std::vector<int> levels{1};
  const auto stats = group_stats(items, groups, levels);
  ASSERT_EQ(stats.cells.size(), 2u);
  EXPECT_EQ(stats.cells[0].mean, 2.0);
  EXPECT_EQ(stats.cells[0].std, 0.0);
  EXPECT_EQ(stats.cells[1].mean, 2.0);
  EXPECT_EQ(stats.cells[1].std, 1.0);
  EXPECT_EQ(stats.warnings.size(), 1u);
}

TEST(GroupStats, MatchesTwoPassOracleOnFullGrid) {
  Rng rng(5);
  std::vector<ScoredItem> items;
  std::vector<std::string> groups;
  for (int g = 0; g < 25; ++g) groups.push_back("kind" + std::to_string(g));
  const std::vector<int> levels{1, 2, 3, 4, 5};
  for (const auto& g : groups)
    for (int l : levels)
      for (int k = 0; k < 8; ++k) items.push_back({g, l, rng.uniform(0, 5)});
  const auto stats = group_stats(items, groups, levels);
  ASSERT_EQ(stats.cells.size(), 125u);
  ASSERT_EQ(stats.averages.size(), 25u);
  for (const auto& cell : stats.cells) {
    V values;
    for (const auto& it : items)
      if (it.group == cell.group && it.level == cell.level) values.push_back(it.score);
    double mean = 0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    EXPECT_NEAR(cell.mean, mean, 1e-12);
    EXPECT_NEAR(cell.std, std::sqrt(var / values.size()), 1e-12);
  }
  for (int l : levels) {
    double best = -1, worst = 10;
    for (const auto& c : stats.cells)
      if (c.level == l) {
        best = std::max(best, c.mean);
        worst = std::min(worst, c.mean);
      }
    for (const auto& c : stats.cells)
      if (c.level == l && c.group == stats.best.at(l)) {
        EXPECT_EQ(c.mean, best);
      }
    for (const auto& c : stats.cells)
      if (c.level == l && c.group == stats.worst.at(l)) {
        EXPECT_EQ(c.mean, worst);
      }
  }
}

}  // namespace
