#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tabnet/one_hot.hpp"
#include "tabnet/selftest/oracles.hpp"
#include "tabnet/tas/augment.hpp"
#include "tabnet/tas/loss.hpp"

namespace tabnet::tas {
namespace {

ScribbleMask mask_with(int H, int W, std::initializer_list<std::tuple<int, int, int>> pixels) {
  Plane<int> labels(H, W, 4);
  for (auto [r, c, v] : pixels) labels(r, c) = v;
  return {std::move(labels), 4};
}

Image ramp(int H, int W) {
  Image img(H, W);
  for (int i = 0; i < H * W; ++i) img.values()[i] = static_cast<float>(i) * 0.25f - 3.0f;
  return img;
}

TEST(Cutout, DegenerateBox) {
  const auto box = infer_cutout_box(mask_with(12, 12, {{5, 5, 2}, {1, 1, 0}}), 0);
  EXPECT_EQ(box, (CutoutBox{5, 5, 5, 5, 0.0f}));
}

TEST(Cutout, TightAndClampedBox) {
  const auto mask = mask_with(12, 12, {{2, 3, 1}, {10, 7, 3}, {0, 0, 0}});
  EXPECT_EQ(infer_cutout_box(mask, 0), (CutoutBox{2, 10, 3, 7, 0.0f}));
  EXPECT_EQ(infer_cutout_box(mask, 2), (CutoutBox{0, 11, 1, 9, 0.0f}));
}

TEST(Cutout, NoForegroundThrows) {
  EXPECT_THROW(infer_cutout_box(mask_with(6, 6, {{1, 1, 0}}), 3), NoForeground);
}

TEST(Cutout, WholeImageBoxZeroes) {
  const auto out = apply_cutout(ramp(6, 8), CutoutBox{0, 5, 0, 7, 0.0f});
  for (float v : out.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Cutout, OnlyBoxPixelsChange) {
  const auto in = ramp(6, 8);
  const auto out = apply_cutout(in, CutoutBox{3, 3, 4, 4, 100.0f});
  int changed = 0;
  for (std::size_t i = 0; i < in.size(); ++i) changed += in.values()[i] != out.values()[i];
  EXPECT_EQ(changed, 1);
  EXPECT_EQ(out(3, 4), 100.0f);
}

TEST(Cutout, CheckerAbsoluteDifferenceMatchesBoxSum) {
  Image checker(10, 10);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) checker(r, c) = ((r + c) % 2) ? 1.5f : -0.5f;
  const CutoutBox box{2, 6, 3, 8, 0.25f};
  const auto out = apply_cutout(checker, box);
  double changed = 0.0, expected = 0.0;
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      changed += std::abs(out(r, c) - checker(r, c));
      if (box.contains(r, c)) expected += std::abs(box.fill_value - checker(r, c));
    }
  }
  EXPECT_DOUBLE_EQ(changed, expected);
}

TEST(Cutout, RejectsBoxOutsideImage) {
  EXPECT_THROW(apply_cutout(ramp(4, 4), CutoutBox{0, 4, 0, 0, 0.0f}), OutOfRange);
}

TEST(Jigsaw, SingleCellIsIdentity) {
  auto rng = make_rng(1);
  EXPECT_EQ(sample_jigsaw(1, rng).perm(), std::vector<int>{0});
}

TEST(Jigsaw, SameSeedSamePermutation) {
  auto a = make_rng(99, {3});
  auto b = make_rng(99, {3});
  const auto pa = sample_jigsaw(2, a);
  const auto pb = sample_jigsaw(2, b);
  EXPECT_EQ(pa, pb);
  auto sorted = pa.perm();
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Jigsaw, PermutationsAreUniform) {
  auto rng = make_rng(2024);
  constexpr int kDraws = 10000;
  std::map<std::vector<int>, int> counts;
  for (int i = 0; i < kDraws; ++i) ++counts[sample_jigsaw(2, rng).perm()];
  ASSERT_EQ(counts.size(), 24u);
  const double p = 1.0 / 24.0;
  const double mean = kDraws * p;
  const double sigma = std::sqrt(kDraws * p * (1.0 - p));
  for (const auto& [perm, n] : counts) EXPECT_LE(std::abs(n - mean), 3.0 * sigma);
}

TEST(Jigsaw, IdentityPermutationIsBitExact) {
  const auto img = ramp(8, 8);
  EXPECT_EQ(apply_jigsaw(img, JigsawSpec::identity(4)), img);
}

TEST(Jigsaw, QuadrantSwap) {
  // 4x4 image whose quadrants hold their own index.
  Plane<int> quads(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) quads(r, c) = (r / 2) * 2 + c / 2;
  const JigsawSpec swap(2, 2, {3, 1, 2, 0});
  const auto out = apply_jigsaw(quads, swap);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const int q = (r / 2) * 2 + c / 2;
      const int expected = q == 0 ? 3 : q == 3 ? 0 : q;
      EXPECT_EQ(out(r, c), expected) << r << "," << c;
    }
  }
}

TEST(Jigsaw, PreservesHistogram) {
  auto rng = make_rng(5);
  const auto img = ramp(12, 12);
  const auto out = apply_jigsaw(img, sample_jigsaw(3, rng));
  auto a = img.storage(), b = out.storage();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(Jigsaw, IndivisibleShapeThrows) {
  auto rng = make_rng(5);
  EXPECT_THROW(apply_jigsaw(ramp(10, 12), sample_jigsaw(4, rng)), ShapeMismatch);
  EXPECT_THROW(invert_jigsaw(ProbMap<float>(2, 10, 12), sample_jigsaw(4, rng)), ShapeMismatch);
}

TEST(Jigsaw, InverseRoundTripOnProbMaps) {
  auto rng = make_rng(77);
  const auto y = oracle::random_probmap<float>(4, 16, 16, rng);
  for (int grid : {1, 2, 4, 8}) {
    const auto spec = sample_jigsaw(grid, rng);
    EXPECT_EQ(invert_jigsaw(apply_jigsaw(y, spec), spec), y);
    EXPECT_EQ(apply_jigsaw(invert_jigsaw(y, spec), spec), y);
  }
  EXPECT_EQ(invert_jigsaw(y, JigsawSpec::identity(4)), y);
}

TEST(Jigsaw, InverseRoundTripThousandPermutationsAt224) {
  auto rng = make_rng(4);
  const auto img = ramp(224, 224);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto spec = sample_jigsaw(4, rng);
    ASSERT_EQ(invert_jigsaw(apply_jigsaw(img, spec), spec), img) << "trial " << trial;
  }
}

TEST(Intensity, IdentityAndOffset) {
  const auto img = ramp(5, 5);
  EXPECT_EQ(apply_intensity(img, 1.0f, 0.0f), img);
  const auto shifted = apply_intensity(Image(3, 3, 0.0f), 1.0f, 0.2f);
  for (float v : shifted.values()) EXPECT_EQ(v, 0.2f);
}

TEST(Intensity, MeanIsAffine) {
  const auto img = ramp(16, 16);
  const auto out = apply_intensity(img, 0.7f, -0.1f);
  const double mean_in = std::accumulate(img.values().begin(), img.values().end(), 0.0) / img.size();
  const double mean_out = std::accumulate(out.values().begin(), out.values().end(), 0.0) / out.size();
  EXPECT_NEAR(mean_out, 0.7 * mean_in - 0.1, 1e-6);
}

TEST(Intensity, TwoPointInterpolation) {
  // f(x) = a x + b is affine iff f(t x1 + (1-t) x2) = t f(x1) + (1-t) f(x2).
  const auto x1 = ramp(4, 4);
  Image x2(4, 4, 2.0f);
  Image mix(4, 4);
  for (std::size_t i = 0; i < mix.size(); ++i)
    mix.values()[i] = 0.25f * x1.values()[i] + 0.75f * x2.values()[i];
  const auto f1 = apply_intensity(x1, 1.2f, 0.1f), f2 = apply_intensity(x2, 1.2f, 0.1f);
  const auto fm = apply_intensity(mix, 1.2f, 0.1f);
  for (std::size_t i = 0; i < mix.size(); ++i)
    EXPECT_NEAR(fm.values()[i], 0.25f * f1.values()[i] + 0.75f * f2.values()[i], 1e-5);
}

TEST(Intensity, SampledParametersStayInRange) {
  TrainConfig cfg;
  auto rng = make_rng(8);
  for (int i = 0; i < 1000; ++i) {
    const auto p = sample_intensity(cfg, rng);
    EXPECT_GE(p.alpha, 0.7f);
    EXPECT_LE(p.alpha, 1.3f);
    EXPECT_GE(p.beta, -0.2f);
    EXPECT_LE(p.beta, 0.2f);
  }
}

TEST(PartialCrossEntropy, PerfectPredictionIsZero) {
  auto rng = make_rng(3);
  const auto s = oracle::random_scribble(4, 6, 6, rng, 0.3);
  Plane<int> dense(6, 6, 0);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      if (s.annotated(r, c)) dense(r, c) = s.labels()(r, c);
  const auto pred = one_hot<double>(dense, 4);
  EXPECT_EQ(partial_cross_entropy(pred, s), 0.0);
}

TEST(PartialCrossEntropy, UniformIsLogK) {
  auto rng = make_rng(3);
  const auto s = oracle::random_scribble(4, 6, 6, rng, 0.3);
  const ProbMap<double> pred(4, 6, 6, 0.25);
  EXPECT_NEAR(partial_cross_entropy(pred, s), std::log(4.0), 1e-12);
  EXPECT_NEAR(partial_cross_entropy(pred, s), 1.3863, 1e-4);
}

TEST(PartialCrossEntropy, TwoPixelHandValue) {
  const auto s = mask_with(2, 2, {{0, 0, 1}, {1, 1, 2}});
  ProbMap<double> pred(4, 2, 2, 0.25);
  pred(0, 0, 0) = 0.25;
  pred(1, 0, 0) = 0.5;
  pred(2, 0, 0) = 0.125;
  pred(3, 0, 0) = 0.125;
  EXPECT_NEAR(partial_cross_entropy(pred, s), (std::log(2.0) + std::log(4.0)) / 2.0, 1e-12);
  EXPECT_NEAR(partial_cross_entropy(pred, s, CeReduction::kSum), std::log(2.0) + std::log(4.0),
              1e-12);
}

TEST(PartialCrossEntropy, EmptyScribbleIsZero) {
  const ProbMap<float> pred(4, 3, 3, 0.25f);
  const ScribbleMask none(Plane<int>(3, 3, 4), 4);
  EXPECT_EQ(partial_cross_entropy(pred, none), 0.0f);
  EXPECT_EQ(partial_cross_entropy_with_grad(pred, none).value, 0.0f);
}

TEST(PartialCrossEntropy, ShapeMismatchThrows) {
  const ProbMap<float> pred(4, 3, 3, 0.25f);
  const ScribbleMask s(Plane<int>(3, 4, 4), 4);
  EXPECT_THROW(partial_cross_entropy(pred, s), ShapeMismatch);
}

TEST(PartialCrossEntropy, ClampsZeroProbability) {
  const auto s = mask_with(1, 1, {{0, 0, 2}});
  const ProbMap<double> pred(4, 1, 1, 0.0);
  EXPECT_NEAR(partial_cross_entropy(pred, s), -std::log(kLogClamp), 1e-9);
}

TEST(PartialCrossEntropy, IgnoredPixelsDoNotMatter) {
  auto rng = make_rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_scribble(4, 8, 8, rng, 0.3);
    auto a = oracle::random_probmap<double>(4, 8, 8, rng);
    auto b = oracle::random_probmap<double>(4, 8, 8, rng);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c)
        if (s.annotated(r, c))
          for (int k = 0; k < 4; ++k) b(k, r, c) = a(k, r, c);
    EXPECT_EQ(partial_cross_entropy(a, s), partial_cross_entropy(b, s));
  }
}

TEST(PartialCrossEntropy, MatchesLoopOracleAndFiniteDifferences) {
  auto rng = make_rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = oracle::random_scribble(3, 5, 4, rng, 0.5);
    const auto pred = oracle::random_probmap<double>(3, 5, 4, rng);
    const auto lg = partial_cross_entropy_with_grad(pred, s);
    EXPECT_NEAR(lg.value, oracle::partial_ce_loop(pred, s), 1e-12);
    const std::vector<double> x(pred.values().begin(), pred.values().end());
    const auto fd = oracle::finite_difference(
        [&](const std::vector<double>& v) {
          ProbMap<double> p(3, 5, 4);
          std::copy(v.begin(), v.end(), p.values().begin());
          return partial_cross_entropy(p, s);
        },
        x);
    const std::vector<double> analytic(lg.grad.values().begin(), lg.grad.values().end());
    EXPECT_LT(oracle::max_relative_error(analytic, fd), 1e-4);
  }
}

TEST(TasLoss, PerfectAndUniform) {
  const auto s = mask_with(4, 4, {{0, 0, 0}, {1, 2, 1}, {3, 3, 3}});
  Plane<int> dense(4, 4, 0);
  dense(1, 2) = 1;
  dense(3, 3) = 3;
  const auto perfect = one_hot<double>(dense, 4);
  EXPECT_EQ(tas_loss(perfect, perfect, perfect, s).total(), 0.0);
  const ProbMap<double> uniform(4, 4, 4, 0.25);
  EXPECT_NEAR(tas_loss(uniform, uniform, uniform, s).total(), 3.0 * std::log(4.0), 1e-12);
}

TEST(TasLoss, SumOfSeparateTerms) {
  auto rng = make_rng(44);
  const auto s = oracle::random_scribble(4, 8, 8, rng, 0.2);
  const auto yi = oracle::random_probmap<double>(4, 8, 8, rng);
  const auto yj = oracle::random_probmap<double>(4, 8, 8, rng);
  const auto yk = oracle::random_probmap<double>(4, 8, 8, rng);
  const double expected = oracle::partial_ce_loop(yi, s) + oracle::partial_ce_loop(yj, s) +
                          oracle::partial_ce_loop(yk, s);
  EXPECT_NEAR(tas_loss(yi, yj, yk, s).total(), expected, 1e-7);
}

TEST(TasLoss, DecreasesAlongPathToScribbleOneHot) {
  auto rng = make_rng(45);
  const auto s = oracle::random_scribble(4, 8, 8, rng, 0.25);
  Plane<int> dense(8, 8, 0);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (s.annotated(r, c)) dense(r, c) = s.labels()(r, c);
  const auto target = one_hot<double>(dense, 4);
  std::vector<ProbMap<double>> start;
  for (int b = 0; b < 3; ++b) start.push_back(oracle::random_probmap<double>(4, 8, 8, rng));
  double previous = 1e300;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    std::vector<ProbMap<double>> y;
    for (const auto& p : start) {
      ProbMap<double> mix(4, 8, 8);
      for (std::size_t i = 0; i < mix.size(); ++i)
        mix.values()[i] = (1 - t) * p.values()[i] + t * target.values()[i];
      y.push_back(std::move(mix));
    }
    const double loss = tas_loss(y[0], y[1], y[2], s).total();
    EXPECT_LT(loss, previous) << "t=" << t;
    previous = loss;
  }
  EXPECT_EQ(previous, 0.0);
}

}  // namespace
}  // namespace tabnet::tas
