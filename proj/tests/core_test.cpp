#include <gtest/gtest.h>

#include <sstream>

#include "tabnet/config.hpp"
#include "tabnet/one_hot.hpp"
#include "tabnet/selftest/oracles.hpp"
#include "tabnet/types.hpp"

namespace tabnet {
namespace {

TEST(OneHot, SinglePixel) {
  Plane<int> labels(1, 1, 2);
  const auto oh = one_hot<float>(labels, 4);
  EXPECT_EQ(oh(0, 0, 0), 0.0f);
  EXPECT_EQ(oh(1, 0, 0), 0.0f);
  EXPECT_EQ(oh(2, 0, 0), 1.0f);
  EXPECT_EQ(oh(3, 0, 0), 0.0f);
}

TEST(OneHot, AllIgnoredIsZero) {
  ScribbleMask mask(Plane<int>(2, 2, 4), 4);
  const auto oh = one_hot<float>(mask);
  EXPECT_EQ(oh.channels(), 4);
  for (float v : oh.values()) EXPECT_EQ(v, 0.0f);
}

TEST(OneHot, Complementary) {
  Plane<int> labels(2, 2, std::vector<int>{0, 1, 1, 0});
  const auto oh = one_hot<float>(labels, 2);
  EXPECT_EQ(oh(0, 0, 0), 1.0f);
  EXPECT_EQ(oh(0, 0, 1), 0.0f);
  EXPECT_EQ(oh(0, 1, 0), 0.0f);
  EXPECT_EQ(oh(0, 1, 1), 1.0f);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(oh.channel(1)[i], 1.0f - oh.channel(0)[i]);
}

TEST(OneHot, RejectsOutOfRange) {
  Plane<int> labels(1, 2, std::vector<int>{0, 4});
  EXPECT_THROW(one_hot<float>(labels, 4), OutOfRange);
}

TEST(OneHot, ArgmaxRoundTripOnRandomMaps) {
  auto rng = make_rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = oracle::random_scribble(4, 9, 7, rng, 0.6);
    const auto oh = one_hot<double>(s);
    const auto back = argmax(oh);
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 7; ++c)
        if (s.annotated(r, c)) EXPECT_EQ(back(r, c), s.labels()(r, c));
  }
}

TEST(Types, ScribbleMaskValidation) {
  EXPECT_THROW(ScribbleMask(Plane<int>(2, 2, 7), 4), OutOfRange);
  EXPECT_THROW(ScribbleMask(Plane<int>(2, 2, 0), 4, 2), OutOfRange);
  const ScribbleMask ok(Plane<int>(2, 2, std::vector<int>{0, 4, 3, 4}), 4);
  EXPECT_EQ(ok.ignore_label(), 4);
  EXPECT_EQ(ok.annotated_count(), 2u);
}

TEST(Types, JigsawSpecInverse) {
  const JigsawSpec spec(2, 2, {2, 0, 3, 1});
  for (int p = 0; p < 4; ++p) EXPECT_EQ(spec.inverse()[spec.perm()[p]], p);
  EXPECT_THROW(JigsawSpec(2, 2, {0, 0, 1, 2}), OutOfRange);
  EXPECT_THROW(JigsawSpec(2, 2, {0, 1, 2}), OutOfRange);
  EXPECT_TRUE(JigsawSpec::identity(3).is_identity());
}

TEST(Types, CheckNormalized) {
  ProbMap<float> p(2, 1, 1);
  p(0, 0, 0) = 0.25f;
  p(1, 0, 0) = 0.75f;
  EXPECT_NO_THROW(check_normalized(p));
  p(1, 0, 0) = 0.7f;
  EXPECT_THROW(check_normalized(p), OutOfRange);
}

TEST(Config, Defaults) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.lambda1, 1.0);
  EXPECT_DOUBLE_EQ(cfg.lambda2, 0.3);
  EXPECT_DOUBLE_EQ(cfg.lambda3, 0.1);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-4);
  EXPECT_DOUBLE_EQ(cfg.lr_decay, 0.95);
  EXPECT_DOUBLE_EQ(cfg.epsilon, 1e-5);
  EXPECT_EQ(cfg.num_classes, 4);
  EXPECT_EQ(cfg.ignore_label, 4);
  EXPECT_EQ(cfg.jigsaw_grid, 4);
  EXPECT_EQ(cfg.pl_branches.str(), "j,k");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, LearningRateSchedule) {
  const TrainConfig cfg;
  EXPECT_NEAR(cfg.lr_at_epoch(10), 5.987369392383789e-05, 1e-15);
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(0), 1e-4);
}

TEST(Config, ParseSectionsAndOverrides) {
  std::istringstream in(
      "[loss]\nlambda2 = 0.5\n\n[augment]\njigsaw_grid = 2\nintensity_alpha_range = 0.8,1.2\n"
      "[bap]\npl_fusion = average\npl_branches = i,j,k\n");
  auto cfg = parse_config(in);
  EXPECT_DOUBLE_EQ(cfg.lambda2, 0.5);
  EXPECT_EQ(cfg.jigsaw_grid, 2);
  EXPECT_DOUBLE_EQ(cfg.intensity_alpha_range.lo, 0.8);
  EXPECT_EQ(cfg.pl_fusion, FusionStrategy::kAverage);
  EXPECT_EQ(cfg.pl_branches.count(), 3);
  apply_overrides(cfg, {"lambda2=0.3", "optim.epochs=7"});
  EXPECT_DOUBLE_EQ(cfg.lambda2, 0.3);
  EXPECT_EQ(cfg.epochs, 7);
}

TEST(Config, UnknownKeysAreErrors) {
  std::istringstream in("[loss]\nlambda9 = 1\n");
  EXPECT_THROW(parse_config(in), ConfigError);
  std::istringstream wrong_section("[optim]\nlambda1 = 1\n");
  EXPECT_THROW(parse_config(wrong_section), ConfigError);
  TrainConfig cfg;
  EXPECT_THROW(apply_overrides(cfg, {"bogus=1"}), ConfigError);
  EXPECT_THROW(apply_overrides(cfg, {"lambda1"}), ConfigError);
  EXPECT_THROW(apply_overrides(cfg, {"lambda1=abc"}), ConfigError);
  EXPECT_THROW(apply_overrides(cfg, {"pl_fusion=median"}), ConfigError);
}

TEST(Config, DumpParsesBackToSameConfig) {
  TrainConfig cfg;
  apply_overrides(cfg, {"lambda3=0.123456789", "seed=42", "tas_branches=j", "data_root=/tmp/x",
                        "boundary_reduction=per_class", "ce_reduction=sum"});
  std::istringstream in(dump_config(cfg));
  const auto back = parse_config(in);
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  TrainConfig other = cfg;
  other.lambda3 = 0.1;
  EXPECT_NE(config_hash(other), config_hash(cfg));
}

TEST(Config, ValidateRejectsBadValues) {
  TrainConfig cfg;
  cfg.boundary_pool_size = 4;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.image_size = 100;  // not divisible by 2^4
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.ignore_label = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace tabnet
