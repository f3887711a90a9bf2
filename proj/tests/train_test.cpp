#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "tabnet/data/synth.hpp"
#include "tabnet/error.hpp"
#include "tabnet/model/checkpoint.hpp"
#include "tabnet/tas/augment.hpp"
#include "tabnet/tas/loss.hpp"
#include "tabnet/train/train.hpp"

namespace fs = std::filesystem;

namespace tabnet::train {
namespace {

// Slices of synthetic phantom cases, cut down to size x size.
std::vector<data::Case> phantom_cases(int first, int count, int size, bool with_gt) {
  data::SynthOptions o;
  o.size = 40;
  o.slices = 2;
  std::vector<data::Case> out;
  for (int i = first; i < first + count; ++i) {
    const auto sc = data::synth_case(o, i);
    data::Case c;
    c.case_id = sc.case_id;
    for (int z = 0; z < o.slices; ++z) {
      Image img(o.size, o.size);
      Plane<int> s(o.size, o.size), g(o.size, o.size);
      for (int r = 0; r < o.size; ++r)
        for (int col = 0; col < o.size; ++col) {
          img(r, col) = float(sc.image.at(col, r, z));
          s(r, col) = int(sc.scribble.at(col, r, z));
          g(r, col) = int(sc.label.at(col, r, z));
        }
      data::Slice sl{img, ScribbleMask(s, 4), std::nullopt};
      if (with_gt) sl.gt = HardLabelMap(g, 4);
      c.slices.push_back(data::prepare_slice(sl, size));
    }
    out.push_back(std::move(c));
  }
  return out;
}

TrainConfig tiny_config(const std::string& out) {
  TrainConfig cfg;
  cfg.image_size = 16;
  cfg.base_width = 4;
  cfg.depth = 2;
  cfg.batch_size = 3;
  cfg.epochs = 3;
  cfg.learning_rate = 3e-3;
  cfg.seed = 5;
  cfg.output_dir = (fs::temp_directory_path() / ("tabnet_train_test_" + out)).string();
  fs::remove_all(cfg.output_dir);
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ','))
      row.push_back(field.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(field));
    rows.push_back(row);
  }
  return rows;
}

TEST(TotalLoss, WeightedSum) {
  TrainConfig cfg;
  EXPECT_NEAR(total_loss({2.0, 1.0, 0.5}, cfg), 2.0 + 0.3 + 0.05, 1e-15);
  cfg.lambda1 = 0.5;
  cfg.lambda2 = 0.0;
  cfg.lambda3 = 1.0;
  EXPECT_NEAR(total_loss({2.0, 9.0, 0.5}, cfg), 1.5, 1e-15);
}

TEST(TotalLoss, NamesTheNonFiniteTerm) {
  TrainConfig cfg;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  const std::pair<LossTerms, const char*> cases[] = {
      {{nan, 0, 0}, "L_TAS"}, {{0, inf, 0}, "L_PL"}, {{0, 0, -inf}, "L_BD"}};
  for (const auto& [terms, name] : cases) {
    try {
      total_loss(terms, cfg);
      FAIL() << name;
    } catch (const NonFiniteLoss& e) {
      EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
    }
  }
}

TEST(Schedule, PerEpochDecay) {
  TrainConfig cfg;
  for (int e = 0; e < 200; e += 7)
    EXPECT_NEAR(cfg.lr_at_epoch(e), 1e-4 * std::pow(0.95, e), 1e-12 * 1e-4);
}

TEST(BlockMeans, DropsPartialBlock) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(block_means(v, 3), (std::vector<double>{2.0, 5.0}));
  EXPECT_TRUE(block_means(v, 0).empty());
}

TEST(Views, UnselectedBranchesSeeTheOriginal) {
  const auto samples = flatten(phantom_cases(0, 1, 16, false));
  TrainConfig all, none;
  none.tas_branches = BranchSet::parse("none");
  for (const auto& s : samples) {
    auto r1 = make_rng(1), r2 = make_rng(1);
    const auto a = make_views(s, all, r1);
    const auto b = make_views(s, none, r2);
    EXPECT_EQ(b.x_i, s.image);
    EXPECT_EQ(b.x_j, s.image);
    EXPECT_EQ(b.x_k, s.image);
    EXPECT_NE(a.x_j, s.image);
    EXPECT_EQ(r1(), r2());  // same number of draws
  }
}

TEST(Views, CutoutHidesScribbledForeground) {
  const auto samples = flatten(phantom_cases(0, 1, 16, false));
  TrainConfig cfg;
  auto rng = make_rng(2);
  const auto v = make_views(samples[0], cfg, rng);
  ASSERT_TRUE(v.box.has_value());
  const auto& sc = samples[0].scribble;
  for (int r = 0; r < sc.height(); ++r)
    for (int c = 0; c < sc.width(); ++c) {
      const int l = sc.labels()(r, c);
      if (l != sc.ignore_label() && l != 0) EXPECT_TRUE(v.box->contains(r, c));
      if (v.box->contains(r, c)) EXPECT_EQ(v.x_i(r, c), float(cfg.cutout_fill));
    }
}

// With lambda2 = lambda3 = 0 the step must reduce to the plain triplet
// cross-entropy, rebuilt here from the public pieces.
TEST(Trainer, TasOnlyGradientsMatchDirectComputation) {
  auto cfg = tiny_config("tas_only");
  cfg.lambda2 = 0.0;
  cfg.lambda3 = 0.0;
  const auto samples = flatten(phantom_cases(0, 2, 16, false));
  const std::span<const Sample> batch(samples.data(), 3);

  Trainer trainer(cfg);
  const auto m = trainer.compute_gradients(batch, 2, 1);

  model::UNet net({1, 4, cfg.base_width, cfg.depth});
  net.init(cfg.seed);
  std::vector<Views> views;
  std::vector<Image> inputs;
  for (int s = 0; s < 3; ++s) {
    auto rng = make_rng(cfg.seed, {0x617567, 2, 1, std::uint64_t(s)});
    views.push_back(make_views(batch[s], cfg, rng));
    inputs.insert(inputs.end(), {views[s].x_i, views[s].x_j, views[s].x_k});
  }
  net.zero_grad();
  const auto probs = net.forward(model::to_batch(inputs));
  model::Tensor grad(probs.n, probs.c, probs.h, probs.w);
  double tas = 0.0;
  for (int s = 0; s < 3; ++s) {
    for (int b = 0; b < 3; ++b) {
      auto y = model::sample_probmap(probs, 3 * s + b);
      if (b == 1) y = tas::invert_jigsaw(y, views[s].jigsaw);
      auto ce = tas::partial_cross_entropy_with_grad(y, batch[s].scribble);
      tas += ce.value / 3.0;
      for (float& g : ce.grad.values()) g /= 3.0f;
      if (b == 1) ce.grad = tas::apply_jigsaw(ce.grad, views[s].jigsaw);
      model::store_sample(grad, 3 * s + b, ce.grad);
    }
  }
  net.backward(grad);

  EXPECT_NEAR(m.terms.tas, tas, 1e-6);
  EXPECT_NEAR(m.total, tas, 1e-6);
  const auto got = trainer.net().parameters();
  const auto want = net.parameters();
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t p = 0; p < got.size(); ++p)
    for (std::size_t i = 0; i < got[p]->grad.size(); ++i)
      ASSERT_NEAR(got[p]->grad[i], want[p]->grad[i], 1e-6) << got[p]->name << '[' << i << ']';
}

TEST(Trainer, NonFiniteLossLeavesParametersUntouched) {
  auto cfg = tiny_config("nan");
  auto samples = flatten(phantom_cases(0, 1, 16, false));
  samples[0].image(3, 3) = std::numeric_limits<float>::quiet_NaN();
  Trainer trainer(cfg);
  std::vector<std::vector<float>> before;
  for (const auto* p : trainer.net().parameters()) before.push_back(p->value);
  EXPECT_THROW(trainer.step(std::span<const Sample>(samples.data(), 1), 0, 0), NonFiniteLoss);
  const auto params = trainer.net().parameters();
  for (std::size_t p = 0; p < params.size(); ++p) EXPECT_EQ(params[p]->value, before[p]);
}

class FitTest : public ::testing::Test {
 protected:
  void SetUp() override {
    train_ = flatten(phantom_cases(0, 4, 16, false));
    val_ = phantom_cases(10, 2, 16, true);
  }
  std::vector<Sample> train_;
  std::vector<data::Case> val_;
};

TEST_F(FitTest, ZeroEpochsWritesInitialCheckpoint) {
  auto cfg = tiny_config("zero");
  cfg.epochs = 0;
  const auto r = fit(train_, val_, cfg);
  EXPECT_TRUE(fs::exists(r.last_checkpoint));
  EXPECT_TRUE(fs::exists(r.best_checkpoint));
  EXPECT_TRUE(read_csv(fs::path(cfg.output_dir) / "epochs.csv").empty());
  EXPECT_EQ(model::read_checkpoint_info(r.last_checkpoint).epoch, 0);
  std::istringstream text(slurp(fs::path(cfg.output_dir) / "config.ini"));
  EXPECT_EQ(parse_config(text), cfg);
}

TEST_F(FitTest, LogsAreConsistent) {
  auto cfg = tiny_config("logs");
  const auto r = fit(train_, val_, cfg);
  ASSERT_EQ(r.history.size(), 3u);
  const auto epochs = read_csv(fs::path(cfg.output_dir) / "epochs.csv");
  const auto steps = read_csv(fs::path(cfg.output_dir) / "steps.csv");
  ASSERT_EQ(epochs.size(), 3u);
  ASSERT_EQ(steps.size(), 3u * 3u);  // 8 slices at batch 3
  for (const auto& e : epochs) {
    EXPECT_NEAR(e[1], cfg.learning_rate * std::pow(cfg.lr_decay, e[0]), 1e-12);
    EXPECT_NEAR(e[5], cfg.lambda1 * e[2] + cfg.lambda2 * e[3] + cfg.lambda3 * e[4], 1e-6);
    EXPECT_NEAR(e[9], (e[6] + e[7] + e[8]) / 3.0, 1e-12);
  }
  for (const auto& s : steps) {
    EXPECT_NEAR(s[6], s[3] + s[4] + s[5], 1e-6);
    EXPECT_NEAR(s[9], cfg.lambda1 * s[6] + cfg.lambda2 * s[7] + cfg.lambda3 * s[8], 1e-6);
  }
  const auto best = model::read_checkpoint_info(r.best_checkpoint);
  double top = -1.0;
  for (const auto& e : epochs) top = std::max(top, e[9]);
  EXPECT_EQ(best.best_metric, top);
  EXPECT_EQ(epochs[best.best_epoch][9], top);
}

TEST_F(FitTest, IdenticalRunsGiveIdenticalLogs) {
  auto a = tiny_config("det_a"), b = tiny_config("det_b");
  fit(train_, val_, a);
  fit(train_, val_, b);
  for (const char* f : {"epochs.csv", "steps.csv"})
    EXPECT_EQ(slurp(fs::path(a.output_dir) / f), slurp(fs::path(b.output_dir) / f)) << f;
  b = tiny_config("det_seed");
  b.seed = 6;
  fit(train_, val_, b);
  EXPECT_NE(slurp(fs::path(a.output_dir) / "steps.csv"), slurp(fs::path(b.output_dir) / "steps.csv"));
}

TEST_F(FitTest, ResumeMatchesUninterruptedRun) {
  auto full = tiny_config("resume_full");
  full.epochs = 4;
  fit(train_, val_, full);

  auto part = tiny_config("resume_part");
  part.epochs = 2;
  fit(train_, val_, part);
  part.epochs = 4;
  fit(train_, val_, part, {.resume = true});

  for (const char* f : {"epochs.csv", "steps.csv"})
    EXPECT_EQ(slurp(fs::path(full.output_dir) / f), slurp(fs::path(part.output_dir) / f)) << f;

  model::UNet a({1, 4, 4, 2}), b({1, 4, 4, 2});
  model::load_checkpoint(fs::path(full.output_dir) / "last.ckpt", a);
  model::load_checkpoint(fs::path(part.output_dir) / "last.ckpt", b);
  for (std::size_t p = 0; p < a.parameters().size(); ++p)
    EXPECT_EQ(a.parameters()[p]->value, b.parameters()[p]->value);
}

TEST_F(FitTest, ResumeRejectsChangedConfig) {
  auto cfg = tiny_config("resume_bad");
  cfg.epochs = 1;
  fit(train_, val_, cfg);
  cfg.lambda2 = 0.5;
  cfg.epochs = 2;
  EXPECT_THROW(fit(train_, val_, cfg, {.resume = true}), ConfigError);
}

TEST_F(FitTest, TasLossDecreases) {
  auto cfg = tiny_config("smoke");
  cfg.epochs = 12;
  const auto r = fit(train_, {}, cfg);
  std::vector<double> tas;
  for (const auto& e : r.history) tas.push_back(e.terms.tas);
  const auto blocks = block_means(tas, 4);
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_LT(blocks[1], blocks[0]);
  EXPECT_LT(blocks[2], blocks[1]);
}

}  // namespace
}  // namespace tabnet::train
