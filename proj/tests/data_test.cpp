#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "tabnet/data/dataset.hpp"
#include "tabnet/data/nifti.hpp"
#include "tabnet/data/synth.hpp"
#include "tabnet/error.hpp"
#include "tabnet/rng.hpp"

namespace fs = std::filesystem;

namespace tabnet::data {
namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tabnet_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Volume make_volume(int nx, int ny, int nz, double fill = 0.0) {
  Volume v;
  v.nx = nx;
  v.ny = ny;
  v.nz = nz;
  v.data.assign(static_cast<std::size_t>(nx) * ny * nz, fill);
  return v;
}

TEST(Nifti, RoundTripEveryType) {
  const auto dir = scratch("types");
  auto rng = make_rng(3);
  std::uniform_int_distribution<int> d(0, 100);
  Volume v = make_volume(5, 4, 3);
  v.spacing = {1.25f, 0.5f, 8.0f};
  for (auto& x : v.data) x = d(rng);
  for (auto t : {NiftiType::kUint8, NiftiType::kInt16, NiftiType::kInt32, NiftiType::kFloat32,
                 NiftiType::kFloat64, NiftiType::kInt8, NiftiType::kUint16}) {
    for (const char* ext : {".nii", ".nii.gz"}) {
      const auto p = dir / ("v" + std::to_string(int(t)) + ext);
      write_nifti(p.string(), v, t);
      const auto back = read_nifti(p.string());
      ASSERT_TRUE(back.same_geometry(v));
      EXPECT_EQ(back.data, v.data) << int(t) << ext;
      EXPECT_FLOAT_EQ(back.spacing[2], 8.0f);
    }
  }
}

TEST(Nifti, FloatValuesSurvive) {
  const auto dir = scratch("float");
  Volume v = make_volume(3, 2, 1);
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = 0.1 * double(i) - 0.25;
  write_nifti((dir / "f.nii.gz").string(), v, NiftiType::kFloat64);
  EXPECT_EQ(read_nifti((dir / "f.nii.gz").string()).data, v.data);
}

TEST(Nifti, WriteIsDeterministic) {
  const auto dir = scratch("det");
  Volume v = make_volume(6, 6, 2, 7.0);
  write_nifti((dir / "a.nii.gz").string(), v, NiftiType::kInt16);
  write_nifti((dir / "b.nii.gz").string(), v, NiftiType::kInt16);
  EXPECT_EQ(slurp(dir / "a.nii.gz"), slurp(dir / "b.nii.gz"));
}

TEST(Nifti, MalformedFilesThrowParseError) {
  const auto dir = scratch("bad");
  EXPECT_THROW(read_nifti((dir / "missing.nii").string()), ParseError);
  std::ofstream(dir / "short.nii") << "not a nifti header";
  EXPECT_THROW(read_nifti((dir / "short.nii").string()), ParseError);

  Volume v = make_volume(2, 2, 1, 1.0);
  write_nifti((dir / "ok.nii").string(), v, NiftiType::kUint8);
  auto bytes = slurp(dir / "ok.nii");
  bytes[344] = 'x';  // magic
  std::ofstream(dir / "magic.nii", std::ios::binary) << bytes;
  EXPECT_THROW(read_nifti((dir / "magic.nii").string()), ParseError);

  bytes = slurp(dir / "ok.nii");
  bytes.resize(bytes.size() - 2);
  std::ofstream(dir / "trunc.nii", std::ios::binary) << bytes;
  EXPECT_THROW(read_nifti((dir / "trunc.nii").string()), ParseError);
}

class LoadCaseTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch("load");
    image_ = make_volume(4, 3, 2);
    for (std::size_t i = 0; i < image_.data.size(); ++i) image_.data[i] = double(i);
    scrib_ = make_volume(4, 3, 2, 4.0);
    scrib_.at(1, 2, 0) = 3;
    scrib_.at(0, 0, 1) = 0;
    gt_ = make_volume(4, 3, 2, 1.0);
    write("img", image_, NiftiType::kFloat32);
    write("scr", scrib_, NiftiType::kUint8);
    write("gt", gt_, NiftiType::kUint8);
  }
  std::string path(const std::string& n) const { return (dir_ / (n + ".nii.gz")).string(); }
  void write(const std::string& n, const Volume& v, NiftiType t) { write_nifti(path(n), v, t); }

  fs::path dir_;
  Volume image_, scrib_, gt_;
};

TEST_F(LoadCaseTest, SlicesAlongZ) {
  const auto c = load_case(path("img"), path("scr"), path("gt"), 4, 4, "patient001_ES");
  EXPECT_EQ(c.phase, "ES");
  ASSERT_EQ(c.slices.size(), 2u);
  const auto& s0 = c.slices[0];
  EXPECT_EQ(s0.image.height(), 3);
  EXPECT_EQ(s0.image.width(), 4);
  EXPECT_EQ(s0.image(2, 1), float(image_.at(1, 2, 0)));
  EXPECT_EQ(s0.scribble.labels()(2, 1), 3);
  EXPECT_EQ(c.slices[1].scribble.labels()(0, 0), 0);
  EXPECT_EQ(s0.scribble.annotated_count(), 1u);
  ASSERT_TRUE(s0.gt.has_value());
  EXPECT_EQ((*s0.gt)(1, 1), 1);
}

TEST_F(LoadCaseTest, GeometryMismatch) {
  write("small", make_volume(4, 3, 1, 4.0), NiftiType::kUint8);
  EXPECT_THROW(load_case(path("img"), path("small"), std::nullopt, 4, 4), ShapeMismatch);
  EXPECT_THROW(load_case(path("img"), path("scr"), path("small"), 4, 4), ShapeMismatch);
}

TEST_F(LoadCaseTest, UnknownLabelsAreListed) {
  scrib_.at(0, 0, 0) = 7;
  scrib_.at(1, 0, 0) = 9;
  write("bad", scrib_, NiftiType::kUint8);
  try {
    load_case(path("img"), path("bad"), std::nullopt, 4, 4);
    FAIL() << "no throw";
  } catch (const OutOfRange& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    EXPECT_NE(msg.find('9'), std::string::npos) << msg;
  }
  // the ignore value is not a valid ground-truth label
  gt_.at(2, 2, 1) = 4;
  write("badgt", gt_, NiftiType::kUint8);
  EXPECT_THROW(load_case(path("img"), path("scr"), path("badgt"), 4, 4), OutOfRange);
}

TEST(Phase, FromId) {
  EXPECT_EQ(phase_from_id("patient012_ED"), "ED");
  EXPECT_EQ(phase_from_id("patient012_ES"), "ES");
  EXPECT_EQ(phase_from_id("subject3"), "");
}

TEST(Preprocess, StandardizeMoments) {
  auto rng = make_rng(5);
  std::normal_distribution<float> d(40.0f, 9.0f);
  Image img(13, 11);
  for (auto& v : img.values()) v = d(rng);
  const Image z = standardize(img);
  double m = 0, s = 0;
  for (float v : z.values()) m += v;
  m /= double(z.size());
  for (float v : z.values()) s += (v - m) * (v - m);
  s = std::sqrt(s / double(z.size()));
  EXPECT_NEAR(m, 0.0, 1e-5);
  EXPECT_NEAR(s, 1.0, 1e-4);
}

TEST(Preprocess, ConstantSliceIsZero) {
  const Image z = standardize(Image(4, 4, 3.5f));
  for (float v : z.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Preprocess, BilinearIdentityAndConstant) {
  Image img(5, 7);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) img(r, c) = float(r * 7 + c);
  EXPECT_EQ(resize_bilinear(img, 5, 7), img);
  const Image k = resize_bilinear(Image(6, 3, 2.0f), 11, 17);
  for (float v : k.values()) EXPECT_FLOAT_EQ(v, 2.0f);
}

TEST(Preprocess, BilinearHalfPixelUpsample) {
  // 1x2 -> 1x4 with centres at 0.25, 0.75 of each source pixel
  Image img(1, 2, std::vector<float>{0.0f, 4.0f});
  const Image up = resize_bilinear(img, 1, 4);
  EXPECT_FLOAT_EQ(up(0, 0), 0.0f);
  EXPECT_FLOAT_EQ(up(0, 1), 1.0f);
  EXPECT_FLOAT_EQ(up(0, 2), 3.0f);
  EXPECT_FLOAT_EQ(up(0, 3), 4.0f);
}

TEST(Preprocess, NearestNeverInventsLabels) {
  auto rng = make_rng(21);
  std::uniform_int_distribution<int> lab(0, 4), dim(1, 40);
  for (int trial = 0; trial < 100; ++trial) {
    Plane<int> p(dim(rng), dim(rng));
    std::set<int> present;
    for (auto& v : p.values()) present.insert(v = lab(rng));
    const auto out = resize_nearest(p, dim(rng), dim(rng));
    for (int v : out.values()) EXPECT_TRUE(present.count(v));
  }
}

TEST(Preprocess, PrepareSliceShapes) {
  Slice s{Image(10, 12, 1.0f), ScribbleMask(Plane<int>(10, 12, 4), 4),
          HardLabelMap(Plane<int>(10, 12, 2), 4)};
  const Slice p = prepare_slice(s, 8);
  EXPECT_EQ(p.image.height(), 8);
  EXPECT_EQ(p.image.width(), 8);
  EXPECT_EQ(p.scribble.height(), 8);
  EXPECT_EQ(p.scribble.ignore_label(), 4);
  ASSERT_TRUE(p.gt);
  EXPECT_EQ((*p.gt)(7, 7), 2);
}

TEST(Manifest, RoundTripAndSplits) {
  const auto dir = scratch("manifest");
  SplitManifest m{{"a", "b"}, {"c"}, {"d", "e", "f"}};
  write_manifest((dir / "split.txt").string(), m);
  const auto back = read_manifest((dir / "split.txt").string());
  EXPECT_EQ(back.train, m.train);
  EXPECT_EQ(back.val, m.val);
  EXPECT_EQ(back.test, m.test);
  EXPECT_EQ(back.split("test").size(), 3u);
  EXPECT_THROW(back.split("holdout"), ConfigError);
}

TEST(Manifest, CommentsAndErrors) {
  const auto dir = scratch("manifest2");
  std::ofstream(dir / "m.txt") << "# header\ntrain a\n\nval b  # trailing\n";
  const auto m = read_manifest((dir / "m.txt").string());
  EXPECT_EQ(m.train, std::vector<std::string>{"a"});
  EXPECT_EQ(m.val, std::vector<std::string>{"b"});

  std::ofstream(dir / "dup.txt") << "train a\ntest a\n";
  EXPECT_THROW(read_manifest((dir / "dup.txt").string()), ConfigError);
  std::ofstream(dir / "bad.txt") << "holdout a\n";
  EXPECT_THROW(read_manifest((dir / "bad.txt").string()), Error);
}

TEST(Synth, DeterministicBytes) {
  SynthOptions o;
  o.n_train = 2;
  o.n_val = 1;
  o.size = 32;
  o.slices = 2;
  o.seed = 9;
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  synth_generate(a.string(), o);
  synth_generate(b.string(), o);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
  }
  EXPECT_EQ(files, 1u + 3u * 3u);
}

TEST(Synth, ScribblesLieInsideTheirClass) {
  SynthOptions o;
  o.size = 48;
  for (int i = 0; i < 6; ++i) {
    const auto c = synth_case(o, i);
    std::set<int> seen;
    for (std::size_t v = 0; v < c.scribble.data.size(); ++v) {
      const int s = int(c.scribble.data[v]);
      if (s == 4) continue;
      seen.insert(s);
      EXPECT_EQ(s, int(c.label.data[v]));
    }
    EXPECT_EQ(seen, (std::set<int>{0, 1, 2, 3})) << c.case_id;
  }
}

TEST(Synth, LoadsThroughDatasetPipeline) {
  SynthOptions o;
  o.n_train = 2;
  o.n_val = 2;
  o.size = 40;
  o.slices = 3;
  const auto dir = scratch("synth_load");
  const auto m = synth_generate(dir.string(), o);
  TrainConfig cfg;
  cfg.image_size = 32;
  const DatasetPaths paths{dir.string()};
  const auto train = load_split(paths, m, "train", cfg);
  const auto val = load_split(paths, m, "val", cfg);
  ASSERT_EQ(train.size(), 2u);
  ASSERT_EQ(val.size(), 2u);
  EXPECT_EQ(train[0].slices.size(), 3u);
  EXPECT_FALSE(train[0].slices[0].gt.has_value());
  ASSERT_TRUE(val[0].slices[0].gt.has_value());
  EXPECT_EQ(val[0].slices[0].image.height(), 32);
}

}  // namespace
}  // namespace tabnet::data
