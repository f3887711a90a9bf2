#include "tabnet/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tabnet/error.hpp"

namespace tabnet::data {
namespace {

std::string list_values(const std::set<long long>& values) {
  std::string s;
  for (auto v : values) s += (s.empty() ? "" : ", ") + std::to_string(v);
  return s;
}

// Integer labels of one z slice; collects non-integral or out-of-set values.
Plane<int> label_slice(const Volume& v, int z, std::set<long long>& bad, int max_valid, int extra) {
  Plane<int> out(v.ny, v.nx);
  for (int y = 0; y < v.ny; ++y) {
    for (int x = 0; x < v.nx; ++x) {
      const double d = v.at(x, y, z);
      const long long r = std::llround(d);
      if (d != static_cast<double>(r) || ((r < 0 || r > max_valid) && r != extra)) {
        bad.insert(r);
        continue;
      }
      out(y, x) = static_cast<int>(r);
    }
  }
  return out;
}

}  // namespace

std::string phase_from_id(const std::string& case_id) {
  for (const char* p : {"ED", "ES"}) {
    const std::string suffix = std::string("_") + p;
    if (case_id.size() > suffix.size() &&
        case_id.compare(case_id.size() - suffix.size(), suffix.size(), suffix) == 0)
      return p;
  }
  return {};
}

Case load_case(const std::string& volume_path, const std::string& scribble_path,
               const std::optional<std::string>& gt_path, int num_classes, int ignore_label,
               const std::string& case_id) {
  const Volume image = read_nifti(volume_path);
  const Volume scribble = read_nifti(scribble_path);
  if (!image.same_geometry(scribble))
    throw ShapeMismatch("geometry mismatch: image " + image.shape_str() + " vs scribble " +
                        scribble.shape_str() + " (" + scribble_path + ")");
  std::optional<Volume> gt;
  if (gt_path) {
    gt = read_nifti(*gt_path);
    if (!image.same_geometry(*gt))
      throw ShapeMismatch("geometry mismatch: image " + image.shape_str() + " vs label " +
                          gt->shape_str() + " (" + *gt_path + ")");
  }
  Case c;
  c.case_id = case_id.empty() ? std::filesystem::path(volume_path).stem().stem().string() : case_id;
  c.phase = phase_from_id(c.case_id);
  std::set<long long> bad_scribble, bad_gt;
  for (int z = 0; z < image.nz; ++z) {
    Slice s;
    s.image = Image(image.ny, image.nx);
    for (int y = 0; y < image.ny; ++y)
      for (int x = 0; x < image.nx; ++x) s.image(y, x) = static_cast<float>(image.at(x, y, z));
    auto sl = label_slice(scribble, z, bad_scribble, num_classes - 1, ignore_label);
    std::optional<Plane<int>> gl;
    if (gt) gl = label_slice(*gt, z, bad_gt, num_classes - 1, -1);
    if (bad_scribble.empty()) s.scribble = ScribbleMask(std::move(sl), num_classes, ignore_label);
    if (gl && bad_gt.empty()) s.gt = HardLabelMap(std::move(*gl), num_classes);
    c.slices.push_back(std::move(s));
  }
  if (!bad_scribble.empty())
    throw OutOfRange(scribble_path + ": unknown scribble label values {" + list_values(bad_scribble) +
                     "} (K=" + std::to_string(num_classes) + ", ignore=" + std::to_string(ignore_label) + ")");
  if (!bad_gt.empty())
    throw OutOfRange(*gt_path + ": unknown label values {" + list_values(bad_gt) +
                     "} (K=" + std::to_string(num_classes) + ")");
  return c;
}

Image standardize(const Image& image) {
  const auto v = image.values();
  Image out(image.height(), image.width());
  if (v.empty()) return out;
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (float x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  if (!(sd > 0.0) || sd < 1e-12 * std::max(1.0, std::abs(mean))) return out;
  auto o = out.values();
  for (std::size_t q = 0; q < v.size(); ++q) o[q] = static_cast<float>((v[q] - mean) / sd);
  return out;
}

Image resize_bilinear(const Image& image, int height, int width) {
  if (image.height() == height && image.width() == width) return image;
  if (image.size() == 0) throw ShapeMismatch("resize_bilinear: empty image");
  Image out(height, width);
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double tx = fx - x0;
      const double top = image(y0, x0) * (1 - tx) + image(y0, x1) * tx;
      const double bot = image(y1, x0) * (1 - tx) + image(y1, x1) * tx;
      out(r, c) = static_cast<float>(top * (1 - ty) + bot * ty);
    }
  }
  return out;
}

Plane<int> resize_nearest(const Plane<int>& labels, int height, int width) {
  if (labels.height() == height && labels.width() == width) return labels;
  if (labels.size() == 0) throw ShapeMismatch("resize_nearest: empty label map");
  Plane<int> out(height, width);
  for (int r = 0; r < height; ++r) {
    const int y = std::min(labels.height() - 1,
                           static_cast<int>(std::floor((r + 0.5) * labels.height() / height)));
    for (int c = 0; c < width; ++c) {
      const int x = std::min(labels.width() - 1,
                             static_cast<int>(std::floor((c + 0.5) * labels.width() / width)));
      out(r, c) = labels(y, x);
    }
  }
  return out;
}

Image preprocess(const Image& image, int size) {
  return resize_bilinear(standardize(image), size, size);
}

Slice prepare_slice(const Slice& slice, int size) {
  Slice out;
  out.image = preprocess(slice.image, size);
  out.scribble = ScribbleMask(resize_nearest(slice.scribble.labels(), size, size),
                              slice.scribble.num_classes(), slice.scribble.ignore_label());
  if (slice.gt)
    out.gt = HardLabelMap(resize_nearest(slice.gt->labels(), size, size), slice.gt->num_classes());
  return out;
}

void SplitManifest::validate() const {
  std::set<std::string> seen;
  for (const auto* list : {&train, &val, &test})
    for (const auto& id : *list)
      if (!seen.insert(id).second) throw ConfigError("split manifest lists case '" + id + "' twice");
}

const std::vector<std::string>& SplitManifest::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

SplitManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read manifest " + path);
  SplitManifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string split, id, extra;
    if (!(ls >> split)) continue;
    if (!(ls >> id) || (ls >> extra))
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected '<split> <case_id>'");
    if (split == "train") m.train.push_back(id);
    else if (split == "val") m.val.push_back(id);
    else if (split == "test") m.test.push_back(id);
    else throw ParseError(path + ":" + std::to_string(line_no) + ": unknown split '" + split + "'");
  }
  m.validate();
  return m;
}

void write_manifest(const std::string& path, const SplitManifest& manifest) {
  manifest.validate();
  std::ofstream out(path);
  for (const char* name : {"train", "val", "test"})
    for (const auto& id : manifest.split(name)) out << name << ' ' << id << '\n';
  if (!out) throw Error("failed writing " + path);
}

std::string DatasetPaths::image(const std::string& id) const {
  return (std::filesystem::path(root) / "images" / (id + ".nii.gz")).string();
}
std::string DatasetPaths::scribble(const std::string& id) const {
  return (std::filesystem::path(root) / "scribbles" / (id + ".nii.gz")).string();
}
std::string DatasetPaths::label(const std::string& id) const {
  return (std::filesystem::path(root) / "labels" / (id + ".nii.gz")).string();
}
std::string DatasetPaths::manifest() const {
  return (std::filesystem::path(root) / "split.txt").string();
}

std::vector<Case> load_split(const DatasetPaths& paths, const SplitManifest& manifest,
                             const std::string& split, const TrainConfig& cfg, bool require_gt) {
  const bool with_gt = require_gt || split != "train";
  std::vector<Case> cases;
  for (const auto& id : manifest.split(split)) {
    std::optional<std::string> gt;
    if (with_gt) {
      gt = paths.label(id);
      if (!std::filesystem::exists(*gt))
        throw ParseError("case '" + id + "' has no ground truth at " + *gt);
    }
    Case c = load_case(paths.image(id), paths.scribble(id), gt, cfg.num_classes, cfg.ignore_label, id);
    for (auto& s : c.slices) s = prepare_slice(s, cfg.image_size);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::string default_data_root(const std::string& fallback) {
  const char* env = std::getenv("TABNET_DATA_ROOT");
  return env != nullptr && *env != '\0' ? env : fallback;
}

}  // namespace tabnet::data
