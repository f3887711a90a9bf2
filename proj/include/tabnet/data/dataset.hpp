#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabnet/config.hpp"
#include "tabnet/data/nifti.hpp"
#include "tabnet/types.hpp"

namespace tabnet::data {

struct Slice {
  Image image;
  ScribbleMask scribble;
  std::optional<HardLabelMap> gt;
};

struct Case {
  std::string case_id;
  std::string phase;  // "ED", "ES" or empty
  std::vector<Slice> slices;
};

/// Phase suffix of a case id such as "patient001_ED".
std::string phase_from_id(const std::string& case_id);

/// Splits a volume into 2-D slices along z. Labels must share the image
/// geometry; scribbles may contain 0..K-1 and ignore_label, ground truth
/// only 0..K-1. Offending values are listed in the error.
Case load_case(const std::string& volume_path, const std::string& scribble_path,
               const std::optional<std::string>& gt_path, int num_classes, int ignore_label,
               const std::string& case_id = {});

/// Per-slice z-score. Constant slices map to zeros.
Image standardize(const Image& image);

/// Bilinear, corner-aligned at pixel centres (half-pixel convention).
Image resize_bilinear(const Image& image, int height, int width);

/// Nearest neighbour; never produces values absent from the input.
Plane<int> resize_nearest(const Plane<int>& labels, int height, int width);

/// Standardize then resize to size x size.
Image preprocess(const Image& image, int size);

/// preprocess on the image, nearest resize on the scribble and ground truth.
Slice prepare_slice(const Slice& slice, int size);

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  /// Throws ConfigError when a case id appears twice.
  void validate() const;
  const std::vector<std::string>& split(const std::string& name) const;
};

/// Text format: one "<split> <case_id>" pair per line, '#' comments.
SplitManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const SplitManifest& manifest);

/// Dataset root layout: images/<id>.nii.gz, scribbles/<id>.nii.gz,
/// labels/<id>.nii.gz, split.txt.
struct DatasetPaths {
  std::string root;
  std::string image(const std::string& id) const;
  std::string scribble(const std::string& id) const;
  std::string label(const std::string& id) const;
  std::string manifest() const;
};

/// Loads and prepares every case of a split. Ground truth is attached
/// for val and test only; require_gt forces it for any split.
std::vector<Case> load_split(const DatasetPaths& paths, const SplitManifest& manifest,
                             const std::string& split, const TrainConfig& cfg,
                             bool require_gt = false);

/// Data root from the TABNET_DATA_ROOT environment variable, or fallback.
std::string default_data_root(const std::string& fallback = "data");

}  // namespace tabnet::data
