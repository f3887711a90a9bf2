#pragma once

#include <cstdint>
#include <string>

#include "tabnet/data/dataset.hpp"

namespace tabnet::data {

/// Labels used by the synthetic phantom (same order as the cardiac data).
inline constexpr int kSynthBackground = 0;
inline constexpr int kSynthRv = 1;
inline constexpr int kSynthMyo = 2;
inline constexpr int kSynthLv = 3;

struct SynthOptions {
  int n_train = 20;
  int n_val = 5;
  int n_test = 0;
  int size = 80;    // native in-plane size before preprocessing
  int slices = 4;   // z extent of each volume
  std::uint64_t seed = 0;
};

/// Image, scribble and dense label volumes of one phantom case.
struct SynthCase {
  std::string case_id;
  Volume image;
  Volume scribble;
  Volume label;
};

/// Deterministic in (options, index): a disk (LV) inside a ring (Myo) with
/// a crescent-shaped blob (RV) against the ring, on a textured noisy
/// background. Scribbles are one- to three-pixel curves per class plus a
/// background arc, each pixel inside its own class region.
SynthCase synth_case(const SynthOptions& opts, int index);

/// Writes every case and split.txt under root in the layout DatasetPaths
/// expects. Identical options give byte-identical files.
SplitManifest synth_generate(const std::string& root, const SynthOptions& opts);

}  // namespace tabnet::data
