#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "tabnet/data/dataset.hpp"
#include "tabnet/model/unet.hpp"
#include "tabnet/types.hpp"

namespace tabnet::eval {

/// 2|P & G| / (|P| + |G|) for the binary masks of class_id; 1 when both are empty.
double dice_score(const HardLabelMap& pred, const HardLabelMap& gt, int class_id);

/// Dice of class_id over a whole case: overlap and sizes are summed over
/// slices before the ratio is taken.
double volume_dice(std::span<const HardLabelMap> pred, std::span<const HardLabelMap> gt,
                   int class_id);

/// Table columns in display order with their label ids.
struct Structure {
  const char* name;
  int label;
};
inline constexpr std::array<Structure, 3> kStructures{{{"LV", 3}, {"Myo", 2}, {"RV", 1}}};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population deviation over cases
};

struct SplitScores {
  std::vector<std::string> case_ids;
  std::vector<std::array<double, 3>> per_case;  // kStructures order
  std::array<MeanStd, 3> structures{};
  double average = 0.0;  // mean of the three structure means
};

MeanStd mean_std(std::span<const double> values);

/// Scores aligned per-case prediction stacks against the cases' ground
/// truth. Throws Error when a case lacks it.
SplitScores score_cases(std::span<const data::Case> cases,
                        std::span<const std::vector<HardLabelMap>> predictions);

/// Argmax predictions of net on the original (unaugmented) slices.
std::vector<std::vector<HardLabelMap>> predict_cases(model::UNet& net,
                                                     std::span<const data::Case> cases,
                                                     int batch_size = 8);

SplitScores evaluate_model(model::UNet& net, std::span<const data::Case> cases, int batch_size = 8);

/// Ground truth scored against itself.
SplitScores evaluate_ground_truth(std::span<const data::Case> cases);

/// Loads a checkpoint and scores it on one split of a dataset. The
/// network shape and preprocessing come from the checkpoint.
SplitScores evaluate_split(const std::string& checkpoint, const data::DatasetPaths& paths,
                           const std::string& split);

/// Per-structure paired comparison of two score sets over the same cases:
/// mean of (a - b) and the paired t statistic (sample deviation, n - 1).
/// No p-value; t is 0 when the differences are all equal.
struct PairedDiff {
  std::array<double, 3> mean_diff{};
  std::array<double, 3> t{};
  int n = 0;
};
PairedDiff paired_difference(const SplitScores& a, const SplitScores& b);

/// Mean foreground Dice used for model selection.
inline double selection_metric(const SplitScores& s) { return s.average; }

}  // namespace tabnet::eval
