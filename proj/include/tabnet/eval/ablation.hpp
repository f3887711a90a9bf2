#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabnet/config.hpp"
#include "tabnet/eval/table.hpp"
#include "tabnet/train/train.hpp"

namespace tabnet::eval {

/// One configuration of an ablation axis.
struct AblationRow {
  std::string group;
  std::string label;
  std::string slug;  // run directory name
  TrainConfig cfg;
  std::optional<double> reference_avg;
};

/// Axes: loss_terms, tas_branches, pl_branches+fusion, lambda_sweep.
const std::vector<std::string>& ablation_axes();

/// Expands an axis into its rows. Branches left out of a TAS subset are
/// fed the original image; the loss_terms "none" row trains on the plain
/// image with the scribble cross-entropy alone. lambda_values applies to
/// lambda_sweep (default 1.0, 0.8, 0.5, 0.3, 0.1 for each lambda). Each
/// row writes into base.output_dir/<axis>/<slug>. Unknown axis ->
/// ConfigError.
std::vector<AblationRow> ablation_rows(const std::string& axis, const TrainConfig& base,
                                       const std::vector<double>& lambda_values = {});

struct AblationData {
  std::span<const train::Sample> train;
  std::span<const data::Case> val;    // model selection
  std::span<const data::Case> score;  // reported numbers
};

/// Trains and scores every row; returns the filled table.
Table run_ablation(const std::string& axis, const AblationData& data, const TrainConfig& base,
                   const std::vector<double>& lambda_values = {}, std::ostream* progress = nullptr);

}  // namespace tabnet::eval
