#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tabnet {

enum class CeReduction { kMean, kSum };
enum class BoundaryReduction { kJoint, kPerClass };
enum class FusionStrategy { kLossWeighted, kAverage, kRandom };

/// Subset of the three augmented views: i = cutout, j = jigsaw, k = intensity.
struct BranchSet {
  bool cutout = true;
  bool jigsaw = true;
  bool intensity = true;

  int count() const { return int(cutout) + int(jigsaw) + int(intensity); }
  bool operator==(const BranchSet&) const = default;

  /// Accepts comma lists such as "i,j,k", "j,k" or "none".
  static BranchSet parse(std::string_view text);
  std::string str() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct TrainConfig {
  // loss
  double lambda1 = 1.0;
  double lambda2 = 0.3;
  double lambda3 = 0.1;
  double epsilon = 1e-5;
  CeReduction ce_reduction = CeReduction::kMean;
  BoundaryReduction boundary_reduction = BoundaryReduction::kJoint;

  // optim
  double learning_rate = 1e-4;
  double lr_decay = 0.95;
  int epochs = 1000;
  int batch_size = 8;

  // augment
  int jigsaw_grid = 4;
  int cutout_margin = 5;
  double cutout_fill = 0.0;
  Interval intensity_alpha_range{0.7, 1.3};
  Interval intensity_beta_range{-0.2, 0.2};
  BranchSet tas_branches{true, true, true};

  // bap
  BranchSet pl_branches{false, true, true};
  FusionStrategy pl_fusion = FusionStrategy::kLossWeighted;
  int boundary_pool_size = 3;
  int pool_size() const { return boundary_pool_size; }

  // model
  int num_classes = 4;
  int ignore_label = 4;
  int base_width = 16;
  int depth = 4;

  // data
  int image_size = 224;
  std::string data_root;

  // run
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";

  /// Throws ConfigError on values no component can run with.
  void validate() const;

  /// Learning rate in effect during a given (0-based) epoch.
  double lr_at_epoch(int epoch) const;

  bool operator==(const TrainConfig&) const = default;
};

/// Every recognised key with its section, in snapshot order.
std::vector<std::pair<std::string, std::string>> config_keys();

/// Sets one key ("lambda2" or "loss.lambda2"). Unknown key or unparsable value -> ConfigError.
void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);

/// Applies "key=value" overrides in order.
void apply_overrides(TrainConfig& cfg, const std::vector<std::string>& overrides);

/// INI-style text: [section] headers with key = value lines.
TrainConfig parse_config(std::istream& in);
TrainConfig load_config(const std::string& path);

/// Full effective configuration in the same format parse_config reads.
std::string dump_config(const TrainConfig& cfg);

/// FNV-1a of dump_config; embedded in checkpoints.
std::uint64_t config_hash(const TrainConfig& cfg);

std::string to_string(FusionStrategy f);

}  // namespace tabnet
