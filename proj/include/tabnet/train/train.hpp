#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabnet/config.hpp"
#include "tabnet/data/dataset.hpp"
#include "tabnet/eval/metrics.hpp"
#include "tabnet/model/adam.hpp"
#include "tabnet/model/unet.hpp"
#include "tabnet/rng.hpp"
#include "tabnet/tas/augment.hpp"

namespace tabnet::train {

struct LossTerms {
  double tas = 0.0;
  double pl = 0.0;
  double bd = 0.0;
};

/// lambda1 * tas + lambda2 * pl + lambda3 * bd. A non-finite term throws
/// NonFiniteLoss naming it.
double total_loss(const LossTerms& terms, const TrainConfig& cfg);

struct Sample {
  Image image;
  ScribbleMask scribble;
};

/// Every slice of every case, in case order.
std::vector<Sample> flatten(std::span<const data::Case> cases);

/// The cutout (i), jigsaw (j) and intensity (k) views of one image.
/// Branches missing from cfg.tas_branches get the original image; all
/// random draws happen regardless so streams stay aligned across configs.
struct Views {
  Image x_i, x_j, x_k;
  std::optional<CutoutBox> box;
  JigsawSpec jigsaw;
  tas::IntensityParams intensity;
};
Views make_views(const Sample& sample, const TrainConfig& cfg, Rng& rng);

struct StepMetrics {
  int epoch = 0;
  int step = 0;
  double lr = 0.0;
  double ce_i = 0.0, ce_j = 0.0, ce_k = 0.0;
  LossTerms terms;
  double total = 0.0;
};

/// Network, optimizer and configuration of one run. Losses and fusion
/// weights are per sample; batch values are sample means.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  /// Forward of all 3B views in one batch, loss and backward. Leaves the
  /// accumulated gradients in the parameters; no update.
  StepMetrics compute_gradients(std::span<const Sample> batch, int epoch, int step);

  /// compute_gradients followed by one Adam step at lr_at_epoch(epoch).
  /// A non-finite loss throws before any parameter changes.
  StepMetrics step(std::span<const Sample> batch, int epoch, int step);

  model::UNet& net() { return net_; }
  model::Adam& optimizer() { return adam_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  model::UNet net_;
  model::Adam adam_;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossTerms terms;
  double total = 0.0;
  std::optional<eval::SplitScores> val;
};

struct FitOptions {
  bool resume = false;
  std::ostream* progress = nullptr;  // one line per epoch when set
};

struct FitResult {
  std::vector<EpochRecord> history;  // epochs run by this call
  int epochs_completed = 0;
  double best_metric = -1.0;
  int best_epoch = -1;
  std::string best_checkpoint;
  std::string last_checkpoint;
};

/// Trains for cfg.epochs epochs, writing into cfg.output_dir:
///   config.ini   effective configuration
///   epochs.csv   epoch,lr,L_TAS,L_PL,L_BD,total,val_LV,val_Myo,val_RV,val_mean
///   steps.csv    epoch,step,lr,ce_i,ce_j,ce_k,L_TAS,L_PL,L_BD,total
///   last.ckpt    after every epoch (and before the first)
///   best.ckpt    highest validation mean foreground Dice so far
/// With resume, continues from last.ckpt; logs are cut back to the
/// checkpointed epoch so a resumed run matches an uninterrupted one.
FitResult fit(std::span<const Sample> train, std::span<const data::Case> val, const TrainConfig& cfg,
              const FitOptions& options = {});

/// Loads the manifest under cfg.data_root and runs fit on train/val.
FitResult fit_dataset(const TrainConfig& cfg, const FitOptions& options = {});

/// Means of consecutive blocks of `block` values (a trailing partial block is dropped).
std::vector<double> block_means(std::span<const double> values, int block);

}  // namespace tabnet::train
