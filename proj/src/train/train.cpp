#include "tabnet/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tabnet/bap/bap.hpp"
#include "tabnet/error.hpp"
#include "tabnet/model/checkpoint.hpp"
#include "tabnet/tas/loss.hpp"

namespace tabnet::train {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kAugmentStream = 0x617567;
constexpr std::uint64_t kShuffleStream = 0x736875;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

model::NetworkSpec network_spec(const TrainConfig& cfg) {
  return {1, cfg.num_classes, cfg.base_width, cfg.depth};
}

void check_finite(const char* name, double v) {
  if (!std::isfinite(v)) throw NonFiniteLoss("non-finite " + std::string(name) + " (" + num(v) + ")");
}

// Config text with the fields a resumed run may change blanked out.
std::string resume_key(TrainConfig cfg) {
  cfg.epochs = 0;
  cfg.output_dir.clear();
  cfg.data_root.clear();
  return dump_config(cfg);
}

// Keeps the header and rows whose first field is an epoch below `epochs`.
void truncate_log(const fs::path& path, int epochs) {
  std::ifstream in(path);
  if (!in) return;
  std::string line, kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoi(line.substr(0, line.find(','))) < epochs) kept += line + '\n';
    header = false;
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

}  // namespace

double total_loss(const LossTerms& terms, const TrainConfig& cfg) {
  check_finite("L_TAS", terms.tas);
  check_finite("L_PL", terms.pl);
  check_finite("L_BD", terms.bd);
  return cfg.lambda1 * terms.tas + cfg.lambda2 * terms.pl + cfg.lambda3 * terms.bd;
}

std::vector<Sample> flatten(std::span<const data::Case> cases) {
  std::vector<Sample> out;
  for (const auto& c : cases)
    for (const auto& s : c.slices) out.push_back({s.image, s.scribble});
  return out;
}

Views make_views(const Sample& sample, const TrainConfig& cfg, Rng& rng) {
  Views v;
  v.jigsaw = tas::sample_jigsaw(cfg.jigsaw_grid, rng);
  v.intensity = tas::sample_intensity(cfg, rng);
  const auto& branches = cfg.tas_branches;
  if (branches.cutout) {
    try {
      v.box = tas::infer_cutout_box(sample.scribble, cfg.cutout_margin, static_cast<float>(cfg.cutout_fill));
    } catch (const NoForeground&) {
      v.box.reset();
    }
  }
  v.x_i = v.box ? tas::apply_cutout(sample.image, *v.box) : sample.image;
  if (!branches.jigsaw) v.jigsaw = JigsawSpec::identity(cfg.jigsaw_grid);
  v.x_j = branches.jigsaw ? tas::apply_jigsaw(sample.image, v.jigsaw) : sample.image;
  if (!branches.intensity) v.intensity = {};
  v.x_k = branches.intensity ? tas::apply_intensity(sample.image, v.intensity.alpha, v.intensity.beta)
                             : sample.image;
  return v;
}

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg), net_(network_spec(cfg)), adam_(net_.parameters()) {
  cfg_.validate();
  net_.init(cfg_.seed);
}

StepMetrics Trainer::compute_gradients(std::span<const Sample> batch, int epoch, int step) {
  if (batch.empty()) throw OutOfRange("train step: empty batch");
  const int B = static_cast<int>(batch.size());
  std::vector<Views> views;
  std::vector<Rng> rngs;
  std::vector<Image> inputs;
  for (int s = 0; s < B; ++s) {
    rngs.push_back(make_rng(cfg_.seed, {kAugmentStream, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(s)}));
    views.push_back(make_views(batch[s], cfg_, rngs.back()));
    inputs.push_back(views.back().x_i);
    inputs.push_back(views.back().x_j);
    inputs.push_back(views.back().x_k);
  }

  net_.zero_grad();
  const model::Tensor probs = net_.forward(model::to_batch(inputs));
  model::Tensor grad(probs.n, probs.c, probs.h, probs.w);

  StepMetrics m;
  m.epoch = epoch;
  m.step = step;
  m.lr = cfg_.lr_at_epoch(epoch);
  const double inv_b = 1.0 / B;
  std::vector<std::array<ProbMap<float>, 3>> view_grads;
  for (int s = 0; s < B; ++s) {
    const auto& scribble = batch[s].scribble;
    std::array<ProbMap<float>, 3> y{sample_probmap(probs, 3 * s),
                                   tas::invert_jigsaw(sample_probmap(probs, 3 * s + 1), views[s].jigsaw),
                                   sample_probmap(probs, 3 * s + 2)};
    std::array<tas::LossWithGrad<float>, 3> ce;
    for (int b = 0; b < 3; ++b) ce[b] = tas::partial_cross_entropy_with_grad(y[b], scribble, cfg_.ce_reduction);

    const bool use[3] = {cfg_.pl_branches.cutout, cfg_.pl_branches.jigsaw, cfg_.pl_branches.intensity};
    std::vector<const ProbMap<float>*> preds;
    std::vector<double> ce_values;
    std::vector<int> which;
    for (int b = 0; b < 3; ++b) {
      if (!use[b]) continue;
      preds.push_back(&y[b]);
      ce_values.push_back(ce[b].value);
      which.push_back(b);
    }
    const auto bap = bap::bap_forward<float>(preds, ce_values, bap::BapOptions::from(cfg_, &rngs[s]));

    m.ce_i += ce[0].value * inv_b;
    m.ce_j += ce[1].value * inv_b;
    m.ce_k += ce[2].value * inv_b;
    m.terms.pl += bap.pl_loss * inv_b;
    m.terms.bd += bap.boundary_loss * inv_b;

    std::array<ProbMap<float>, 3> g;
    for (int b = 0; b < 3; ++b) {
      g[b] = std::move(ce[b].grad);
      for (float& v : g[b].values()) v = static_cast<float>(v * cfg_.lambda1 * inv_b);
    }
    for (std::size_t q = 0; q < which.size(); ++q) {
      auto dst = g[which[q]].values();
      const auto gp = bap.grads_pl[q].values(), gb = bap.grads_bd[q].values();
      for (std::size_t p = 0; p < dst.size(); ++p)
        dst[p] += static_cast<float>((cfg_.lambda2 * gp[p] + cfg_.lambda3 * gb[p]) * inv_b);
    }
    g[1] = tas::apply_jigsaw(g[1], views[s].jigsaw);
    view_grads.push_back(std::move(g));
  }
  m.terms.tas = m.ce_i + m.ce_j + m.ce_k;
  m.total = total_loss(m.terms, cfg_);

  for (int s = 0; s < B; ++s)
    for (int b = 0; b < 3; ++b) model::store_sample(grad, 3 * s + b, view_grads[s][b]);
  net_.backward(grad);
  return m;
}

StepMetrics Trainer::step(std::span<const Sample> batch, int epoch, int step) {
  const StepMetrics m = compute_gradients(batch, epoch, step);
  adam_.step(m.lr);
  return m;
}

std::vector<double> block_means(std::span<const double> values, int block) {
  std::vector<double> out;
  if (block < 1) return out;
  for (std::size_t start = 0; start + block <= values.size(); start += block)
    out.push_back(std::accumulate(values.begin() + start, values.begin() + start + block, 0.0) / block);
  return out;
}

FitResult fit(std::span<const Sample> train, std::span<const data::Case> val, const TrainConfig& cfg,
              const FitOptions& options) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  {
    std::ofstream snap(dir / "config.ini");
    snap << dump_config(cfg);
    if (!snap) throw Error("cannot write " + (dir / "config.ini").string());
  }
  const fs::path last = dir / "last.ckpt", best = dir / "best.ckpt";
  const fs::path epochs_csv = dir / "epochs.csv", steps_csv = dir / "steps.csv";

  Trainer trainer(cfg);
  FitResult result;
  result.last_checkpoint = last.string();
  result.best_checkpoint = best.string();
  model::CheckpointInfo info{trainer.net().spec(), config_hash(cfg), dump_config(cfg), 0, -1.0, -1};

  int start = 0;
  if (options.resume && fs::exists(last)) {
    const auto stored = model::read_checkpoint_info(last);
    std::istringstream text(stored.config_text);
    if (resume_key(parse_config(text)) != resume_key(cfg))
      throw ConfigError("cannot resume " + last.string() + ": configuration differs from the stored run");
    model::load_checkpoint(last, trainer.net(), &trainer.optimizer());
    start = stored.epoch;
    info.best_metric = stored.best_metric;
    info.best_epoch = stored.best_epoch;
    truncate_log(epochs_csv, start);
    truncate_log(steps_csv, start);
  } else {
    std::ofstream(epochs_csv, std::ios::trunc)
        << "epoch,lr,L_TAS,L_PL,L_BD,total,val_LV,val_Myo,val_RV,val_mean\n";
    std::ofstream(steps_csv, std::ios::trunc) << "epoch,step,lr,ce_i,ce_j,ce_k,L_TAS,L_PL,L_BD,total\n";
    model::save_checkpoint(last, trainer.net(), &trainer.optimizer(), info);
  }
  std::ofstream epoch_log(epochs_csv, std::ios::app), step_log(steps_csv, std::ios::app);

  std::vector<std::size_t> order(train.size());
  for (int epoch = start; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = make_rng(cfg.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cfg.lr_at_epoch(epoch);
    int steps = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size, ++steps) {
      std::vector<Sample> batch;
      for (std::size_t q = first; q < std::min(order.size(), first + cfg.batch_size); ++q)
        batch.push_back(train[order[q]]);
      const auto m = trainer.step(batch, epoch, steps);
      step_log << epoch << ',' << steps << ',' << num(m.lr) << ',' << num(m.ce_i) << ',' << num(m.ce_j)
               << ',' << num(m.ce_k) << ',' << num(m.terms.tas) << ',' << num(m.terms.pl) << ','
               << num(m.terms.bd) << ',' << num(m.total) << '\n';
      rec.terms.tas += m.terms.tas;
      rec.terms.pl += m.terms.pl;
      rec.terms.bd += m.terms.bd;
    }
    if (steps > 0) {
      rec.terms.tas /= steps;
      rec.terms.pl /= steps;
      rec.terms.bd /= steps;
    }
    rec.total = total_loss(rec.terms, cfg);

    epoch_log << epoch << ',' << num(rec.lr) << ',' << num(rec.terms.tas) << ',' << num(rec.terms.pl)
              << ',' << num(rec.terms.bd) << ',' << num(rec.total);
    if (!val.empty()) {
      rec.val = eval::evaluate_model(trainer.net(), val, cfg.batch_size);
      for (const auto& s : rec.val->structures) epoch_log << ',' << num(s.mean);
      epoch_log << ',' << num(rec.val->average);
    } else {
      epoch_log << ",,,,";
    }
    epoch_log << '\n';
    epoch_log.flush();
    step_log.flush();

    info.epoch = epoch + 1;
    const double metric = rec.val ? eval::selection_metric(*rec.val) : 0.0;
    if (!rec.val || metric > info.best_metric) {
      info.best_metric = metric;
      info.best_epoch = epoch;
      model::save_checkpoint(best, trainer.net(), nullptr, info);
    }
    model::save_checkpoint(last, trainer.net(), &trainer.optimizer(), info);
    if (options.progress) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %d lr %.3g L_TAS %.4f L_PL %.4f L_BD %.4f total %.4f val %.4f\n",
                    epoch, rec.lr, rec.terms.tas, rec.terms.pl, rec.terms.bd, rec.total,
                    rec.val ? rec.val->average : 0.0);
      *options.progress << line << std::flush;
    }
    result.history.push_back(std::move(rec));
  }
  if (!fs::exists(best)) model::save_checkpoint(best, trainer.net(), nullptr, info);
  result.epochs_completed = std::max(start, cfg.epochs);
  result.best_metric = info.best_metric;
  result.best_epoch = info.best_epoch;
  return result;
}

FitResult fit_dataset(const TrainConfig& cfg, const FitOptions& options) {
  const data::DatasetPaths paths{cfg.data_root.empty() ? data::default_data_root() : cfg.data_root};
  const auto manifest = data::read_manifest(paths.manifest());
  const auto train_cases = data::load_split(paths, manifest, "train", cfg);
  const auto val_cases = data::load_split(paths, manifest, "val", cfg);
  const auto samples = flatten(train_cases);
  return fit(samples, val_cases, cfg, options);
}

}  // namespace tabnet::train
