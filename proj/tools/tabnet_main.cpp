// tabnet: command-line entry point.
//
//   tabnet selftest
//   tabnet synth  --out DIR [--train N --val N --test N --size PX --slices N --seed S]
//   tabnet train  [--config FILE] [--set key=value ...] [--data DIR] [--out DIR] [--resume]
//   tabnet eval   --checkpoint FILE [--data DIR] [--split test] [--csv FILE] | --ground-truth
//   tabnet ablate --axis AXIS [--values 1.0,0.8,...] [--config FILE] [--set ...] [--split test]
//   tabnet render --checkpoint FILE --case ID [--slice N] [--data DIR] --out FILE.png
//
// Exit codes: 0 success, 1 failure, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tabnet/data/synth.hpp"
#include "tabnet/error.hpp"
#include "tabnet/eval/ablation.hpp"
#include "tabnet/eval/render.hpp"
#include "tabnet/model/checkpoint.hpp"
#include "tabnet/one_hot.hpp"
#include "tabnet/selftest/checks.hpp"
#include "tabnet/train/train.hpp"

namespace {

using namespace tabnet;
namespace fs = std::filesystem;

struct UsageError : Error {
  using Error::Error;
};

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data_root;
  std::string out_dir;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "INI configuration file");
  cmd->add_option("--set", o.overrides, "Override a key, e.g. --set lambda2=0.3")->take_all();
  cmd->add_option("--data", o.data_root, "Dataset root (default: $TABNET_DATA_ROOT or ./data)");
  cmd->add_option("--out", o.out_dir, "Run directory (overrides output_dir)");
}

// Precedence: overrides > file > defaults. Bad keys are usage errors.
TrainConfig effective_config(const RunOptions& o) {
  TrainConfig cfg;
  try {
    if (!o.config_path.empty()) cfg = load_config(o.config_path);
    apply_overrides(cfg, o.overrides);
    if (!o.data_root.empty()) cfg.data_root = o.data_root;
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    if (cfg.data_root.empty()) cfg.data_root = data::default_data_root();
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--values: cannot parse '" + item + "'");
    }
  }
  return out;
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& r : selftest::run_all()) {
    std::cout << selftest::format(r) << '\n' << std::flush;
    ok = ok && r.pass;
  }
  std::cout << (ok ? "selftest: all invariants hold\n" : "selftest: FAILED\n");
  return ok ? 0 : 1;
}

int cmd_synth(const std::string& out, const data::SynthOptions& opts) {
  const auto m = data::synth_generate(out, opts);
  std::cout << "wrote " << m.train.size() << " train, " << m.val.size() << " val, " << m.test.size()
            << " test cases to " << out << '\n';
  return 0;
}

int cmd_train(const RunOptions& o, bool resume) {
  const TrainConfig cfg = effective_config(o);
  std::cout << "# effective configuration\n" << dump_config(cfg) << std::flush;
  const auto r = train::fit_dataset(cfg, {resume, &std::cout});
  std::cout << "best validation mean Dice " << r.best_metric << " at epoch " << r.best_epoch << '\n'
            << "checkpoints: " << r.best_checkpoint << ", " << r.last_checkpoint << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_root, const std::string& split,
             const std::string& csv, bool ground_truth) {
  const data::DatasetPaths paths{data_root.empty() ? data::default_data_root() : data_root};
  eval::Table table;
  if (ground_truth) {
    TrainConfig cfg;
    const auto manifest = data::read_manifest(paths.manifest());
    const auto cases = data::load_split(paths, manifest, split, cfg, true);
    table.title = "Ground truth vs itself (" + split + ")";
    table.rows.push_back({"", "ground truth", eval::evaluate_ground_truth(cases), std::nullopt});
  } else {
    if (checkpoint.empty()) throw UsageError("eval: --checkpoint or --ground-truth is required");
    table.title = "Evaluation of " + checkpoint + " (" + split + ")";
    table.rows.push_back({"", "model", eval::evaluate_split(checkpoint, paths, split), std::nullopt});
  }
  std::cout << eval::format_table(table);
  if (!csv.empty()) {
    std::ofstream f(csv);
    eval::write_table_csv(f, table);
  }
  return 0;
}

int cmd_ablate(const RunOptions& o, const std::string& axis, const std::string& values,
               const std::string& split) {
  const TrainConfig cfg = effective_config(o);
  try {
    eval::ablation_rows(axis, cfg);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const data::DatasetPaths paths{cfg.data_root};
  const auto manifest = data::read_manifest(paths.manifest());
  const auto train_cases = data::load_split(paths, manifest, "train", cfg);
  const auto val_cases = data::load_split(paths, manifest, "val", cfg);
  const auto score_split = split.empty() ? (manifest.test.empty() ? "val" : "test") : split;
  const auto score_cases = data::load_split(paths, manifest, score_split, cfg);
  const auto samples = train::flatten(train_cases);
  const auto table = eval::run_ablation(axis, {samples, val_cases, score_cases}, cfg,
                                        values.empty() ? std::vector<double>{} : parse_values(values),
                                        &std::cout);
  const fs::path dir = fs::path(cfg.output_dir) / axis;
  fs::create_directories(dir);
  std::ofstream(dir / "table.txt") << eval::format_table(table);
  std::ofstream csv(dir / "table.csv");
  eval::write_table_csv(csv, table);
  std::cout << eval::format_table(table);
  return 0;
}

int cmd_render(const std::string& checkpoint, const std::string& data_root, const std::string& case_id,
               int slice, const std::string& out, bool with_gt) {
  const auto info = model::read_checkpoint_info(checkpoint);
  std::istringstream text(info.config_text);
  const TrainConfig cfg = parse_config(text);
  model::UNet net(info.spec);
  model::load_checkpoint(checkpoint, net);
  const data::DatasetPaths paths{data_root.empty() ? data::default_data_root() : data_root};
  std::optional<std::string> gt_path;
  if (with_gt && fs::exists(paths.label(case_id))) gt_path = paths.label(case_id);
  auto c = data::load_case(paths.image(case_id), paths.scribble(case_id), gt_path, cfg.num_classes,
                           cfg.ignore_label, case_id);
  if (slice < 0 || slice >= static_cast<int>(c.slices.size()))
    throw UsageError("render: slice " + std::to_string(slice) + " out of range (case has " +
                     std::to_string(c.slices.size()) + ")");
  const auto s = data::prepare_slice(c.slices[slice], cfg.image_size);
  const std::vector<Image> images{s.image};
  const auto pred = argmax(model::predict(net, images, 1).front());
  eval::render_overlay(s.image, pred, s.gt, out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scribble-supervised segmentation with triplet augmentation and boundary-aware pseudo-labels"};
  app.require_subcommand(1);

  app.add_subcommand("selftest", "Run the property and oracle checks");

  auto* synth = app.add_subcommand("synth", "Write the synthetic phantom dataset");
  std::string synth_out = "data/synth";
  data::SynthOptions synth_opts;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--train", synth_opts.n_train, "Training cases");
  synth->add_option("--val", synth_opts.n_val, "Validation cases");
  synth->add_option("--test", synth_opts.n_test, "Test cases");
  synth->add_option("--size", synth_opts.size, "In-plane size in pixels");
  synth->add_option("--slices", synth_opts.slices, "Slices per volume");
  synth->add_option("--seed", synth_opts.seed, "Generator seed");

  RunOptions train_opts;
  bool resume = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_run_options(train_cmd, train_opts);
  train_cmd->add_flag("--resume", resume, "Continue from <out>/last.ckpt");

  std::string checkpoint, eval_data, split = "test", csv;
  bool ground_truth = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a split");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file");
  eval_cmd->add_option("--data", eval_data, "Dataset root");
  eval_cmd->add_option("--split", split, "train, val or test");
  eval_cmd->add_option("--csv", csv, "Also write the table as CSV");
  eval_cmd->add_flag("--ground-truth", ground_truth, "Score the ground truth against itself");

  RunOptions ablate_opts;
  std::string axis, values, ablate_split;
  auto* ablate = app.add_subcommand("ablate", "Train and score every row of an ablation axis");
  add_run_options(ablate, ablate_opts);
  ablate->add_option("--axis", axis, "loss_terms, tas_branches, pl_branches+fusion or lambda_sweep")->required();
  ablate->add_option("--values", values, "Comma-separated lambda grid for lambda_sweep");
  ablate->add_option("--split", ablate_split, "Split to score (default test, or val when there is none)");

  std::string render_ckpt, render_data, case_id, render_out;
  int slice = 0;
  bool no_gt = false;
  auto* render = app.add_subcommand("render", "Write a contour overlay PNG for one slice");
  render->add_option("--checkpoint", render_ckpt, "Checkpoint file")->required();
  render->add_option("--data", render_data, "Dataset root");
  render->add_option("--case", case_id, "Case id")->required();
  render->add_option("--slice", slice, "Slice index");
  render->add_option("--out", render_out, "Output PNG")->required();
  render->add_flag("--no-gt", no_gt, "Prediction panel only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("selftest")) return cmd_selftest();
    if (app.got_subcommand("synth")) return cmd_synth(synth_out, synth_opts);
    if (app.got_subcommand("train")) return cmd_train(train_opts, resume);
    if (app.got_subcommand("eval")) return cmd_eval(checkpoint, eval_data, split, csv, ground_truth);
    if (app.got_subcommand("ablate")) return cmd_ablate(ablate_opts, axis, values, ablate_split);
    if (app.got_subcommand("render"))
      return cmd_render(render_ckpt, render_data, case_id, slice, render_out, !no_gt);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
