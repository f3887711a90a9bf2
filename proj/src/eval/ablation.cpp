#include "tabnet/eval/ablation.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>

#include "tabnet/error.hpp"
#include "tabnet/model/checkpoint.hpp"

namespace tabnet::eval {
namespace {

std::string lambda_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2g", v);
  std::string s = buf;
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

// Published averages for the lambda grid, keyed by (which lambda, value).
std::optional<double> lambda_reference(int which, double v) {
  static const std::map<double, double> refs[3] = {
      {{1.0, 0.891}, {0.8, 0.889}, {0.5, 0.879}, {0.3, 0.875}, {0.1, 0.865}},
      {{1.0, 0.876}, {0.8, 0.878}, {0.5, 0.883}, {0.3, 0.891}, {0.1, 0.878}},
      {{1.0, 0.867}, {0.8, 0.877}, {0.5, 0.879}, {0.3, 0.882}, {0.1, 0.891}},
  };
  for (const auto& [key, ref] : refs[which])
    if (std::abs(key - v) < 1e-9) return ref;
  return std::nullopt;
}

}  // namespace

const std::vector<std::string>& ablation_axes() {
  static const std::vector<std::string> axes{"loss_terms", "tas_branches", "pl_branches+fusion",
                                             "lambda_sweep"};
  return axes;
}

std::vector<AblationRow> ablation_rows(const std::string& axis, const TrainConfig& base,
                                       const std::vector<double>& lambda_values) {
  std::vector<AblationRow> rows;
  auto add = [&](std::string group, std::string label, std::string slug, TrainConfig cfg,
                 std::optional<double> ref) {
    cfg.output_dir = (std::filesystem::path(base.output_dir) / axis / slug).string();
    rows.push_back({std::move(group), std::move(label), std::move(slug), std::move(cfg), ref});
  };

  if (axis == "loss_terms") {
    TrainConfig none = base;
    none.tas_branches = BranchSet::parse("none");
    none.lambda1 = 1.0;
    none.lambda2 = none.lambda3 = 0.0;
    add("", "none", "none", none, 0.819);
    TrainConfig tas = base;
    tas.lambda1 = 1.0;
    tas.lambda2 = tas.lambda3 = 0.0;
    add("", "L_TAS", "tas", tas, 0.834);
    TrainConfig pl = tas;
    pl.lambda2 = 0.3;
    add("", "L_TAS+L_PL", "tas_pl", pl, 0.878);
    TrainConfig bd = pl;
    bd.lambda3 = 0.1;
    add("", "L_TAS+L_PL+L_BD", "tas_pl_bd", bd, 0.891);
  } else if (axis == "tas_branches") {
    const struct {
      const char* set;
      const char* label;
      double ref;
    } subsets[] = {{"i", "Cutout", 0.861},
                   {"j", "Jigsaw", 0.869},
                   {"k", "Intensity", 0.865},
                   {"i,j", "(Cutout, Jigsaw)", 0.883},
                   {"i,k", "(Cutout, Intensity)", 0.881},
                   {"j,k", "(Jigsaw, Intensity)", 0.885},
                   {"i,j,k", "(Intensity, Cutout, Jigsaw)", 0.891}};
    for (const auto& s : subsets) {
      TrainConfig cfg = base;
      cfg.tas_branches = BranchSet::parse(s.set);
      std::string slug = s.set;
      std::erase(slug, ',');
      add(s.set[1] == '\0' ? "single" : s.set[3] == '\0' ? "pair" : "triple", s.label, "tas_" + slug, cfg, s.ref);
    }
  } else if (axis == "pl_branches+fusion") {
    const struct {
      const char* set;
      FusionStrategy fusion;
      const char* label;
      const char* group;
      double ref;
    } subsets[] = {{"i", FusionStrategy::kLossWeighted, "y_i", "branches", 0.878},
                   {"j", FusionStrategy::kLossWeighted, "y_j", "branches", 0.880},
                   {"k", FusionStrategy::kLossWeighted, "y_k", "branches", 0.882},
                   {"i,j", FusionStrategy::kLossWeighted, "PL(y_i,y_j)", "branches", 0.884},
                   {"i,k", FusionStrategy::kLossWeighted, "PL(y_i,y_k)", "branches", 0.884},
                   {"j,k", FusionStrategy::kLossWeighted, "PL(y_j,y_k)", "branches", 0.891},
                   {"i,j,k", FusionStrategy::kLossWeighted, "PL(y_i,y_j,y_k)", "branches", 0.885},
                   {"j,k", FusionStrategy::kAverage, "Average(y_j,y_k)", "fusion", 0.883},
                   {"j,k", FusionStrategy::kRandom, "Random(y_j,y_k)", "fusion", 0.884}};
    for (const auto& s : subsets) {
      TrainConfig cfg = base;
      cfg.pl_branches = BranchSet::parse(s.set);
      cfg.pl_fusion = s.fusion;
      std::string slug = s.set;
      std::erase(slug, ',');
      add(s.group, s.label, "pl_" + slug + "_" + to_string(s.fusion), cfg, s.ref);
    }
  } else if (axis == "lambda_sweep") {
    const std::vector<double> values =
        lambda_values.empty() ? std::vector<double>{1.0, 0.8, 0.5, 0.3, 0.1} : lambda_values;
    for (int which = 0; which < 3; ++which) {
      const char* group[] = {"lambda1 (lambda2=0.3, lambda3=0.1)", "lambda2 (lambda1=1.0, lambda3=0.1)",
                             "lambda3 (lambda1=1.0, lambda2=0.3)"};
      for (double v : values) {
        TrainConfig cfg = base;
        cfg.lambda1 = 1.0;
        cfg.lambda2 = 0.3;
        cfg.lambda3 = 0.1;
        (which == 0 ? cfg.lambda1 : which == 1 ? cfg.lambda2 : cfg.lambda3) = v;
        add(group[which], lambda_text(v), "lambda" + std::to_string(which + 1) + "_" + lambda_text(v), cfg,
            lambda_reference(which, v));
      }
    }
  } else {
    std::string known;
    for (const auto& a : ablation_axes()) known += (known.empty() ? "" : ", ") + a;
    throw ConfigError("unknown ablation axis '" + axis + "' (expected one of " + known + ")");
  }
  return rows;
}

Table run_ablation(const std::string& axis, const AblationData& data, const TrainConfig& base,
                   const std::vector<double>& lambda_values, std::ostream* progress) {
  Table table;
  table.title = "Ablation: " + axis;
  for (const auto& row : ablation_rows(axis, base, lambda_values)) {
    if (progress) *progress << "== " << axis << " / " << row.label << '\n' << std::flush;
    const auto fitted = train::fit(data.train, data.val, row.cfg, {false, progress});
    model::UNet net({1, row.cfg.num_classes, row.cfg.base_width, row.cfg.depth});
    model::load_checkpoint(fitted.best_checkpoint, net);
    table.rows.push_back({row.group, row.label, evaluate_model(net, data.score, row.cfg.batch_size),
                          row.reference_avg});
  }
  return table;
}

}  // namespace tabnet::eval
