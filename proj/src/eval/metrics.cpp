#include "tabnet/eval/metrics.hpp"

#include <cmath>
#include <sstream>

#include "tabnet/error.hpp"
#include "tabnet/model/checkpoint.hpp"
#include "tabnet/one_hot.hpp"

namespace tabnet::eval {
namespace {

struct Overlap {
  std::size_t inter = 0, pred = 0, gt = 0;
  void add(const HardLabelMap& p, const HardLabelMap& g, int cls) {
    if (p.height() != g.height() || p.width() != g.width())
      throw ShapeMismatch("dice: prediction and ground truth differ in shape");
    const auto pv = p.labels().values(), gv = g.labels().values();
    for (std::size_t q = 0; q < pv.size(); ++q) {
      const bool a = pv[q] == cls, b = gv[q] == cls;
      inter += a && b;
      pred += a;
      gt += b;
    }
  }
  double dice() const {
    if (pred + gt == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(pred + gt);
  }
};

}  // namespace

double dice_score(const HardLabelMap& pred, const HardLabelMap& gt, int class_id) {
  Overlap o;
  o.add(pred, gt, class_id);
  return o.dice();
}

double volume_dice(std::span<const HardLabelMap> pred, std::span<const HardLabelMap> gt, int class_id) {
  if (pred.size() != gt.size()) throw ShapeMismatch("volume_dice: slice counts differ");
  Overlap o;
  for (std::size_t s = 0; s < pred.size(); ++s) o.add(pred[s], gt[s], class_id);
  return o.dice();
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

PairedDiff paired_difference(const SplitScores& a, const SplitScores& b) {
  if (a.case_ids != b.case_ids) throw ShapeMismatch("paired_difference: score sets cover different cases");
  PairedDiff out;
  out.n = static_cast<int>(a.per_case.size());
  if (out.n == 0) return out;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> d;
    for (int i = 0; i < out.n; ++i) d.push_back(a.per_case[i][k] - b.per_case[i][k]);
    const MeanStd m = mean_std(d);
    out.mean_diff[k] = m.mean;
    if (out.n > 1 && m.std > 0.0) {
      const double sd = m.std * std::sqrt(double(out.n) / (out.n - 1));
      out.t[k] = m.mean / (sd / std::sqrt(double(out.n)));
    }
  }
  return out;
}

SplitScores score_cases(std::span<const data::Case> cases,
                        std::span<const std::vector<HardLabelMap>> predictions) {
  if (cases.size() != predictions.size()) throw ShapeMismatch("score_cases: one prediction stack per case");
  SplitScores out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::vector<HardLabelMap> gt;
    for (const auto& s : cases[i].slices) {
      if (!s.gt) throw Error("case '" + cases[i].case_id + "' has no ground truth to score against");
      gt.push_back(*s.gt);
    }
    std::array<double, 3> row{};
    for (std::size_t k = 0; k < kStructures.size(); ++k)
      row[k] = volume_dice(predictions[i], gt, kStructures[k].label);
    out.case_ids.push_back(cases[i].case_id);
    out.per_case.push_back(row);
  }
  for (std::size_t k = 0; k < kStructures.size(); ++k) {
    std::vector<double> col;
    for (const auto& row : out.per_case) col.push_back(row[k]);
    out.structures[k] = mean_std(col);
    out.average += out.structures[k].mean / static_cast<double>(kStructures.size());
  }
  return out;
}

std::vector<std::vector<HardLabelMap>> predict_cases(model::UNet& net,
                                                     std::span<const data::Case> cases,
                                                     int batch_size) {
  std::vector<std::vector<HardLabelMap>> out;
  for (const auto& c : cases) {
    std::vector<Image> images;
    for (const auto& s : c.slices) images.push_back(s.image);
    std::vector<HardLabelMap> labels;
    for (const auto& p : model::predict(net, images, batch_size)) labels.push_back(argmax(p));
    out.push_back(std::move(labels));
  }
  return out;
}

SplitScores evaluate_model(model::UNet& net, std::span<const data::Case> cases, int batch_size) {
  const auto preds = predict_cases(net, cases, batch_size);
  return score_cases(cases, preds);
}

SplitScores evaluate_ground_truth(std::span<const data::Case> cases) {
  std::vector<std::vector<HardLabelMap>> preds;
  for (const auto& c : cases) {
    std::vector<HardLabelMap> labels;
    for (const auto& s : c.slices) {
      if (!s.gt) throw Error("case '" + c.case_id + "' has no ground truth");
      labels.push_back(*s.gt);
    }
    preds.push_back(std::move(labels));
  }
  return score_cases(cases, preds);
}

SplitScores evaluate_split(const std::string& checkpoint, const data::DatasetPaths& paths,
                           const std::string& split) {
  const auto info = model::read_checkpoint_info(checkpoint);
  std::istringstream text(info.config_text);
  const TrainConfig cfg = parse_config(text);
  model::UNet net(info.spec);
  model::load_checkpoint(checkpoint, net);
  const auto manifest = data::read_manifest(paths.manifest());
  const auto cases = data::load_split(paths, manifest, split, cfg, true);
  return evaluate_model(net, cases, cfg.batch_size);
}

}  // namespace tabnet::eval
