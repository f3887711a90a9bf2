#include "tabnet/selftest/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace tabnet::oracle {

template <typename T>
ProbMap<T> random_probmap(int K, int H, int W, Rng& rng, double logit_scale) {
  std::normal_distribution<double> normal(0.0, logit_scale);
  ProbMap<T> out(K, H, W);
  std::vector<double> logits(static_cast<std::size_t>(K));
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double mx = -1e300;
      for (auto& l : logits) mx = std::max(mx, l = normal(rng));
      double z = 0.0;
      for (auto& l : logits) z += (l = std::exp(l - mx));
      for (int k = 0; k < K; ++k) out(k, r, c) = static_cast<T>(logits[k] / z);
    }
  }
  return out;
}

template ProbMap<float> random_probmap<float>(int, int, int, Rng&, double);
template ProbMap<double> random_probmap<double>(int, int, int, Rng&, double);

ScribbleMask random_scribble(int K, int H, int W, Rng& rng, double density) {
  Plane<int> labels(H, W, K);
  std::uniform_int_distribution<int> cls(0, K - 1);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      if (uniform(rng, 0.0, 1.0) < density) labels(r, c) = cls(rng);
  return {std::move(labels), K, K};
}

Plane<int> random_binary(int H, int W, Rng& rng, double density) {
  Plane<int> out(H, W);
  for (int& v : out.values()) v = uniform(rng, 0.0, 1.0) < density ? 1 : 0;
  return out;
}

HardLabelMap fuse_loop(const std::vector<const ProbMap<float>*>& preds,
                       const std::vector<double>& weights) {
  const int K = preds[0]->channels(), H = preds[0]->height(), W = preds[0]->width();
  Plane<int> out(H, W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      int best = -1;
      double best_score = 0.0;
      for (int k = 0; k < K; ++k) {
        double score = 0.0;
        for (std::size_t b = 0; b < preds.size(); ++b)
          score += weights[b] * static_cast<double>((*preds[b])(k, r, c));
        if (best < 0 || score > best_score) {
          best = k;
          best_score = score;
        }
      }
      out(r, c) = best;
    }
  }
  return {std::move(out), K};
}

Plane<int> binary_erosion(const Plane<int>& mask, int pool_size) {
  const int half = pool_size / 2;
  const int H = mask.height(), W = mask.width();
  Plane<int> padded(H + 2 * half, W + 2 * half);
  for (int r = 0; r < padded.height(); ++r)
    for (int c = 0; c < padded.width(); ++c)
      padded(r, c) = mask(std::clamp(r - half, 0, H - 1), std::clamp(c - half, 0, W - 1));
  Plane<int> out(H, W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      bool all = true;
      for (int dr = 0; dr < pool_size; ++dr)
        for (int dc = 0; dc < pool_size; ++dc) all = all && padded(r + dr, c + dc) == 1;
      out(r, c) = all ? 1 : 0;
    }
  }
  return out;
}

double boundary_dice_loop(const Stack<double>& b, const Stack<double>& b_pl, double eps) {
  double inter = 0.0, sb = 0.0, sp = 0.0;
  for (int k = 0; k < b.channels(); ++k) {
    for (int r = 0; r < b.height(); ++r) {
      for (int c = 0; c < b.width(); ++c) {
        inter += b(k, r, c) * b_pl(k, r, c);
        sb += b(k, r, c);
        sp += b_pl(k, r, c);
      }
    }
  }
  return 1.0 - (2.0 * inter + eps) / (sb + sp + eps);
}

double partial_ce_loop(const ProbMap<double>& pred, const ScribbleMask& s) {
  double sum = 0.0;
  int n = 0;
  for (int r = 0; r < pred.height(); ++r) {
    for (int c = 0; c < pred.width(); ++c) {
      const int label = s.labels()(r, c);
      if (label == s.ignore_label()) continue;
      for (int k = 0; k < pred.channels(); ++k)
        if (k == label) sum += -std::log(pred(k, r, c));
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                          double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace tabnet::oracle
