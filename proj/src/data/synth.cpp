#include "tabnet/data/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "tabnet/rng.hpp"

namespace tabnet::data {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kIgnore = 4;

struct Heart {
  double cx, cy;
  double r_lv, thick;
  double rv_angle, rv_dist, rv_a, rv_b;
};

int classify(const Heart& h, double scale, double x, double y) {
  const double dx = x - h.cx, dy = y - h.cy;
  const double rho = std::hypot(dx, dy);
  const double r_lv = h.r_lv * scale, r_out = (h.r_lv + h.thick) * scale;
  if (rho <= r_lv) return kSynthLv;
  if (rho <= r_out) return kSynthMyo;
  const double ex = h.cx + std::cos(h.rv_angle) * h.rv_dist * scale;
  const double ey = h.cy + std::sin(h.rv_angle) * h.rv_dist * scale;
  const double u = (x - ex) * std::cos(h.rv_angle) + (y - ey) * std::sin(h.rv_angle);
  const double v = -(x - ex) * std::sin(h.rv_angle) + (y - ey) * std::cos(h.rv_angle);
  const double a = h.rv_a * scale, b = h.rv_b * scale;
  if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0 && rho > r_out + 1.0) return kSynthRv;
  return kSynthBackground;
}

// Stamps a sampled curve into one scribble slice, keeping pixels whose
// dense label matches cls.
template <typename Curve>
void draw(Volume& scribble, const Volume& label, int z, int cls, int brush, Curve&& curve,
          double t0, double t1) {
  const double length_hint = 4.0 * (scribble.nx + scribble.ny);
  const int steps = static_cast<int>(length_hint);
  for (int s = 0; s <= steps; ++s) {
    const double t = t0 + (t1 - t0) * s / steps;
    const auto [px, py] = curve(t);
    const int cx = static_cast<int>(std::lround(px)), cy = static_cast<int>(std::lround(py));
    for (int oy = -brush; oy <= brush; ++oy) {
      for (int ox = -brush; ox <= brush; ++ox) {
        const int x = cx + ox, y = cy + oy;
        if (x < 0 || y < 0 || x >= scribble.nx || y >= scribble.ny) continue;
        if (static_cast<int>(label.at(x, y, z)) == cls) scribble.at(x, y, z) = cls;
      }
    }
  }
}

}  // namespace

SynthCase synth_case(const SynthOptions& opts, int index) {
  auto rng = make_rng(opts.seed, {0x73796e, static_cast<std::uint64_t>(index)});
  const int n = opts.size;
  const double S = n;
  Heart h{};
  h.cx = S / 2 + uniform(rng, -0.08, 0.08) * S;
  h.cy = S / 2 + uniform(rng, -0.08, 0.08) * S;
  h.r_lv = uniform(rng, 0.09, 0.13) * S;
  h.thick = uniform(rng, 0.07, 0.09) * S;
  h.rv_angle = kPi + uniform(rng, -0.4, 0.4);
  h.rv_a = uniform(rng, 0.08, 0.11) * S;
  h.rv_b = uniform(rng, 0.16, 0.22) * S;
  h.rv_dist = h.r_lv + h.thick + 0.5 * h.rv_a;
  const double gain = uniform(rng, 80.0, 120.0);
  const double tex_fx = uniform(rng, 0.5, 1.5), tex_fy = uniform(rng, 0.5, 1.5);
  const double tex_phase = uniform(rng, 0.0, 2 * kPi);
  const double blob_x = uniform(rng, 0.75, 0.9) * S, blob_y = uniform(rng, 0.1, 0.9) * S;
  const double blob_r = uniform(rng, 0.05, 0.08) * S;
  std::normal_distribution<double> noise(0.0, 0.06);

  SynthCase out;
  char id[32];
  std::snprintf(id, sizeof id, "synth%03d", index);
  out.case_id = id;
  for (Volume* v : {&out.image, &out.scribble, &out.label}) {
    v->nx = n;
    v->ny = n;
    v->nz = opts.slices;
    v->data.assign(static_cast<std::size_t>(n) * n * opts.slices, 0.0);
  }
  std::fill(out.scribble.data.begin(), out.scribble.data.end(), kIgnore);

  for (int z = 0; z < opts.slices; ++z) {
    const double scale = 1.0 - 0.1 * z;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const int cls = classify(h, scale, x, y);
        out.label.at(x, y, z) = cls;
        double base = 0.2 + 0.05 * std::sin(2 * kPi * (tex_fx * x + tex_fy * y) / S + tex_phase);
        if (std::hypot(x - blob_x, y - blob_y) < blob_r) base = 0.7;
        if (cls == kSynthLv) base = 0.85;
        if (cls == kSynthMyo) base = 0.5;
        if (cls == kSynthRv) base = 0.75;
        out.image.at(x, y, z) = gain * (base + noise(rng));
      }
    }

    const double r_lv = h.r_lv * scale, r_mid = (h.r_lv + 0.5 * h.thick) * scale;
    const double lv_dir = uniform(rng, 0.0, kPi);
    draw(out.scribble, out.label, z, kSynthLv, 1,
         [&](double t) {
           return std::pair{h.cx + t * std::cos(lv_dir), h.cy + t * std::sin(lv_dir)};
         },
         -0.5 * r_lv, 0.5 * r_lv);
    const double myo_start = uniform(rng, 0.0, 2 * kPi);
    draw(out.scribble, out.label, z, kSynthMyo, 0,
         [&](double t) { return std::pair{h.cx + r_mid * std::cos(t), h.cy + r_mid * std::sin(t)}; },
         myo_start, myo_start + uniform(rng, 1.1, 1.5) * kPi);
    const double ex = h.cx + std::cos(h.rv_angle) * (h.rv_dist + 0.2 * h.rv_a) * scale;
    const double ey = h.cy + std::sin(h.rv_angle) * (h.rv_dist + 0.2 * h.rv_a) * scale;
    const double tang = h.rv_angle + kPi / 2;
    draw(out.scribble, out.label, z, kSynthRv, 0,
         [&](double t) { return std::pair{ex + t * std::cos(tang), ey + t * std::sin(tang)}; },
         -0.5 * h.rv_b * scale, 0.5 * h.rv_b * scale);
    const double r_bg = (h.rv_dist + h.rv_a + 0.12 * S) * scale;
    const double bg_start = uniform(rng, 0.0, 2 * kPi);
    draw(out.scribble, out.label, z, kSynthBackground, 0,
         [&](double t) { return std::pair{h.cx + r_bg * std::cos(t), h.cy + r_bg * std::sin(t)}; },
         bg_start, bg_start + kPi);
  }
  return out;
}

SplitManifest synth_generate(const std::string& root, const SynthOptions& opts) {
  namespace fs = std::filesystem;
  const DatasetPaths paths{root};
  for (const char* sub : {"images", "scribbles", "labels"}) fs::create_directories(fs::path(root) / sub);
  SplitManifest manifest;
  const int total = opts.n_train + opts.n_val + opts.n_test;
  for (int i = 0; i < total; ++i) {
    const auto c = synth_case(opts, i);
    write_nifti(paths.image(c.case_id), c.image, NiftiType::kFloat32);
    write_nifti(paths.scribble(c.case_id), c.scribble, NiftiType::kUint8);
    write_nifti(paths.label(c.case_id), c.label, NiftiType::kUint8);
    auto& list = i < opts.n_train ? manifest.train
                 : i < opts.n_train + opts.n_val ? manifest.val
                                                 : manifest.test;
    list.push_back(c.case_id);
  }
  write_manifest(paths.manifest(), manifest);
  return manifest;
}

}  // namespace tabnet::data
