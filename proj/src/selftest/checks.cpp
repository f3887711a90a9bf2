#include "tabnet/selftest/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <unistd.h>

#include "tabnet/bap/bap.hpp"
#include "tabnet/data/synth.hpp"
#include "tabnet/eval/metrics.hpp"
#include "tabnet/one_hot.hpp"
#include "tabnet/selftest/oracles.hpp"
#include "tabnet/tas/augment.hpp"
#include "tabnet/tas/loss.hpp"
#include "tabnet/train/train.hpp"

namespace tabnet::selftest {
namespace {

using Clock = std::chrono::steady_clock;

CheckResult timed(const std::string& name, const std::function<std::string(bool&)>& body) {
  CheckResult r;
  r.name = name;
  const auto t0 = Clock::now();
  try {
    bool pass = true;
    r.detail = body(pass);
    r.pass = pass;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::vector<double> flat(const Stack<double>& s) { return {s.values().begin(), s.values().end()}; }

Stack<double> unflat(const std::vector<double>& v, int K, int H, int W) {
  Stack<double> s(K, H, W);
  std::copy(v.begin(), v.end(), s.values().begin());
  return s;
}

// Central differences at h = 1e-6 resolve about 1e-10 absolute; below this
// magnitude relative error is not meaningful.
constexpr double kRelFloor = 1e-5;

std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("tabnet_selftest_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

CheckResult check_jigsaw_inverse(int pairs, int size, std::uint64_t seed) {
  return timed("jigsaw_inverse", [&](bool& pass) {
    auto rng = make_rng(seed);
    const int grids[] = {2, 3, 4, 7};
    std::uniform_int_distribution<int> pick(0, 3);
    std::uniform_real_distribution<float> value(-3.0f, 3.0f);
    Stack<float> x(1, size, size);
    int failures = 0;
    for (int t = 0; t < pairs; ++t) {
      const int grid = grids[pick(rng)];
      if (size % grid != 0) continue;
      for (float& v : x.values()) v = value(rng);
      const auto spec = tas::sample_jigsaw(grid, rng);
      if (tas::invert_jigsaw(tas::apply_jigsaw(x, spec), spec) != x) ++failures;
    }
    pass = failures == 0;
    return std::to_string(pairs) + " pairs on " + std::to_string(size) + "x" + std::to_string(size) +
           ", " + std::to_string(failures) + " mismatches";
  });
}

CheckResult check_fusion_oracle(int trials, std::uint64_t seed) {
  return timed("fusion_oracle", [&](bool& pass) {
    auto rng = make_rng(seed);
    std::exponential_distribution<double> loss(1.0);
    int label_mismatch = 0, order_violations = 0;
    double worst_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      const auto yj = oracle::random_probmap<float>(4, 8, 8, rng, 2.0);
      const auto yk = oracle::random_probmap<float>(4, 8, 8, rng, 2.0);
      const double lj = loss(rng), lk = loss(rng);
      const auto w = bap::fusion_weights(lj, lk);
      worst_sum = std::max(worst_sum, std::abs(w.w_j + w.w_k - 1.0));
      if ((lj < lk && !(w.w_j > w.w_k)) || (lk < lj && !(w.w_k > w.w_j))) ++order_violations;
      if (bap::fuse_pseudo_label(yj, yk, w) != oracle::fuse_loop({&yj, &yk}, {w.w_j, w.w_k}))
        ++label_mismatch;
    }
    pass = label_mismatch == 0 && order_violations == 0 && worst_sum <= 1e-6;
    return std::to_string(trials) + " pairs, " + std::to_string(label_mismatch) + " label mismatches, " +
           std::to_string(order_violations) + " order violations, max |w_j+w_k-1| " + fmt("%.2e", worst_sum);
  });
}

CheckResult check_boundary_oracle(int masks, std::uint64_t seed) {
  return timed("boundary_oracle", [&](bool& pass) {
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> dim(3, 24);
    int mismatches = 0;
    for (int t = 0; t < masks; ++t) {
      const int h = dim(rng), w = dim(rng);
      const auto mask = oracle::random_binary(h, w, rng, uniform(rng, 0.2, 0.8));
      const auto eroded = oracle::binary_erosion(mask, 3);
      Stack<double> m(1, h, w);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) m(0, r, c) = mask(r, c);
      const auto b = bap::extract_boundary(m, 3);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          if (b(0, r, c) != static_cast<double>(mask(r, c) - eroded(r, c))) {
            ++mismatches;
            r = h;
            break;
          }
    }
    int nonzero_constant = 0;
    for (double v : {0.0, 0.25, 1.0}) {
      const Stack<double> constant(3, 9, 7, v);
      for (double x : bap::extract_boundary(constant).values()) nonzero_constant += x != 0.0;
    }
    pass = mismatches == 0 && nonzero_constant == 0;
    return std::to_string(masks) + " masks, " + std::to_string(mismatches) + " mismatching, " +
           std::to_string(nonzero_constant) + " nonzero entries on constant maps";
  });
}

CheckResult check_grad_partial_ce(int instances, std::uint64_t seed) {
  return timed("grad_partial_ce", [&](bool& pass) {
    auto rng = make_rng(seed);
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
      const auto s = oracle::random_scribble(3, 5, 4, rng, 0.5);
      const auto pred = oracle::random_probmap<double>(3, 5, 4, rng);
      const auto lg = tas::partial_cross_entropy_with_grad(pred, s);
      const auto fd = oracle::finite_difference(
          [&](const std::vector<double>& v) { return tas::partial_cross_entropy(unflat(v, 3, 5, 4), s); },
          flat(pred));
      worst = std::max(worst, oracle::max_relative_error(flat(lg.grad), fd, kRelFloor));
    }
    pass = worst < 1e-4;
    return std::to_string(instances) + " instances, max relative error " + fmt("%.2e", worst);
  });
}

CheckResult check_grad_dice(int instances, std::uint64_t seed) {
  return timed("grad_dice", [&](bool& pass) {
    auto rng = make_rng(seed);
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
      const auto pred = oracle::random_probmap<double>(3, 5, 6, rng);
      const auto target = one_hot<double>(argmax(oracle::random_probmap<double>(3, 5, 6, rng)));
      const auto lg = bap::dice_loss_with_grad(pred, target);
      const auto fd = oracle::finite_difference(
          [&](const std::vector<double>& v) { return bap::dice_loss(unflat(v, 3, 5, 6), target); },
          flat(pred));
      worst = std::max(worst, oracle::max_relative_error(flat(lg.grad), fd, kRelFloor));
    }
    pass = worst < 1e-4;
    return std::to_string(instances) + " instances, max relative error " + fmt("%.2e", worst);
  });
}

CheckResult check_grad_boundary(int instances, std::uint64_t seed) {
  return timed("grad_boundary", [&](bool& pass) {
    auto rng = make_rng(seed);
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
      const auto yj = oracle::random_probmap<double>(3, 6, 5, rng);
      const auto yk = oracle::random_probmap<double>(3, 6, 5, rng);
      const auto y_pl = argmax(oracle::random_probmap<double>(3, 6, 5, rng));
      const ProbMap<double>* preds[] = {&yj, &yk};
      const auto sup = bap::supervise<double>(preds, y_pl, bap::BapOptions{});
      const auto fd = oracle::finite_difference(
          [&](const std::vector<double>& v) {
            const auto y = unflat(v, 3, 6, 5);
            const ProbMap<double>* p[] = {&y, &yk};
            return bap::supervise<double>(p, y_pl, bap::BapOptions{}).boundary_loss;
          },
          flat(yj));
      worst = std::max(worst, oracle::max_relative_error(flat(sup.grads_bd[0]), fd, kRelFloor));
    }
    pass = worst < 1e-4;
    return std::to_string(instances) + " instances, max relative error " + fmt("%.2e", worst);
  });
}

CheckResult check_detachment(int trials, std::uint64_t seed) {
  return timed("detachment", [&](bool& pass) {
    auto rng = make_rng(seed);
    int changed = 0;
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      const auto s = oracle::random_scribble(4, 8, 8, rng, 0.2);
      const auto yj = oracle::random_probmap<double>(4, 8, 8, rng);
      const auto yk = oracle::random_probmap<double>(4, 8, 8, rng);
      const ProbMap<double>* preds[] = {&yj, &yk};
      const double ce[] = {tas::partial_cross_entropy(yj, s), tas::partial_cross_entropy(yk, s)};
      const auto base = bap::bap_forward<double>(preds, ce, bap::BapOptions{});
      // Same label from a different weighting: only the pseudo-label path moved.
      for (double scale : {0.999, 1.001}) {
        const double moved[] = {ce[0] * scale, ce[1]};
        const auto other = bap::bap_forward<double>(preds, moved, bap::BapOptions{});
        if (other.pseudo_label != base.pseudo_label) continue;
        for (int b = 0; b < 2; ++b)
          changed += other.grads_pl[b] != base.grads_pl[b] || other.grads_bd[b] != base.grads_bd[b];
      }
      const auto frozen = bap::supervise<double>(preds, base.pseudo_label, bap::BapOptions{});
      for (int b = 0; b < 2; ++b)
        changed += frozen.grads_pl[b] != base.grads_pl[b] || frozen.grads_bd[b] != base.grads_bd[b];
      const auto fd = oracle::finite_difference(
          [&](const std::vector<double>& v) {
            const auto y = unflat(v, 4, 8, 8);
            const ProbMap<double>* p[] = {&y, &yk};
            const auto sup = bap::supervise<double>(p, base.pseudo_label, bap::BapOptions{});
            return sup.pl_loss + sup.boundary_loss;
          },
          flat(yj));
      std::vector<double> analytic(fd.size());
      for (std::size_t i = 0; i < fd.size(); ++i)
        analytic[i] = base.grads_pl[0].values()[i] + base.grads_bd[0].values()[i];
      worst = std::max(worst, oracle::max_relative_error(analytic, fd, kRelFloor));
    }
    pass = changed == 0 && worst < 1e-4;
    return std::to_string(changed) + " gradients moved with the pseudo-label path, frozen-label FD error " +
           fmt("%.2e", worst);
  });
}

CheckResult check_cutout_box(std::uint64_t seed) {
  return timed("cutout_box", [&](bool& pass) {
    auto rng = make_rng(seed);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
      const auto s = oracle::random_scribble(4, 20, 16, rng, 0.03);
      int fg = 0, r0 = 99, r1 = -1, c0 = 99, c1 = -1;
      for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 16; ++c) {
          const int l = s.labels()(r, c);
          if (l >= 1 && l < 4) {
            ++fg;
            r0 = std::min(r0, r), r1 = std::max(r1, r), c0 = std::min(c0, c), c1 = std::max(c1, c);
          }
        }
      const int m = 2;
      if (fg == 0) {
        try {
          tas::infer_cutout_box(s, m);
          ++bad;
        } catch (const NoForeground&) {
        }
        continue;
      }
      const auto box = tas::infer_cutout_box(s, m);
      const CutoutBox want{std::max(0, r0 - m), std::min(19, r1 + m), std::max(0, c0 - m),
                           std::min(15, c1 + m), 0.0f};
      bad += !(box == want);
    }
    pass = bad == 0;
    return std::to_string(bad) + " of 100 boxes differ from the scanned bounding box";
  });
}

CheckResult check_one_hot_argmax(std::uint64_t seed) {
  return timed("one_hot_argmax", [&](bool& pass) {
    auto rng = make_rng(seed);
    int bad = 0;
    for (int t = 0; t < 50; ++t) {
      const auto labels = argmax(oracle::random_probmap<double>(4, 7, 9, rng));
      const auto oh = one_hot<double>(labels);
      bad += !(argmax(oh) == labels);
      for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 9; ++c) {
          double sum = 0.0;
          for (int k = 0; k < 4; ++k) sum += oh(k, r, c);
          bad += sum != 1.0;
        }
    }
    pass = bad == 0;
    return std::to_string(bad) + " round-trip or normalisation failures";
  });
}

CheckResult check_dice_score(std::uint64_t seed) {
  return timed("dice_score", [&](bool& pass) {
    auto rng = make_rng(seed);
    int bad = 0;
    for (int t = 0; t < 50; ++t) {
      const HardLabelMap a(oracle::random_binary(10, 10, rng), 2), b(oracle::random_binary(10, 10, rng), 2);
      std::size_t inter = 0, na = 0, nb = 0;
      for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
          inter += a(r, c) == 1 && b(r, c) == 1;
          na += a(r, c) == 1;
          nb += b(r, c) == 1;
        }
      const double want = na + nb == 0 ? 1.0 : 2.0 * inter / static_cast<double>(na + nb);
      bad += std::abs(eval::dice_score(a, b, 1) - want) > 1e-12;
      bad += eval::dice_score(a, b, 1) != eval::dice_score(b, a, 1);
    }
    const HardLabelMap empty(Plane<int>(4, 4, 0), 2);
    bad += eval::dice_score(empty, empty, 1) != 1.0;
    pass = bad == 0;
    return std::to_string(bad) + " disagreements with set counting";
  });
}

CheckResult check_nearest_resize(std::uint64_t seed) {
  return timed("nearest_resize", [&](bool& pass) {
    auto rng = make_rng(seed);
    int bad = 0;
    std::uniform_int_distribution<int> dim(8, 300), lab(0, 4);
    for (int t = 0; t < 50; ++t) {
      Plane<int> p(dim(rng), dim(rng));
      std::set<int> present;
      for (int& v : p.values()) present.insert(v = uniform(rng, 0, 1) < 0.9 ? 4 : lab(rng));
      const auto q = data::resize_nearest(p, dim(rng), dim(rng));
      for (int v : q.values()) bad += present.count(v) == 0;
    }
    Plane<int> single(256, 256, 4);
    single(100, 77) = 2;
    const auto small = data::resize_nearest(single, 224, 224);
    int twos = 0;
    for (int v : small.values()) twos += v == 2;
    bad += twos > 4;
    pass = bad == 0;
    return std::to_string(bad) + " introduced label values; single label-2 pixel -> " + std::to_string(twos);
  });
}

CheckResult check_standardize(std::uint64_t seed) {
  return timed("standardize", [&](bool& pass) {
    auto rng = make_rng(seed);
    std::normal_distribution<float> n(50.0f, 20.0f);
    double worst_mean = 0.0, worst_sd = 0.0;
    for (int t = 0; t < 20; ++t) {
      Image im(37, 41);
      for (float& v : im.values()) v = n(rng);
      const auto z = data::standardize(im);
      double m = 0.0, v2 = 0.0;
      for (float x : z.values()) m += x;
      m /= static_cast<double>(z.size());
      for (float x : z.values()) v2 += (x - m) * (x - m);
      worst_mean = std::max(worst_mean, std::abs(m));
      worst_sd = std::max(worst_sd, std::abs(std::sqrt(v2 / z.size()) - 1.0));
    }
    int nonzero = 0;
    const auto flat_out = data::standardize(Image(5, 5, 3.5f));
    for (float x : flat_out.values()) nonzero += x != 0.0f;
    pass = worst_mean < 1e-5 && worst_sd < 1e-3 && nonzero == 0;
    return fmt("max |mean| %.1e, max |std-1| %.1e", worst_mean, worst_sd) + ", constant slice nonzero " +
           std::to_string(nonzero);
  });
}

CheckResult check_config_roundtrip() {
  return timed("config_roundtrip", [&](bool& pass) {
    TrainConfig cfg;
    apply_overrides(cfg, {"lambda2=0.5", "loss.lambda3=0.25", "pl_fusion=random", "tas_branches=j,k",
                          "seed=17", "image_size=96"});
    std::istringstream text(dump_config(cfg));
    const TrainConfig back = parse_config(text);
    bool rejected = false;
    try {
      set_config_value(cfg, "no_such_key", "1");
    } catch (const ConfigError&) {
      rejected = true;
    }
    pass = back == cfg && config_hash(back) == config_hash(cfg) && rejected;
    return std::string(back == cfg ? "round-trip exact" : "round-trip differs") +
           (rejected ? ", unknown key rejected" : ", unknown key accepted");
  });
}

CheckResult check_schedule_and_total() {
  return timed("schedule_and_total", [&](bool& pass) {
    const TrainConfig cfg;
    double worst = 0.0;
    for (int e = 0; e < 1000; ++e)
      worst = std::max(worst, std::abs(cfg.lr_at_epoch(e) - 1e-4 * std::pow(0.95, e)));
    const double t = train::total_loss({1.0, 1.0, 1.0}, cfg);
    TrainConfig tas_only = cfg;
    tas_only.lambda2 = tas_only.lambda3 = 0.0;
    bool nan_caught = false;
    try {
      train::total_loss({1.0, std::nan(""), 0.0}, cfg);
    } catch (const NonFiniteLoss& e) {
      nan_caught = std::string(e.what()).find("L_PL") != std::string::npos;
    }
    pass = worst <= 1e-12 && std::abs(t - 1.4) < 1e-12 &&
           train::total_loss({0.7, 0.3, 0.2}, tas_only) == 0.7 && nan_caught;
    return fmt("lr max deviation %.1e, total(1,1,1) = %.6f", worst, t) +
           (nan_caught ? ", NaN term named" : ", NaN term not reported");
  });
}

CheckResult check_nifti_roundtrip(std::uint64_t seed) {
  return timed("nifti_roundtrip", [&](bool& pass) {
    auto rng = make_rng(seed);
    const auto dir = scratch_dir("nifti");
    data::Volume v;
    v.nx = 7;
    v.ny = 5;
    v.nz = 3;
    v.spacing = {1.25f, 1.25f, 8.0f};
    std::uniform_int_distribution<int> lab(0, 4);
    for (int i = 0; i < 105; ++i) v.data.push_back(lab(rng));
    bool same = true;
    for (const char* name : {"a.nii", "a.nii.gz"}) {
      const auto path = (dir / name).string();
      data::write_nifti(path, v, data::NiftiType::kInt16);
      const auto back = data::read_nifti(path);
      same = same && back.data == v.data && back.same_geometry(v) && back.spacing == v.spacing;
    }
    bool rejected = false;
    auto bad = v;
    bad.data[10] = 7;
    data::write_nifti((dir / "s.nii.gz").string(), bad, data::NiftiType::kUint8);
    data::write_nifti((dir / "i.nii.gz").string(), v, data::NiftiType::kFloat32);
    try {
      data::load_case((dir / "i.nii.gz").string(), (dir / "s.nii.gz").string(), std::nullopt, 4, 4);
    } catch (const OutOfRange& e) {
      rejected = std::string(e.what()).find('7') != std::string::npos;
    }
    std::filesystem::remove_all(dir);
    pass = same && rejected;
    return std::string(same ? "round-trip exact" : "round-trip differs") +
           (rejected ? ", label 7 rejected by name" : ", label 7 not reported");
  });
}

CheckResult check_synthetic_dataset() {
  return timed("synthetic_dataset", [&](bool& pass) {
    data::SynthOptions opts;
    int outside = 0;
    double worst_fraction = 0.0;
    for (int i = 0; i < 5; ++i) {
      const auto c = data::synth_case(opts, i);
      std::size_t annotated = 0;
      for (std::size_t q = 0; q < c.scribble.data.size(); ++q) {
        if (c.scribble.data[q] == 4) continue;
        ++annotated;
        outside += c.scribble.data[q] != c.label.data[q];
      }
      worst_fraction = std::max(worst_fraction, static_cast<double>(annotated) / c.scribble.data.size());
    }
    const bool deterministic = data::synth_case(opts, 3).image.data == data::synth_case(opts, 3).image.data;
    pass = outside == 0 && worst_fraction <= 0.05 && deterministic;
    return std::to_string(outside) + " scribble pixels outside their class, max annotated fraction " +
           fmt("%.3f", worst_fraction);
  });
}

CheckResult check_ground_truth_self_eval() {
  return timed("ground_truth_self_eval", [&](bool& pass) {
    std::vector<data::Case> cases;
    data::SynthOptions opts;
    for (int i = 0; i < 4; ++i) {
      const auto s = data::synth_case(opts, i);
      data::Case c;
      c.case_id = s.case_id;
      for (int z = 0; z < s.label.nz; ++z) {
        Plane<int> l(s.label.ny, s.label.nx);
        for (int y = 0; y < s.label.ny; ++y)
          for (int x = 0; x < s.label.nx; ++x) l(y, x) = static_cast<int>(s.label.at(x, y, z));
        data::Slice sl;
        sl.gt = HardLabelMap(std::move(l), 4);
        c.slices.push_back(std::move(sl));
      }
      cases.push_back(std::move(c));
    }
    const auto scores = eval::evaluate_ground_truth(cases);
    pass = scores.average == 1.0;
    for (const auto& m : scores.structures) pass = pass && m.mean == 1.0 && m.std == 0.0;
    return fmt("avg %.3f over %.0f cases", scores.average, static_cast<double>(cases.size()));
  });
}

std::vector<CheckResult> run_all() {
  return {check_jigsaw_inverse(),      check_fusion_oracle(),      check_boundary_oracle(),
          check_grad_partial_ce(),     check_grad_dice(),          check_grad_boundary(),
          check_detachment(),          check_cutout_box(),         check_one_hot_argmax(),
          check_dice_score(),          check_nearest_resize(),     check_standardize(),
          check_config_roundtrip(),    check_schedule_and_total(), check_nifti_roundtrip(),
          check_synthetic_dataset(),   check_ground_truth_self_eval()};
}

std::string format(const CheckResult& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.2fs", r.seconds);
  return std::string(r.pass ? "PASS " : "FAIL ") + r.name + " (" + r.detail + ", " + t + ")";
}

}  // namespace tabnet::selftest
