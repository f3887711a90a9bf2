#pragma once

// Named invariant checks shared by `tabnet selftest` and the acceptance
// suite. Each returns a verdict with a one-line detail; none needs a dataset.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tabnet::selftest {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// invert_jigsaw(apply_jigsaw(x)) == x bit-exactly for random grids in
/// {2, 3, 4, 7} and permutations on size x size arrays.
CheckResult check_jigsaw_inverse(int pairs = 1000, int size = 224, std::uint64_t seed = 1);

/// fuse_pseudo_label against a scalar loop; weight sum and ordering.
CheckResult check_fusion_oracle(int trials = 500, std::uint64_t seed = 2);

/// extract_boundary == mask - erosion on random binary masks; constant maps give zero.
CheckResult check_boundary_oracle(int masks = 200, std::uint64_t seed = 3);

/// Double-precision central differences (h = 1e-6), max relative error < 1e-4.
CheckResult check_grad_partial_ce(int instances = 50, std::uint64_t seed = 4);
CheckResult check_grad_dice(int instances = 50, std::uint64_t seed = 5);
CheckResult check_grad_boundary(int instances = 50, std::uint64_t seed = 6);

/// Gradients of the pseudo-label and boundary terms depend on the branch
/// predictions only: moving the fusion weights without changing the label
/// changes nothing, and differences taken with the label frozen agree.
CheckResult check_detachment(int trials = 20, std::uint64_t seed = 7);

CheckResult check_cutout_box(std::uint64_t seed = 8);
CheckResult check_one_hot_argmax(std::uint64_t seed = 9);
CheckResult check_dice_score(std::uint64_t seed = 10);
CheckResult check_nearest_resize(std::uint64_t seed = 11);
CheckResult check_standardize(std::uint64_t seed = 12);
CheckResult check_config_roundtrip();
CheckResult check_schedule_and_total();
CheckResult check_nifti_roundtrip(std::uint64_t seed = 13);
CheckResult check_synthetic_dataset();
CheckResult check_ground_truth_self_eval();

/// Every check above, in order.
std::vector<CheckResult> run_all();

/// "PASS name (detail)" / "FAIL name (detail)".
std::string format(const CheckResult& r);

}  // namespace tabnet::selftest
