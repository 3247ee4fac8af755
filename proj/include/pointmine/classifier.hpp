#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pointmine {

/// Owned proposal embedding. Stored in single precision so that features
/// round-trip bit-exactly through the binary feature store.
using FeatureVector = std::vector<float>;
using FeatureView = std::span<const float>;

/// Hinge-loss linear classifier (w, b) with its regularization weight.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 100.0;

  std::size_t dim() const noexcept { return weights.size(); }
  static LinearModel zero(std::size_t dim, double lambda = 100.0) {
    return LinearModel{std::vector<double>(dim, 0.0), 0.0, lambda};
  }
  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct SgdConfig {
  double lambda = 100.0;
  int epochs = 50;
  std::uint64_t seed = 0;
  /// Reweight hinge terms so both classes carry equal total weight.
  bool balance_classes = true;
};

/// w . z + b. Throws InvalidInput on dimension mismatch.
double score(const LinearModel& m, FeatureView z);

/// Per-sample hinge weights (positive, negative). With balancing, each class
/// carries half of the total weight n_pos + n_neg; otherwise both are 1.
struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};
ClassWeights class_weights(std::size_t n_pos, std::size_t n_neg, bool balance);

/// 1/2 ||w||^2 + lambda * sum_i c_i * max(0, 1 - y_i (w . z_i + b)).
double hinge_objective(const LinearModel& m, std::span<const FeatureView> positives,
                       std::span<const FeatureView> negatives, bool balance = true);

/// Unweighted mean hinge loss over both classes.
double mean_hinge_loss(const LinearModel& m, std::span<const FeatureView> positives,
                       std::span<const FeatureView> negatives);

/// Subgradient of hinge_objective with respect to (w, b). At a kink the
/// hinge contributes nothing (the margin must be strictly below 1 to count).
struct Subgradient {
  std::vector<double> weights;
  double bias = 0.0;
};
Subgradient hinge_subgradient(const LinearModel& m, std::span<const FeatureView> positives,
                              std::span<const FeatureView> negatives, bool balance = true);

/// Primal SGD on hinge_objective.
///
/// The loss weight lambda maps to a per-sample regularizer
/// lambda_s = 1 / (lambda * n); the step size is 1 / (lambda_s * (t + t0)),
/// with t0 chosen so the first step equals 1 / (c_max * (R^2 + 1)) for the
/// largest squared feature norm R^2 and largest class weight c_max. Each epoch
/// visits a fresh seeded permutation of the samples. The returned model is the
/// average of the end-of-epoch iterates over the second half of training.
/// The bias is updated with the same step and never regularized.
///
/// Throws InvalidInput("degenerate training set") when either class is empty
/// and on inconsistent dimensions.
LinearModel train(std::span<const FeatureView> positives, std::span<const FeatureView> negatives,
                  const SgdConfig& cfg);

}  // namespace pointmine
