#include "pointmine/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pointmine/error.hpp"
#include "pointmine/rng.hpp"

namespace pointmine {

namespace {

double dot(const double* w, FeatureView z) noexcept {
  // Four independent partial sums; the summation order is fixed.
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  const std::size_t n = z.size();
  const float* x = z.data();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    a0 += w[j] * static_cast<double>(x[j]);
    a1 += w[j + 1] * static_cast<double>(x[j + 1]);
    a2 += w[j + 2] * static_cast<double>(x[j + 2]);
    a3 += w[j + 3] * static_cast<double>(x[j + 3]);
  }
  for (; j < n; ++j) a0 += w[j] * static_cast<double>(x[j]);
  return (a0 + a1) + (a2 + a3);
}

void check_dims(std::span<const FeatureView> xs, std::size_t dim) {
  for (FeatureView z : xs) {
    if (z.size() != dim) throw InvalidInput("feature dimension mismatch");
  }
}

}  // namespace

double score(const LinearModel& m, FeatureView z) {
  if (z.size() != m.dim()) {
    throw InvalidInput("feature dimension " + std::to_string(z.size()) +
                       " does not match model dimension " + std::to_string(m.dim()));
  }
  return dot(m.weights.data(), z) + m.bias;
}

ClassWeights class_weights(std::size_t n_pos, std::size_t n_neg, bool balance) {
  if (!balance || n_pos == 0 || n_neg == 0) return {};
  const double n = static_cast<double>(n_pos + n_neg);
  return {n / (2.0 * static_cast<double>(n_pos)), n / (2.0 * static_cast<double>(n_neg))};
}

double hinge_objective(const LinearModel& m, std::span<const FeatureView> positives,
                       std::span<const FeatureView> negatives, bool balance) {
  const ClassWeights cw = class_weights(positives.size(), negatives.size(), balance);
  double loss = 0.0;
  for (FeatureView z : positives) loss += cw.positive * std::max(0.0, 1.0 - score(m, z));
  for (FeatureView z : negatives) loss += cw.negative * std::max(0.0, 1.0 + score(m, z));
  double reg = 0.0;
  for (double w : m.weights) reg += w * w;
  return 0.5 * reg + m.lambda * loss;
}

double mean_hinge_loss(const LinearModel& m, std::span<const FeatureView> positives,
                       std::span<const FeatureView> negatives) {
  const std::size_t n = positives.size() + negatives.size();
  if (n == 0) return 0.0;
  double loss = 0.0;
  for (FeatureView z : positives) loss += std::max(0.0, 1.0 - score(m, z));
  for (FeatureView z : negatives) loss += std::max(0.0, 1.0 + score(m, z));
  return loss / static_cast<double>(n);
}

Subgradient hinge_subgradient(const LinearModel& m, std::span<const FeatureView> positives,
                              std::span<const FeatureView> negatives, bool balance) {
  const ClassWeights cw = class_weights(positives.size(), negatives.size(), balance);
  Subgradient g{m.weights, 0.0};
  auto accumulate = [&](FeatureView z, double y, double c) {
    if (y * score(m, z) < 1.0) {
      for (std::size_t j = 0; j < z.size(); ++j) g.weights[j] -= m.lambda * c * y * z[j];
      g.bias -= m.lambda * c * y;
    }
  };
  for (FeatureView z : positives) accumulate(z, 1.0, cw.positive);
  for (FeatureView z : negatives) accumulate(z, -1.0, cw.negative);
  return g;
}

LinearModel train(std::span<const FeatureView> positives, std::span<const FeatureView> negatives,
                  const SgdConfig& cfg) {
  if (positives.empty() || negatives.empty()) throw InvalidInput("degenerate training set");
  if (!(cfg.lambda > 0.0) || cfg.epochs < 1) throw InvalidInput("invalid SGD configuration");
  const std::size_t dim = positives.front().size();
  check_dims(positives, dim);
  check_dims(negatives, dim);

  const std::size_t n_pos = positives.size();
  const std::size_t n = n_pos + negatives.size();
  const ClassWeights cw = class_weights(n_pos, negatives.size(), cfg.balance_classes);

  double max_sq = 0.0;
  auto sq_norm = [](FeatureView z) {
    double s = 0.0;
    for (float v : z) s += static_cast<double>(v) * v;
    return s;
  };
  for (FeatureView z : positives) max_sq = std::max(max_sq, sq_norm(z));
  for (FeatureView z : negatives) max_sq = std::max(max_sq, sq_norm(z));

  const double lambda_s = 1.0 / (cfg.lambda * static_cast<double>(n));
  const double eta0 = 1.0 / (std::max(cw.positive, cw.negative) * (max_sq + 1.0));
  const double t0 = 1.0 / (lambda_s * eta0);

  // w = scale * v keeps the shrink step O(1).
  std::vector<double> v(dim, 0.0);
  double scale = 1.0;
  double bias = 0.0;

  std::vector<double> avg_w(dim, 0.0);
  double avg_b = 0.0;
  int snapshots = 0;
  const int first_snapshot = cfg.epochs / 2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, {hash_tag("sgd")}));
  double t = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      const bool is_pos = idx < n_pos;
      const FeatureView z = is_pos ? positives[idx] : negatives[idx - n_pos];
      const double y = is_pos ? 1.0 : -1.0;
      const double c = is_pos ? cw.positive : cw.negative;
      const double eta = 1.0 / (lambda_s * (t + t0));
      t += 1.0;

      const double margin = y * (scale * dot(v.data(), z) + bias);
      scale *= 1.0 - eta * lambda_s;
      if (margin < 1.0) {
        const double step = eta * c * y / scale;
        for (std::size_t j = 0; j < dim; ++j) v[j] += step * z[j];
        bias += eta * c * y;
      }
      if (scale < 1e-9) {
        for (double& x : v) x *= scale;
        scale = 1.0;
      }
    }
    if (epoch >= first_snapshot) {
      for (std::size_t j = 0; j < dim; ++j) avg_w[j] += scale * v[j];
      avg_b += bias;
      ++snapshots;
    }
  }

  LinearModel model{std::move(avg_w), avg_b / snapshots, cfg.lambda};
  for (double& w : model.weights) w /= snapshots;
  return model;
}

}  // namespace pointmine
