#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pointmine/classifier.hpp"
#include "pointmine/dataset.hpp"

namespace pointmine {

struct Detection {
  std::size_t video = 0;  // index into the evaluated split
  int proposal_id = 0;
  double score = 0.0;
  std::optional<int> matched_gt;  // index into the video's gt_tubes
  double iou = 0.0;               // best IoU against the unclaimed ground truths

  bool positive() const noexcept { return matched_gt.has_value(); }
};

/// Top `top_k` proposals of every video under `model`, pooled and sorted by
/// descending score (ties: video index, then proposal id). Unmatched.
std::vector<Detection> score_top_proposals(const Dataset& test, const LinearModel& model,
                                           std::size_t top_k);

/// Greedy one-to-one matching in rank order. Each detection claims the
/// unclaimed ground truth of class `action` in its video with the highest
/// tube IoU, provided that IoU reaches `threshold`. `ranked` must already be
/// in rank order.
std::vector<Detection> match_detections(const Dataset& test, std::vector<Detection> ranked,
                                        int action, double threshold);

std::vector<Detection> rank_and_match(const Dataset& test, const LinearModel& model, int action,
                                      double threshold, std::size_t top_k = 10);

/// Number of ground-truth tubes of class `action` in the split.
std::size_t count_ground_truth(const Dataset& test, int action);

/// Mean over true positives (in score order) of the precision at their rank,
/// divided by n_gt. With `interpolated`, precision at each rank is replaced by
/// the best precision at that rank or deeper. Throws InvalidInput for n_gt == 0.
double average_precision(std::span<const Detection> detections, std::size_t n_gt,
                         bool interpolated = false);

/// Area under the ROC curve of scores against positive labels (Mann-Whitney,
/// ties count one half). Throws InvalidInput unless both labels are present.
double auc_roc(std::span<const Detection> detections);
/// Same statistic with the true-positive rate taken over `n_gt` ground truths:
/// ground truths without a matching detection rank below every detection.
/// Throws InvalidInput without negatives or when n_gt is zero.
double auc_roc(std::span<const Detection> detections, std::size_t n_gt);

/// For every ground truth of the video, the best IoU over its proposals.
std::vector<double> best_proposal_ious(const VideoRecord& v);

double abo(const std::vector<Tube>& gt_tubes, std::span<const Proposal> proposals);
/// Mean of per-ground-truth best IoUs; 0 for an empty list.
double abo(std::span<const double> best_ious);
double mabo(std::span<const double> per_class_abo);

/// (t, fraction of ground truths whose best IoU reaches t). Thresholds must be
/// ascending; the curve is non-increasing.
std::vector<std::pair<double, double>> recall_curve(std::span<const double> best_ious,
                                                    std::span<const double> thresholds);
std::vector<std::pair<double, double>> recall_curve(const std::vector<Tube>& gt_tubes,
                                                    std::span<const Proposal> proposals,
                                                    std::span<const double> thresholds);

std::vector<double> default_thresholds();

struct EvalOptions {
  std::vector<double> thresholds = default_thresholds();
  std::size_t top_k = 10;
  bool interpolated_ap = false;
};

/// Per-class and pooled metrics of a set of class models on one split.
/// Row/column layout: [class][threshold].
struct EvalReport {
  std::vector<double> thresholds;
  std::vector<int> classes;
  std::vector<std::vector<double>> ap;
  std::vector<std::vector<double>> auc;  // NaN when a class lacks ground truth or negatives
  std::vector<std::vector<double>> recall;
  std::vector<double> abo;
  std::vector<double> map;
  std::vector<double> mean_auc;  // over classes with a defined AUC; 0 if none
  double mabo = 0.0;

  /// mAP / mean AUC at the threshold closest to `t`.
  double map_at(double t) const;
  double auc_at(double t) const;
};

/// `models[i]` scores class `classes[i]`.
EvalReport evaluate(const Dataset& test, std::span<const int> classes,
                    std::span<const LinearModel> models, const EvalOptions& opts = {});

/// Flat CSV: header `class,threshold,metric,value`; class "all" holds pooled
/// metrics, threshold "-" marks threshold-free metrics.
std::string report_csv(const EvalReport& r);
/// Fixed-width text table for terminals.
std::string report_table(const EvalReport& r);

}  // namespace pointmine
