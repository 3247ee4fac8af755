#include "pointmine/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "pointmine/error.hpp"

namespace pointmine {

namespace {

bool ranks_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.video != b.video) return a.video < b.video;
  return a.proposal_id < b.proposal_id;
}

std::string fmt_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

std::size_t closest_index(std::span<const double> xs, double t) {
  if (xs.empty()) throw InvalidInput("report has no thresholds");
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (std::abs(xs[i] - t) < std::abs(xs[best] - t)) best = i;
  }
  return best;
}

}  // namespace

std::vector<Detection> score_top_proposals(const Dataset& test, const LinearModel& model,
                                           std::size_t top_k) {
  std::vector<Detection> pooled;
  std::vector<Detection> local;
  for (std::size_t vi = 0; vi < test.videos.size(); ++vi) {
    const VideoRecord& v = test.videos[vi];
    local.clear();
    for (std::size_t j = 0; j < v.proposals.size(); ++j) {
      Detection d;
      d.video = vi;
      d.proposal_id = v.proposals[j].id;
      d.score = score(model, test.proposal_features.row(vi, j));
      local.push_back(d);
    }
    const std::size_t keep = std::min(top_k, local.size());
    std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(),
                      ranks_before);
    pooled.insert(pooled.end(), local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(pooled.begin(), pooled.end(), ranks_before);
  return pooled;
}

std::vector<Detection> match_detections(const Dataset& test, std::vector<Detection> ranked,
                                        int action, double threshold) {
  std::vector<std::vector<bool>> claimed(test.videos.size());
  for (std::size_t vi = 0; vi < test.videos.size(); ++vi) {
    claimed[vi].assign(test.videos[vi].gt_tubes.size(), false);
  }
  for (Detection& d : ranked) {
    d.matched_gt.reset();
    d.iou = 0.0;
    const VideoRecord& v = test.videos.at(d.video);
    if (v.label != action) continue;
    const auto it = std::find_if(v.proposals.begin(), v.proposals.end(),
                                 [&](const Proposal& p) { return p.id == d.proposal_id; });
    if (it == v.proposals.end()) throw InvalidInput("detection refers to unknown proposal");
    int best = -1;
    for (std::size_t g = 0; g < v.gt_tubes.size(); ++g) {
      if (claimed[d.video][g]) continue;
      const double iou = tube_iou(it->tube, v.gt_tubes[g]);
      if (best < 0 || iou > d.iou) {
        best = static_cast<int>(g);
        d.iou = iou;
      }
    }
    if (best >= 0 && d.iou >= threshold) {
      claimed[d.video][static_cast<std::size_t>(best)] = true;
      d.matched_gt = best;
    }
  }
  return ranked;
}

std::vector<Detection> rank_and_match(const Dataset& test, const LinearModel& model, int action,
                                      double threshold, std::size_t top_k) {
  if (top_k < 1) throw InvalidInput("top_k must be at least 1");
  return match_detections(test, score_top_proposals(test, model, top_k), action, threshold);
}

std::size_t count_ground_truth(const Dataset& test, int action) {
  std::size_t n = 0;
  for (const VideoRecord& v : test.videos) {
    if (v.label == action) n += v.gt_tubes.size();
  }
  return n;
}

double average_precision(std::span<const Detection> detections, std::size_t n_gt,
                         bool interpolated) {
  if (n_gt == 0) throw InvalidInput("average precision needs at least one ground truth");
  std::vector<Detection> ranked(detections.begin(), detections.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });

  std::vector<double> precision(ranked.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].positive()) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  if (interpolated) {
    for (std::size_t i = ranked.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].positive()) sum += precision[i];
  }
  return sum / static_cast<double>(n_gt);
}

namespace {

struct RankStats {
  double u = 0.0;  // positive-negative pairs ordered correctly, ties count one half
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

RankStats rank_stats(std::span<const Detection> detections) {
  std::vector<std::pair<double, bool>> items;
  items.reserve(detections.size());
  RankStats st;
  for (const Detection& d : detections) {
    items.emplace_back(d.score, d.positive());
    st.n_pos += d.positive() ? 1 : 0;
  }
  st.n_neg = items.size() - st.n_pos;
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Rank-sum with mid-ranks for tied scores.
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < items.size() && items[j].first == items[i].first) {
      pos_in_group += items[j].second ? 1 : 0;
      ++j;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    pos_rank_sum += mid_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double np = static_cast<double>(st.n_pos);
  st.u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return st;
}

}  // namespace

double auc_roc(std::span<const Detection> detections) {
  const RankStats st = rank_stats(detections);
  if (st.n_pos == 0 || st.n_neg == 0) throw InvalidInput("AUC needs positive and negative detections");
  return st.u / (static_cast<double>(st.n_pos) * static_cast<double>(st.n_neg));
}

double auc_roc(std::span<const Detection> detections, std::size_t n_gt) {
  const RankStats st = rank_stats(detections);
  if (n_gt == 0 || st.n_neg == 0) throw InvalidInput("AUC needs ground truth and negative detections");
  if (st.n_pos > n_gt) throw InvalidInput("more positive detections than ground truths");
  return st.u / (static_cast<double>(n_gt) * static_cast<double>(st.n_neg));
}

std::vector<double> best_proposal_ious(const VideoRecord& v) {
  std::vector<double> out;
  out.reserve(v.gt_tubes.size());
  for (const Tube& g : v.gt_tubes) {
    double best = 0.0;
    for (const Proposal& p : v.proposals) best = std::max(best, tube_iou(p.tube, g));
    out.push_back(best);
  }
  return out;
}

double abo(const std::vector<Tube>& gt_tubes, std::span<const Proposal> proposals) {
  std::vector<double> best;
  for (const Tube& g : gt_tubes) {
    double b = 0.0;
    for (const Proposal& p : proposals) b = std::max(b, tube_iou(p.tube, g));
    best.push_back(b);
  }
  return abo(best);
}

double abo(std::span<const double> best_ious) {
  if (best_ious.empty()) return 0.0;
  return std::accumulate(best_ious.begin(), best_ious.end(), 0.0) /
         static_cast<double>(best_ious.size());
}

double mabo(std::span<const double> per_class_abo) { return abo(per_class_abo); }

std::vector<std::pair<double, double>> recall_curve(std::span<const double> best_ious,
                                                    std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InvalidInput("recall thresholds must be ascending");
  }
  std::vector<std::pair<double, double>> curve;
  for (double t : thresholds) {
    if (best_ious.empty()) {
      curve.emplace_back(t, 0.0);
      continue;
    }
    const auto hits = std::count_if(best_ious.begin(), best_ious.end(),
                                    [t](double iou) { return iou >= t; });
    curve.emplace_back(t, static_cast<double>(hits) / static_cast<double>(best_ious.size()));
  }
  return curve;
}

std::vector<std::pair<double, double>> recall_curve(const std::vector<Tube>& gt_tubes,
                                                    std::span<const Proposal> proposals,
                                                    std::span<const double> thresholds) {
  std::vector<double> best;
  for (const Tube& g : gt_tubes) {
    double b = 0.0;
    for (const Proposal& p : proposals) b = std::max(b, tube_iou(p.tube, g));
    best.push_back(b);
  }
  return recall_curve(best, thresholds);
}

std::vector<double> default_thresholds() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}; }

double EvalReport::map_at(double t) const { return map.at(closest_index(thresholds, t)); }
double EvalReport::auc_at(double t) const { return mean_auc.at(closest_index(thresholds, t)); }

EvalReport evaluate(const Dataset& test, std::span<const int> classes,
                    std::span<const LinearModel> models, const EvalOptions& opts) {
  if (classes.size() != models.size()) throw InvalidInput("one model per class expected");
  if (opts.top_k < 1) throw InvalidInput("top_k must be at least 1");
  for (double t : opts.thresholds) {
    if (t < 0.0 || t > 1.0) throw InvalidInput("IoU thresholds must lie in [0, 1]");
  }
  EvalReport r;
  r.thresholds = opts.thresholds;
  r.classes.assign(classes.begin(), classes.end());
  const std::size_t nt = r.thresholds.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> sorted_t = r.thresholds;
  std::sort(sorted_t.begin(), sorted_t.end());

  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const int action = classes[ci];
    const std::size_t n_gt = count_ground_truth(test, action);
    const auto ranked = score_top_proposals(test, models[ci], opts.top_k);

    std::vector<double> ap(nt, 0.0), auc(nt, nan);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const auto matched = match_detections(test, ranked, action, r.thresholds[ti]);
      if (n_gt > 0) ap[ti] = average_precision(matched, n_gt, opts.interpolated_ap);
      const bool has_neg = std::any_of(matched.begin(), matched.end(),
                                       [](const Detection& d) { return !d.positive(); });
      if (n_gt > 0 && has_neg) auc[ti] = auc_roc(matched, n_gt);
    }
    r.ap.push_back(std::move(ap));
    r.auc.push_back(std::move(auc));

    std::vector<double> best;
    for (const VideoRecord& v : test.videos) {
      if (v.label != action) continue;
      const auto b = best_proposal_ious(v);
      best.insert(best.end(), b.begin(), b.end());
    }
    r.abo.push_back(abo(best));
    std::vector<double> rec(nt, 0.0);
    for (const auto& [t, value] : recall_curve(best, sorted_t)) {
      for (std::size_t ti = 0; ti < nt; ++ti) {
        if (r.thresholds[ti] == t) rec[ti] = value;
      }
    }
    r.recall.push_back(std::move(rec));
  }

  r.map.assign(nt, 0.0);
  r.mean_auc.assign(nt, 0.0);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    double auc_sum = 0.0;
    std::size_t auc_n = 0;
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
      r.map[ti] += r.ap[ci][ti];
      if (!std::isnan(r.auc[ci][ti])) {
        auc_sum += r.auc[ci][ti];
        ++auc_n;
      }
    }
    if (!classes.empty()) r.map[ti] /= static_cast<double>(classes.size());
    r.mean_auc[ti] = auc_n > 0 ? auc_sum / static_cast<double>(auc_n) : 0.0;
  }
  r.mabo = mabo(r.abo);
  return r;
}

std::string report_csv(const EvalReport& r) {
  std::string out = "class,threshold,metric,value\n";
  auto row = [&](const std::string& cls, const std::string& t, const char* metric, double v) {
    out += cls + "," + t + "," + metric + "," + (std::isnan(v) ? std::string("nan") : fmt_value(v)) + "\n";
  };
  for (std::size_t ci = 0; ci < r.classes.size(); ++ci) {
    const std::string cls = std::to_string(r.classes[ci]);
    for (std::size_t ti = 0; ti < r.thresholds.size(); ++ti) {
      const std::string t = fmt_threshold(r.thresholds[ti]);
      row(cls, t, "ap", r.ap[ci][ti]);
      row(cls, t, "auc", r.auc[ci][ti]);
      row(cls, t, "recall", r.recall[ci][ti]);
    }
    row(cls, "-", "abo", r.abo[ci]);
  }
  for (std::size_t ti = 0; ti < r.thresholds.size(); ++ti) {
    const std::string t = fmt_threshold(r.thresholds[ti]);
    row("all", t, "map", r.map[ti]);
    row("all", t, "auc", r.mean_auc[ti]);
  }
  row("all", "-", "mabo", r.mabo);
  return out;
}

std::string report_table(const EvalReport& r) {
  std::string out;
  char buf[128];
  out += "class ";
  for (double t : r.thresholds) {
    std::snprintf(buf, sizeof buf, "  AP@%.2f", t);
    out += buf;
  }
  out += "     ABO\n";
  for (std::size_t ci = 0; ci < r.classes.size(); ++ci) {
    std::snprintf(buf, sizeof buf, "%5d ", r.classes[ci]);
    out += buf;
    for (double v : r.ap[ci]) {
      std::snprintf(buf, sizeof buf, "  %7.4f", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "  %6.4f\n", r.abo[ci]);
    out += buf;
  }
  out += "  mAP ";
  for (double v : r.map) {
    std::snprintf(buf, sizeof buf, "  %7.4f", v);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "  %6.4f (MABO)\n", r.mabo);
  out += buf;
  out += "  AUC ";
  for (double v : r.mean_auc) {
    std::snprintf(buf, sizeof buf, "  %7.4f", v);
    out += buf;
  }
  out += "\n";
  return out;
}

}  // namespace pointmine
