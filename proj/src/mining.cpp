#include "pointmine/mining.hpp"

#include <algorithm>
#include <limits>

#include "pointmine/error.hpp"
#include "pointmine/rng.hpp"

namespace pointmine {

std::string_view to_string(SupervisionMode mode) noexcept {
  switch (mode) {
    case SupervisionMode::Points: return "points";
    case SupervisionMode::LabelOnly: return "label-only";
    case SupervisionMode::BestIouOracle: return "best-iou";
    case SupervisionMode::GtOracle: return "gt";
  }
  return "?";
}

SupervisionMode parse_supervision(std::string_view text) {
  if (text == "points") return SupervisionMode::Points;
  if (text == "label-only" || text == "label") return SupervisionMode::LabelOnly;
  if (text == "best-iou") return SupervisionMode::BestIouOracle;
  if (text == "gt") return SupervisionMode::GtOracle;
  throw InvalidInput("unknown supervision mode '" + std::string(text) + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.max_iterations < 0 || cfg.n_folds < 2 || cfg.negatives_per_video < 1 ||
      !(cfg.lambda > 0.0) || !(cfg.prior_floor > 0.0) || cfg.sgd_epochs < 1) {
    throw InvalidInput("invalid training configuration");
  }
}

double map_score(double classifier_score, const OverlapScore& o, double prior_floor) noexcept {
  return classifier_score * std::max(o.o, prior_floor);
}

double map_score(const LinearModel& m, FeatureView z, const OverlapScore& o, double prior_floor) {
  return map_score(score(m, z), o, prior_floor);
}

std::vector<CandidateSet> collect_candidates(const Dataset& data, int action,
                                             SupervisionMode mode,
                                             std::vector<std::string>* dropped) {
  std::vector<CandidateSet> out;
  for (std::size_t vi = 0; vi < data.videos.size(); ++vi) {
    const VideoRecord& v = data.videos[vi];
    if (v.label != action) continue;
    CandidateSet set{vi, {}, {}};
    switch (mode) {
      case SupervisionMode::Points: {
        if (v.points.empty()) break;
        for (std::size_t j = 0; j < v.proposals.size(); ++j) {
          const OverlapScore o = overlap_measure(v.proposals[j].tube, v.points, v);
          if (o.m > 0.0) {
            set.local.push_back(j);
            set.prior.push_back(o);
          }
        }
        break;
      }
      case SupervisionMode::LabelOnly:
      case SupervisionMode::BestIouOracle:
        for (std::size_t j = 0; j < v.proposals.size(); ++j) set.local.push_back(j);
        if (mode == SupervisionMode::BestIouOracle && v.gt_tubes.empty()) set.local.clear();
        break;
      case SupervisionMode::GtOracle:
        for (std::size_t j = 0; j < v.gt_tubes.size(); ++j) set.local.push_back(j);
        break;
    }
    if (set.local.empty()) {
      if (dropped) dropped->push_back(v.id);
      continue;
    }
    out.push_back(std::move(set));
  }
  return out;
}

namespace {

// Index of the largest value; ties resolved toward the lowest proposal id.
template <typename ValueFn>
std::size_t argmax_by_id(const VideoRecord& v, const CandidateSet& set, ValueFn value) {
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < set.local.size(); ++k) {
    const double x = value(k);
    if (x > best_value ||
        (x == best_value && v.proposals[set.local[k]].id < v.proposals[set.local[best]].id)) {
      best = k;
      best_value = x;
    }
  }
  return best;
}

}  // namespace

std::vector<std::size_t> initial_selection(const Dataset& data,
                                           std::span<const CandidateSet> candidates,
                                           SupervisionMode mode, std::uint64_t seed) {
  std::vector<std::size_t> choice(candidates.size(), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CandidateSet& set = candidates[i];
    const VideoRecord& v = data.videos.at(set.video);
    switch (mode) {
      case SupervisionMode::Points:
        if (set.prior.size() != set.local.size()) throw InvalidInput("candidate set without prior");
        choice[i] = argmax_by_id(v, set, [&](std::size_t k) { return set.prior[k].o; });
        break;
      case SupervisionMode::LabelOnly: {
        Rng rng(derive_seed(seed, {hash_tag("init"), hash_tag(v.id)}));
        choice[i] = static_cast<std::size_t>(rng.below(set.local.size()));
        break;
      }
      case SupervisionMode::BestIouOracle:
        choice[i] = argmax_by_id(v, set, [&](std::size_t k) {
          return best_tube_iou(v.proposals[set.local[k]].tube, v.gt_tubes);
        });
        break;
      case SupervisionMode::GtOracle:
        break;
    }
  }
  return choice;
}

std::vector<std::size_t> sample_negatives(const Dataset& data, int action,
                                          const TrainConfig& cfg) {
  std::vector<std::size_t> rows;
  bool any_other = false;
  for (std::size_t vi = 0; vi < data.videos.size(); ++vi) {
    const VideoRecord& v = data.videos[vi];
    if (v.label == action) continue;
    any_other = true;
    Rng rng(derive_seed(cfg.seed, {hash_tag("negatives"), static_cast<std::uint64_t>(action),
                                   hash_tag(v.id)}));
    const auto picks = rng.sample_indices(v.proposals.size(),
                                          static_cast<std::size_t>(cfg.negatives_per_video));
    for (std::size_t j : picks) rows.push_back(data.proposal_features.row_index(vi, j));
  }
  if (!any_other) throw InvalidInput("no videos of another class to draw negatives from");
  return rows;
}

std::vector<std::size_t> relocalize_fold(const LinearModel& model, const Dataset& data,
                                         std::span<const CandidateSet> fold,
                                         std::span<const std::size_t> current,
                                         const TrainConfig& cfg) {
  std::vector<std::size_t> out(current.begin(), current.end());
  if (cfg.supervision != SupervisionMode::Points && cfg.supervision != SupervisionMode::LabelOnly) {
    return out;
  }
  for (std::size_t i = 0; i < fold.size(); ++i) {
    const CandidateSet& set = fold[i];
    const VideoRecord& v = data.videos.at(set.video);
    out[i] = argmax_by_id(v, set, [&](std::size_t k) {
      const double s = score(model, data.proposal_features.row(set.video, set.local[k]));
      return cfg.supervision == SupervisionMode::Points ? map_score(s, set.prior[k], cfg.prior_floor)
                                                        : s;
    });
  }
  return out;
}

namespace {

std::vector<FeatureView> positive_views(const Dataset& data, std::span<const CandidateSet> sets,
                                        std::span<const std::size_t> choice,
                                        SupervisionMode mode) {
  std::vector<FeatureView> pos;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (mode == SupervisionMode::GtOracle) {
      for (std::size_t g : sets[i].local) pos.push_back(data.gt_features.row(sets[i].video, g));
    } else {
      pos.push_back(data.proposal_features.row(sets[i].video, sets[i].local[choice[i]]));
    }
  }
  return pos;
}

}  // namespace

MilResult run_mil(const Dataset& data, int action, const TrainConfig& cfg) {
  validate(cfg);
  MilResult result;
  result.candidates = collect_candidates(data, action, cfg.supervision, &result.dropped);
  const auto& sets = result.candidates;
  if (sets.empty()) {
    throw InvalidInput("class " + std::to_string(action) + " has no usable positive video");
  }

  std::vector<FeatureView> negatives;
  for (std::size_t r : sample_negatives(data, action, cfg)) {
    negatives.push_back(data.proposal_features.row(r));
  }

  const std::uint64_t class_seed =
      derive_seed(cfg.seed, {hash_tag("mil"), static_cast<std::uint64_t>(action)});
  std::vector<std::size_t> choice = initial_selection(data, sets, cfg.supervision, class_seed);

  SgdConfig sgd{cfg.lambda, cfg.sgd_epochs, 0, true};
  const bool iterate = (cfg.supervision == SupervisionMode::Points ||
                        cfg.supervision == SupervisionMode::LabelOnly) &&
                       sets.size() >= 2;
  int iteration = 0;
  if (iterate && cfg.max_iterations > 0) {
    // Fixed fold assignment for the whole run.
    std::vector<std::size_t> order(sets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng fold_rng(derive_seed(class_seed, {hash_tag("folds")}));
    fold_rng.shuffle(std::span<std::size_t>(order));
    const std::size_t n_folds = std::min<std::size_t>(static_cast<std::size_t>(cfg.n_folds), sets.size());
    std::vector<std::vector<std::size_t>> folds(n_folds);
    for (std::size_t k = 0; k < order.size(); ++k) folds[k % n_folds].push_back(order[k]);
    for (auto& f : folds) std::sort(f.begin(), f.end());

    for (iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
      std::vector<std::size_t> next = choice;
      for (std::size_t fi = 0; fi < n_folds; ++fi) {
        const auto& fold = folds[fi];
        std::vector<CandidateSet> train_sets, held_sets;
        std::vector<std::size_t> train_choice, held_choice;
        std::vector<bool> in_fold(sets.size(), false);
        for (std::size_t i : fold) in_fold[i] = true;
        for (std::size_t i = 0; i < sets.size(); ++i) {
          if (in_fold[i]) {
            held_sets.push_back(sets[i]);
            held_choice.push_back(choice[i]);
          } else {
            train_sets.push_back(sets[i]);
            train_choice.push_back(choice[i]);
          }
        }
        const auto pos = positive_views(data, train_sets, train_choice, cfg.supervision);
        sgd.seed = derive_seed(class_seed, {hash_tag("fold-sgd"), static_cast<std::uint64_t>(fi)});
        const LinearModel model = pointmine::train(pos, negatives, sgd);
        const auto updated = relocalize_fold(model, data, held_sets, held_choice, cfg);
        for (std::size_t k = 0; k < fold.size(); ++k) next[fold[k]] = updated[k];
      }
      // Fold models depend only on the selections, so an unchanged round is a
      // fixed point and the remaining rounds would repeat it.
      if (next == choice) break;
      choice = std::move(next);
    }
    iteration = cfg.max_iterations;
  }

  const auto pos = positive_views(data, sets, choice, cfg.supervision);
  sgd.seed = derive_seed(class_seed, {hash_tag("final-sgd")});
  result.state.model = pointmine::train(pos, negatives, sgd);
  result.state.iteration = iteration;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const VideoRecord& v = data.videos[sets[i].video];
    result.state.selected[v.id] = cfg.supervision == SupervisionMode::GtOracle
                                      ? kGroundTruthId
                                      : v.proposals[sets[i].local[choice[i]]].id;
  }
  result.choice = std::move(choice);
  return result;
}

}  // namespace pointmine
