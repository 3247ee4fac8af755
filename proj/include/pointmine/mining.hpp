#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pointmine/classifier.hpp"
#include "pointmine/dataset.hpp"
#include "pointmine/overlap.hpp"

namespace pointmine {

/// Which annotation drives the choice of training proposal.
enum class SupervisionMode {
  Points,         // point prior times classifier score
  LabelOnly,      // plain MIL: classifier score only, random start
  BestIouOracle,  // proposal with the highest IoU to the ground truth
  GtOracle,       // the ground-truth tubes themselves
};

std::string_view to_string(SupervisionMode mode) noexcept;
/// Accepts "points", "label-only", "best-iou", "gt". Throws InvalidInput.
SupervisionMode parse_supervision(std::string_view text);

struct TrainConfig {
  int max_iterations = 10;
  int n_folds = 3;
  int negatives_per_video = 100;
  double lambda = 100.0;
  std::uint64_t seed = 0;
  SupervisionMode supervision = SupervisionMode::Points;
  double prior_floor = 1e-6;
  int sgd_epochs = 50;
};

/// Throws InvalidInput when a count or weight is not positive.
void validate(const TrainConfig& cfg);

/// Gt selections are reported with this proposal id.
inline constexpr int kGroundTruthId = -1;

/// Classifier score times the point prior, with the prior floored at
/// `prior_floor` so a negative prior can never flip the sign of the score.
double map_score(const LinearModel& m, FeatureView z, const OverlapScore& o,
                 double prior_floor = 1e-6);
double map_score(double classifier_score, const OverlapScore& o, double prior_floor = 1e-6) noexcept;

/// Admissible training proposals of one positive video.
struct CandidateSet {
  std::size_t video = 0;           // index into Dataset::videos
  std::vector<std::size_t> local;  // indices into the video's proposals, ascending id
  std::vector<OverlapScore> prior; // aligned with `local`; only filled in Points mode
};

/// Candidate sets for every training video of class `action`. In Points mode
/// only proposals with a positive center bias survive; videos left without a
/// candidate (or, in Points mode, without points) are reported in `dropped`.
std::vector<CandidateSet> collect_candidates(const Dataset& data, int action,
                                             SupervisionMode mode,
                                             std::vector<std::string>* dropped = nullptr);

/// Per candidate set, the chosen position in `local`. Points: argmax prior.
/// LabelOnly: seeded uniform pick. BestIouOracle: argmax IoU with the ground
/// truth. GtOracle selects nothing and returns zeros. Ties go to the lowest
/// proposal id.
std::vector<std::size_t> initial_selection(const Dataset& data,
                                           std::span<const CandidateSet> candidates,
                                           SupervisionMode mode, std::uint64_t seed);

/// Negative pool for `action`: up to `negatives_per_video` proposals of every
/// training video of another class, without replacement. Rows are global
/// indices into Dataset::proposal_features. Throws InvalidInput when no video
/// of another class exists.
std::vector<std::size_t> sample_negatives(const Dataset& data, int action,
                                          const TrainConfig& cfg);

/// Re-selects, for each candidate set, the proposal maximizing the mining
/// score under a fixed model: map_score in Points mode, the raw classifier
/// score in LabelOnly mode. Oracle modes keep `current`.
std::vector<std::size_t> relocalize_fold(const LinearModel& model, const Dataset& data,
                                         std::span<const CandidateSet> fold,
                                         std::span<const std::size_t> current,
                                         const TrainConfig& cfg);

struct MiningState {
  std::map<std::string, int> selected;  // video id -> proposal id
  LinearModel model;
  int iteration = 0;
};

struct MilResult {
  MiningState state;
  std::vector<CandidateSet> candidates;
  std::vector<std::size_t> choice;  // aligned with candidates
  std::vector<std::string> dropped;
};

/// Block coordinate descent on the MIL objective for one action class.
///
/// Starts from initial_selection, then for cfg.max_iterations rounds splits
/// the positive videos into cfg.n_folds fixed folds; each fold is re-selected
/// with a model trained on the current selections of the other folds plus the
/// sampled negatives. Selections of a round are committed together once all
/// folds are done. A final model is trained on the last selections. Oracle
/// modes skip the rounds.
MilResult run_mil(const Dataset& data, int action, const TrainConfig& cfg);

}  // namespace pointmine
