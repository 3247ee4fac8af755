#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pointmine/classifier.hpp"
#include "pointmine/dataset.hpp"
#include "pointmine/geometry.hpp"
#include "pointmine/rng.hpp"

namespace pointmine {

/// Parameters of a planted world. Spatial jitters are fractions of the box
/// size; `*_fraction` values are shares of the proposal pool.
struct WorldConfig {
  int n_classes = 10;
  int train_videos_per_class = 30;
  int test_videos_per_class = 20;
  int min_frames = 140;
  int max_frames = 220;
  double frame_w = 320.0;
  double frame_h = 240.0;
  int instances_per_video = 1;

  // Ground-truth tubes.
  double gt_min_span = 0.75;  // share of the video covered by the action
  double gt_min_width = 0.12; // share of frame width
  double gt_max_width = 0.30;
  double gt_min_aspect = 1.0; // height / width
  double gt_max_aspect = 2.0;
  double drift_sigma = 1.0;   // pixels per frame
  double size_drift_sigma = 0.004;

  // Proposal pool.
  int proposals_per_video = 100;
  double spatial_jitter = 0.6;
  double scale_jitter = 0.6;
  double temporal_crop = 0.5;
  double distractor_fraction = 0.3;
  double scene_fraction = 0.2;

  // Features.
  int feature_dim = 64;
  double feature_noise = 0.2;
  double context_strength = 2.0;

  // Point annotation.
  double point_jitter = 0.0;
  bool clamp_points = true;
  int annotation_rate = 1;

  std::uint64_t seed = 0;
};

/// Throws InvalidInput on non-positive counts or negative spreads.
void validate(const WorldConfig& cfg);

/// Canonical key/value form, used for manifests and the config hash.
std::vector<std::pair<std::string, std::string>> to_entries(const WorldConfig& cfg);
/// Inverse of to_entries; unknown keys are ignored, missing keys keep defaults.
WorldConfig world_config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries);
/// Hex FNV-1a digest of the canonical entries.
std::string config_hash(const std::vector<std::pair<std::string, std::string>>& entries);

struct CostModel {
  double box_seconds_per_frame = 3.0;
  double point_seconds_per_frame = 0.25;
  double label_seconds_per_video = 5.0;
};

void validate(const CostModel& cost);

enum class AnnotationScheme { Box, Point };

struct AnnotationCost {
  double seconds = 0.0;
  double speedup = 1.0;  // versus a box on every frame
};

/// Cost of annotating every `rate`-th of `n_frames` frames plus the video label.
AnnotationCost annotation_cost(int n_frames, int rate, const CostModel& cost,
                               AnnotationScheme scheme);

/// Summed cost over the ground-truth instances of every video of a split.
AnnotationCost annotation_cost(const Dataset& data, int rate, const CostModel& cost,
                               AnnotationScheme scheme);

/// Random-walk box track over a random sub-interval of an `n_frames` video,
/// clamped to the frame.
Tube generate_gt_tube(const WorldConfig& cfg, int n_frames, Rng& rng);

/// Proposal pool around `gt`: jittered and temporally cropped copies,
/// independent distractor tracks and large scene-scale tubes, in shuffled
/// order. When copies are present, the pool is redrawn until one proposal
/// reaches tube IoU 0.5 with `gt`.
std::vector<Tube> generate_proposals(const Tube& gt, int n_frames, const WorldConfig& cfg, Rng& rng);

/// Unit-norm random direction.
FeatureVector random_unit_vector(int dim, Rng& rng);

/// q * prototype + (1 - q) * (noise + context_strength * coverage * context),
/// with q the best tube IoU of `p` against `gts`, noise isotropic Gaussian
/// with sigma = cfg.feature_noise, and coverage the mean share of the frame
/// area covered by the proposal's boxes. The background term carries a
/// class-specific scene signal that large tubes pick up.
FeatureVector synthesize_feature(const Tube& p, const std::vector<Tube>& gts, double frame_area,
                                 const FeatureVector& prototype, const FeatureVector& context,
                                 const WorldConfig& cfg, Rng& rng);

struct PointSimulation {
  int rate = 1;
  double jitter = 0.0;  // sigma as a share of the half box diagonal
  bool clamp_to_box = true;
};

/// Points on gt frames start, start + rate, ...: the box center plus
/// Gaussian jitter, clamped inside the box (or only inside the frame when
/// clamp_to_box is off).
PointTrack simulate_points(const Tube& gt, const PointSimulation& sim, double frame_w,
                           double frame_h, Rng& rng);

/// Replaces every video's point tracks with a fresh simulation at `rate`,
/// reproducible from the world seed.
void resimulate_points(Dataset& data, const WorldConfig& cfg, int rate);

struct World {
  Dataset train;
  Dataset test;
};

/// Fully deterministic in `cfg`.
World generate_world(const WorldConfig& cfg);

}  // namespace pointmine
