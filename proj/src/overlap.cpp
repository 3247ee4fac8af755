#include "pointmine/overlap.hpp"

#include <algorithm>
#include <cmath>

#include "pointmine/error.hpp"

namespace pointmine {

double point_center_score(const Tube& a, const Point& p) {
  if (!a.covers(p.frame)) return 0.0;
  const BoundingBox& box = a.box_at(p.frame);
  if (!point_in_box(p, box)) return 0.0;
  const Vec2 c = box_center(box);
  const double dist = std::hypot(p.x - c.x, p.y - c.y);
  return std::max(0.0, 1.0 - dist / max_center_to_edge(box));
}

double center_bias(const Tube& a, const PointTrack& c) {
  if (c.empty()) throw InvalidInput("no supervision");
  double sum = 0.0;
  for (const Point& p : c.points) sum += point_center_score(a, p);
  return sum / static_cast<double>(c.size());
}

double center_bias(const Tube& a, std::span<const PointTrack> tracks) {
  if (tracks.empty()) throw InvalidInput("no supervision");
  double best = 0.0;
  for (const PointTrack& c : tracks) best = std::max(best, center_bias(a, c));
  return best;
}

double size_regularizer(const Tube& a, const VideoRecord& v) {
  if (v.n_frames < 1) throw InvalidInput("video without frames");
  double covered = 0.0;
  for (const BoundingBox& b : a.boxes) covered += b.area();
  const double ratio = covered / (static_cast<double>(v.n_frames) * v.frame_area());
  return ratio * ratio;
}

OverlapScore overlap_measure(const Tube& a, const PointTrack& c, const VideoRecord& v) {
  const double m = center_bias(a, c);
  const double s = size_regularizer(a, v);
  return {m, s, m - s};
}

OverlapScore overlap_measure(const Tube& a, std::span<const PointTrack> tracks,
                             const VideoRecord& v) {
  const double m = center_bias(a, tracks);
  const double s = size_regularizer(a, v);
  return {m, s, m - s};
}

std::vector<int> filter_candidates(std::span<const Proposal> proposals, const PointTrack& c) {
  return filter_candidates(proposals, std::span<const PointTrack>(&c, 1));
}

std::vector<int> filter_candidates(std::span<const Proposal> proposals,
                                   std::span<const PointTrack> tracks) {
  std::vector<int> kept;
  for (const Proposal& p : proposals) {
    if (center_bias(p.tube, tracks) > 0.0) kept.push_back(p.id);
  }
  return kept;
}

}  // namespace pointmine
