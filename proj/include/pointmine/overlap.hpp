#pragma once

#include <span>
#include <vector>

#include "pointmine/geometry.hpp"

namespace pointmine {

/// Point-to-proposal prior: center-bias term `m`, size penalty `s`, o = m - s.
struct OverlapScore {
  double m = 0.0;
  double s = 0.0;
  double o = 0.0;
};

/// Contribution of a single annotated point to the center-bias term:
/// 1 at the box center, falling linearly to 0 at the farthest boundary point,
/// and 0 when the tube does not cover the point's frame or the point lies
/// outside that frame's box.
double point_center_score(const Tube& a, const Point& p);

/// Mean point_center_score over the track. Throws InvalidInput("no supervision")
/// for an empty track.
double center_bias(const Tube& a, const PointTrack& c);

/// Multi-instance form: the best single-track center bias.
double center_bias(const Tube& a, std::span<const PointTrack> tracks);

/// Squared ratio of summed tube box area to summed frame area of the video.
double size_regularizer(const Tube& a, const VideoRecord& v);

OverlapScore overlap_measure(const Tube& a, const PointTrack& c, const VideoRecord& v);
OverlapScore overlap_measure(const Tube& a, std::span<const PointTrack> tracks,
                             const VideoRecord& v);

/// Ids of the proposals with a strictly positive center bias, in input order.
std::vector<int> filter_candidates(std::span<const Proposal> proposals, const PointTrack& c);
std::vector<int> filter_candidates(std::span<const Proposal> proposals,
                                   std::span<const PointTrack> tracks);

}  // namespace pointmine
