#include "pointmine/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "pointmine/error.hpp"

namespace pointmine {

BoundingBox BoundingBox::make(double x, double y, double w, double h) {
  if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) ||
      !std::isfinite(h)) {
    throw InvalidInput("bounding box needs finite coordinates and positive extent");
  }
  return BoundingBox{x, y, w, h};
}

namespace {

// Clamps the interval [lo, lo + len] into [0, limit] keeping at least `min_len`.
std::pair<double, double> clamp_interval(double lo, double len, double limit, double min_len) {
  min_len = std::min(min_len, limit);
  double a = std::clamp(lo, 0.0, limit);
  double b = std::clamp(lo + len, 0.0, limit);
  if (b - a < min_len) {
    if (a + min_len <= limit) {
      b = a + min_len;
    } else {
      b = limit;
      a = limit - min_len;
    }
  }
  return {a, b - a};
}

}  // namespace

BoundingBox BoundingBox::clamped(double x, double y, double w, double h, double frame_w,
                                 double frame_h) {
  auto [cx, cw] = clamp_interval(x, w, frame_w, 1.0);
  auto [cy, ch] = clamp_interval(y, h, frame_h, 1.0);
  return make(cx, cy, cw, ch);
}

Vec2 box_center(const BoundingBox& b) noexcept { return {b.x + b.w / 2.0, b.y + b.h / 2.0}; }

double max_center_to_edge(const BoundingBox& b) noexcept { return std::hypot(b.w / 2.0, b.h / 2.0); }

bool point_in_box(double px, double py, const BoundingBox& b) noexcept {
  return px >= b.x && px <= b.right() && py >= b.y && py <= b.bottom();
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double frame_iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double tube_iou(const Tube& p, const Tube& b) noexcept {
  if (p.boxes.empty() || b.boxes.empty()) return 0.0;
  const int lo = std::max(p.start_frame, b.start_frame);
  const int hi = std::min(p.end_frame(), b.end_frame());
  double sum = 0.0;
  for (int f = lo; f <= hi; ++f) sum += frame_iou(p.box_at(f), b.box_at(f));
  const int shared = std::max(0, hi - lo + 1);
  const int gamma = p.length() + b.length() - shared;
  return sum / gamma;
}

double best_tube_iou(const Tube& tube, const std::vector<Tube>& refs) noexcept {
  double best = 0.0;
  for (const Tube& r : refs) best = std::max(best, tube_iou(tube, r));
  return best;
}

void validate_track(const PointTrack& track) {
  for (std::size_t i = 1; i < track.points.size(); ++i) {
    if (track.points[i].frame <= track.points[i - 1].frame) {
      throw InvalidInput("point track frames must be strictly increasing");
    }
  }
}

namespace {

void validate_tube(const Tube& t, const VideoRecord& v, const char* what) {
  if (t.boxes.empty()) throw InvalidInput(v.id + ": empty " + what);
  if (t.start_frame < 1 || t.end_frame() > v.n_frames) {
    throw InvalidInput(v.id + ": " + what + " outside video frames");
  }
  for (const BoundingBox& b : t.boxes) {
    if (!(b.w > 0.0) || !(b.h > 0.0) || b.x < 0.0 || b.y < 0.0 || b.right() > v.frame_w ||
        b.bottom() > v.frame_h) {
      throw InvalidInput(v.id + ": " + what + " box outside frame");
    }
  }
}

}  // namespace

void validate_video(const VideoRecord& v) {
  if (v.n_frames < 1 || !(v.frame_w > 0.0) || !(v.frame_h > 0.0)) {
    throw InvalidInput(v.id + ": invalid video dimensions");
  }
  for (const Tube& t : v.gt_tubes) validate_tube(t, v, "ground-truth tube");
  for (const Proposal& p : v.proposals) validate_tube(p.tube, v, "proposal");
  for (const PointTrack& c : v.points) {
    validate_track(c);
    for (const Point& p : c.points) {
      if (p.frame < 1 || p.frame > v.n_frames || p.x < 0.0 || p.y < 0.0 || p.x > v.frame_w ||
          p.y > v.frame_h) {
        throw InvalidInput(v.id + ": point outside video");
      }
    }
  }
}

}  // namespace pointmine
