#pragma once

#include <string>
#include <vector>

namespace pointmine {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Axis-aligned box in pixel coordinates: (x, y) is the top-left corner.
/// Width and height are strictly positive.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  /// Validating constructor; throws InvalidInput unless w > 0 and h > 0.
  static BoundingBox make(double x, double y, double w, double h);

  /// Intersects the box with the frame [0, frame_w] x [0, frame_h]. A box that
  /// would end up thinner than one pixel is pushed back inside the frame so
  /// that it keeps at least a one pixel extent.
  static BoundingBox clamped(double x, double y, double w, double h, double frame_w,
                             double frame_h);

  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double area() const noexcept { return w * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Temporally contiguous track of boxes covering frames
/// [start_frame, start_frame + boxes.size() - 1]. Frames are 1-based.
struct Tube {
  int start_frame = 1;
  std::vector<BoundingBox> boxes;

  int end_frame() const noexcept { return start_frame + static_cast<int>(boxes.size()) - 1; }
  int length() const noexcept { return static_cast<int>(boxes.size()); }
  bool covers(int frame) const noexcept { return frame >= start_frame && frame <= end_frame(); }
  /// Box on `frame`; the frame must be covered.
  const BoundingBox& box_at(int frame) const { return boxes.at(static_cast<std::size_t>(frame - start_frame)); }

  friend bool operator==(const Tube&, const Tube&) = default;
};

struct Point {
  int frame = 1;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Sparse point annotations for one action instance, at most one per frame.
struct PointTrack {
  std::vector<Point> points;

  bool empty() const noexcept { return points.empty(); }
  std::size_t size() const noexcept { return points.size(); }
  friend bool operator==(const PointTrack&, const PointTrack&) = default;
};

struct Proposal {
  int id = 0;
  Tube tube;
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct VideoRecord {
  std::string id;
  int n_frames = 1;
  double frame_w = 1.0;
  double frame_h = 1.0;
  int label = 0;
  std::vector<Tube> gt_tubes;
  std::vector<Proposal> proposals;
  std::vector<PointTrack> points;  // one track per annotated instance

  double frame_area() const noexcept { return frame_w * frame_h; }
  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

Vec2 box_center(const BoundingBox& b) noexcept;

/// Largest distance from the center to the box boundary (the corner distance).
double max_center_to_edge(const BoundingBox& b) noexcept;

/// Boundary-inclusive containment.
bool point_in_box(double px, double py, const BoundingBox& b) noexcept;
inline bool point_in_box(const Point& p, const BoundingBox& b) noexcept {
  return point_in_box(p.x, p.y, b);
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;
double frame_iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Mean per-frame IoU over the frames where at least one tube is present.
double tube_iou(const Tube& p, const Tube& b) noexcept;

/// Best tube_iou of `tube` against any of `refs`; 0 when `refs` is empty.
double best_tube_iou(const Tube& tube, const std::vector<Tube>& refs) noexcept;

/// Throws InvalidInput when a track has non-increasing frames.
void validate_track(const PointTrack& track);

/// Throws InvalidInput when a tube, proposal or point escapes the video extent
/// or frame, or when a track is malformed.
void validate_video(const VideoRecord& v);

}  // namespace pointmine
