#pragma once

// Reference implementations written directly from the definitions, without
// the shortcuts used by the library. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <vector>

#include "pointmine/classifier.hpp"
#include "pointmine/evaluation.hpp"
#include "pointmine/geometry.hpp"
#include "pointmine/rng.hpp"

namespace oracle {

using namespace pointmine;

inline double max_boundary_distance(const BoundingBox& b, int samples_per_edge) {
  const double cx = b.x + b.w / 2, cy = b.y + b.h / 2;
  double best = 0.0;
  for (int i = 0; i <= samples_per_edge; ++i) {
    const double t = static_cast<double>(i) / samples_per_edge;
    const double xs[4] = {b.x + t * b.w, b.x + t * b.w, b.x, b.x + b.w};
    const double ys[4] = {b.y, b.y + b.h, b.y + t * b.h, b.y + t * b.h};
    for (int k = 0; k < 4; ++k) {
      best = std::max(best, std::sqrt((xs[k] - cx) * (xs[k] - cx) + (ys[k] - cy) * (ys[k] - cy)));
    }
  }
  return best;
}

inline BoundingBox random_int_box(Rng& rng, int extent) {
  const int x = rng.between(0, extent - 1);
  const int y = rng.between(0, extent - 1);
  const int w = rng.between(1, extent - x);
  const int h = rng.between(1, extent - y);
  return {double(x), double(y), double(w), double(h)};
}

// Counts unit cells of the integer grid covered by each box.
inline double raster_iou(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = static_cast<int>(std::min(a.x, b.x));
  const int y0 = static_cast<int>(std::min(a.y, b.y));
  const int x1 = static_cast<int>(std::max(a.right(), b.right()));
  const int y1 = static_cast<int>(std::max(a.bottom(), b.bottom()));
  long inter = 0, uni = 0;
  for (int x = x0; x < x1; ++x) {
    for (int y = y0; y < y1; ++y) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_a = cx > a.x && cx < a.right() && cy > a.y && cy < a.bottom();
      const bool in_b = cx > b.x && cx < b.right() && cy > b.y && cy < b.bottom();
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline Tube random_tube(Rng& rng, int max_frames, double extent) {
  const int start = rng.between(1, max_frames);
  const int length = rng.between(1, max_frames - start + 1);
  Tube t{start, {}};
  for (int i = 0; i < length; ++i) {
    t.boxes.push_back({rng.uniform(0, extent * 0.7), rng.uniform(0, extent * 0.7),
                       rng.uniform(1, extent * 0.3), rng.uniform(1, extent * 0.3)});
  }
  return t;
}

// Walks every frame of the joint extent; frames with one tube score zero.
inline double tube_iou_enumerated(const Tube& a, const Tube& b) {
  const int first = std::min(a.start_frame, b.start_frame);
  const int last = std::max(a.end_frame(), b.end_frame());
  double sum = 0.0;
  int frames = 0;
  for (int f = first; f <= last; ++f) {
    const bool in_a = f >= a.start_frame && f <= a.end_frame();
    const bool in_b = f >= b.start_frame && f <= b.end_frame();
    if (!in_a && !in_b) continue;
    ++frames;
    if (in_a && in_b) sum += frame_iou(a.boxes[f - a.start_frame], b.boxes[f - b.start_frame]);
  }
  return sum / frames;
}

inline Tube scaled(Tube t, double k) {
  for (auto& b : t.boxes) b = {b.x * k, b.y * k, b.w * k, b.h * k};
  return t;
}

// Center bias straight from its definition: per point, find the covering box,
// check containment, and compare the center distance with the farthest corner.
inline double center_bias(const Tube& a, const PointTrack& c) {
  double total = 0.0;
  for (const Point& p : c.points) {
    double s = 0.0;
    for (int i = 0; i < a.length(); ++i) {
      if (a.start_frame + i != p.frame) continue;
      const BoundingBox& b = a.boxes[i];
      if (p.x < b.x || p.x > b.x + b.w || p.y < b.y || p.y > b.y + b.h) break;
      const double cx = b.x + 0.5 * b.w, cy = b.y + 0.5 * b.h;
      double corner = 0.0;
      for (double ux : {b.x, b.x + b.w}) {
        for (double uy : {b.y, b.y + b.h}) {
          corner = std::max(corner, std::sqrt((ux - cx) * (ux - cx) + (uy - cy) * (uy - cy)));
        }
      }
      const double d = std::sqrt((p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy));
      s = std::max(0.0, 1.0 - d / corner);
    }
    total += s;
  }
  return total / static_cast<double>(c.points.size());
}

inline double size_regularizer(const Tube& a, int n_frames, double fw, double fh) {
  double boxes = 0.0, frames = 0.0;
  for (const auto& b : a.boxes) boxes += b.w * b.h;
  for (int j = 1; j <= n_frames; ++j) frames += fw * fh;
  return (boxes / frames) * (boxes / frames);
}

// AP by enumerating the positives in rank order and counting precision at
// each one.
inline double average_precision(std::vector<std::pair<double, bool>> ranked, std::size_t n_gt) {
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i].second) continue;
    std::size_t hits = 0;
    for (std::size_t j = 0; j <= i; ++j) hits += ranked[j].second;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(n_gt);
}

// AUC by comparing every positive with every negative.
inline double auc(const std::vector<std::pair<double, bool>>& items, std::size_t n_pos_total = 0) {
  double wins = 0.0;
  std::size_t np = 0, nn = 0;
  for (const auto& p : items) {
    if (!p.second) continue;
    ++np;
    for (const auto& n : items) {
      if (n.second) continue;
      wins += p.first > n.first ? 1.0 : (p.first == n.first ? 0.5 : 0.0);
    }
  }
  for (const auto& n : items) nn += !n.second;
  const double pos = n_pos_total > 0 ? static_cast<double>(n_pos_total) : static_cast<double>(np);
  return wins / (pos * static_cast<double>(nn));
}

inline std::vector<Detection> as_detections(const std::vector<std::pair<double, bool>>& items) {
  std::vector<Detection> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Detection d;
    d.video = i;
    d.score = items[i].first;
    if (items[i].second) d.matched_gt = 0;
    out.push_back(d);
  }
  return out;
}

// Full-batch subgradient descent on the same objective, with a diminishing
// step. Slow but independent of the SGD code path.
inline LinearModel batch_descent(std::span<const FeatureView> pos, std::span<const FeatureView> neg,
                                 double lambda, int steps) {
  const std::size_t dim = pos.front().size();
  std::vector<double> w(dim, 0.0), best_w = w;
  double b = 0.0, best_b = 0.0;
  const double cp = (pos.size() + neg.size()) / (2.0 * pos.size());
  const double cn = (pos.size() + neg.size()) / (2.0 * neg.size());
  auto objective = [&](const std::vector<double>& ww, double bb) {
    double reg = 0.0, loss = 0.0;
    for (double x : ww) reg += x * x;
    for (auto z : pos) {
      double s = bb;
      for (std::size_t j = 0; j < dim; ++j) s += ww[j] * z[j];
      loss += cp * std::max(0.0, 1.0 - s);
    }
    for (auto z : neg) {
      double s = bb;
      for (std::size_t j = 0; j < dim; ++j) s += ww[j] * z[j];
      loss += cn * std::max(0.0, 1.0 + s);
    }
    return 0.5 * reg + lambda * loss;
  };
  double best = objective(w, b);
  for (int t = 1; t <= steps; ++t) {
    std::vector<double> g = w;
    double gb = 0.0;
    auto add = [&](FeatureView z, double y, double c) {
      double s = b;
      for (std::size_t j = 0; j < dim; ++j) s += w[j] * z[j];
      if (y * s < 1.0) {
        for (std::size_t j = 0; j < dim; ++j) g[j] -= lambda * c * y * z[j];
        gb -= lambda * c * y;
      }
    };
    for (auto z : pos) add(z, 1.0, cp);
    for (auto z : neg) add(z, -1.0, cn);
    const double eta = 0.05 / (lambda * std::sqrt(static_cast<double>(t)));
    for (std::size_t j = 0; j < dim; ++j) w[j] -= eta * g[j];
    b -= eta * gb;
    const double obj = objective(w, b);
    if (obj < best) {
      best = obj;
      best_w = w;
      best_b = b;
    }
  }
  return LinearModel{best_w, best_b, lambda};
}

}  // namespace oracle
