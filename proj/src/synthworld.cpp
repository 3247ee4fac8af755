#include "pointmine/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>

#include "pointmine/error.hpp"

namespace pointmine {

void validate(const WorldConfig& cfg) {
  const bool counts_ok = cfg.n_classes >= 1 && cfg.train_videos_per_class >= 1 &&
                         cfg.test_videos_per_class >= 1 && cfg.min_frames >= 1 &&
                         cfg.max_frames >= cfg.min_frames && cfg.instances_per_video >= 1 &&
                         cfg.proposals_per_video >= 1 && cfg.feature_dim >= 1 &&
                         cfg.annotation_rate >= 1;
  const bool dims_ok = cfg.frame_w >= 2.0 && cfg.frame_h >= 2.0;
  const bool spreads_ok = cfg.drift_sigma >= 0.0 && cfg.size_drift_sigma >= 0.0 &&
                          cfg.spatial_jitter >= 0.0 && cfg.scale_jitter >= 0.0 &&
                          cfg.temporal_crop >= 0.0 && cfg.feature_noise >= 0.0 &&
                          cfg.point_jitter >= 0.0 && cfg.context_strength >= 0.0;
  const bool shares_ok = cfg.distractor_fraction >= 0.0 && cfg.scene_fraction >= 0.0 &&
                         cfg.distractor_fraction + cfg.scene_fraction <= 1.0 &&
                         cfg.gt_min_span > 0.0 && cfg.gt_min_span <= 1.0 &&
                         cfg.gt_min_width > 0.0 && cfg.gt_max_width >= cfg.gt_min_width &&
                         cfg.gt_max_width <= 1.0 && cfg.gt_min_aspect > 0.0 &&
                         cfg.gt_max_aspect >= cfg.gt_min_aspect;
  if (!counts_ok || !dims_ok || !spreads_ok || !shares_ok) {
    throw InvalidInput("invalid world configuration");
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Visitor>
void visit_fields(WorldConfig& c, Visitor&& v) {
  v("n_classes", c.n_classes);
  v("train_videos_per_class", c.train_videos_per_class);
  v("test_videos_per_class", c.test_videos_per_class);
  v("min_frames", c.min_frames);
  v("max_frames", c.max_frames);
  v("frame_w", c.frame_w);
  v("frame_h", c.frame_h);
  v("instances_per_video", c.instances_per_video);
  v("gt_min_span", c.gt_min_span);
  v("gt_min_width", c.gt_min_width);
  v("gt_max_width", c.gt_max_width);
  v("gt_min_aspect", c.gt_min_aspect);
  v("gt_max_aspect", c.gt_max_aspect);
  v("drift_sigma", c.drift_sigma);
  v("size_drift_sigma", c.size_drift_sigma);
  v("proposals_per_video", c.proposals_per_video);
  v("spatial_jitter", c.spatial_jitter);
  v("scale_jitter", c.scale_jitter);
  v("temporal_crop", c.temporal_crop);
  v("distractor_fraction", c.distractor_fraction);
  v("scene_fraction", c.scene_fraction);
  v("feature_dim", c.feature_dim);
  v("feature_noise", c.feature_noise);
  v("context_strength", c.context_strength);
  v("point_jitter", c.point_jitter);
  v("clamp_points", c.clamp_points);
  v("annotation_rate", c.annotation_rate);
  v("seed", c.seed);
}

std::string to_text(int v) { return std::to_string(v); }
std::string to_text(double v) { return fmt_double(v); }
std::string to_text(bool v) { return v ? "1" : "0"; }
std::string to_text(std::uint64_t v) { return std::to_string(v); }

void from_text(const std::string& s, int& out) { out = std::stoi(s); }
void from_text(const std::string& s, double& out) { out = std::stod(s); }
void from_text(const std::string& s, bool& out) { out = s == "1" || s == "true"; }
void from_text(const std::string& s, std::uint64_t& out) { out = std::stoull(s); }

}  // namespace

std::vector<std::pair<std::string, std::string>> to_entries(const WorldConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  WorldConfig copy = cfg;
  visit_fields(copy, [&](const char* key, auto& field) { out.emplace_back(key, to_text(field)); });
  return out;
}

WorldConfig world_config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  WorldConfig cfg;
  visit_fields(cfg, [&](const char* key, auto& field) {
    for (const auto& [k, v] : entries) {
      if (k != key) continue;
      try {
        from_text(v, field);
      } catch (const std::exception&) {
        throw ParseError("bad value for world setting '" + k + "': " + v);
      }
    }
  });
  return cfg;
}

std::string config_hash(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string canonical;
  for (const auto& [k, v] : entries) canonical += k + "=" + v + "\n";
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_tag(canonical)));
  return buf;
}

void validate(const CostModel& cost) {
  if (!(cost.box_seconds_per_frame > 0.0) || !(cost.point_seconds_per_frame > 0.0) ||
      !(cost.label_seconds_per_video > 0.0) ||
      !(cost.box_seconds_per_frame > cost.point_seconds_per_frame)) {
    throw InvalidInput("cost model needs positive costs with boxes slower than points");
  }
}

namespace {

double per_frame(const CostModel& cost, AnnotationScheme scheme) {
  return scheme == AnnotationScheme::Box ? cost.box_seconds_per_frame : cost.point_seconds_per_frame;
}

long annotated_frames(int n_frames, int rate) { return (n_frames + rate - 1) / rate; }

}  // namespace

AnnotationCost annotation_cost(int n_frames, int rate, const CostModel& cost,
                               AnnotationScheme scheme) {
  if (rate < 1 || n_frames < 0) throw InvalidInput("annotation rate must be at least 1");
  const double seconds = static_cast<double>(annotated_frames(n_frames, rate)) * per_frame(cost, scheme) +
                         cost.label_seconds_per_video;
  const double full_box = static_cast<double>(n_frames) * cost.box_seconds_per_frame +
                          cost.label_seconds_per_video;
  return {seconds, full_box / seconds};
}

AnnotationCost annotation_cost(const Dataset& data, int rate, const CostModel& cost,
                               AnnotationScheme scheme) {
  if (rate < 1) throw InvalidInput("annotation rate must be at least 1");
  double seconds = 0.0;
  double full_box = 0.0;
  for (const VideoRecord& v : data.videos) {
    seconds += cost.label_seconds_per_video;
    full_box += cost.label_seconds_per_video;
    for (const Tube& g : v.gt_tubes) {
      seconds += static_cast<double>(annotated_frames(g.length(), rate)) * per_frame(cost, scheme);
      full_box += static_cast<double>(g.length()) * cost.box_seconds_per_frame;
    }
  }
  if (seconds <= 0.0) return {0.0, 1.0};
  return {seconds, full_box / seconds};
}

namespace {

struct WalkStart {
  int start_frame;
  int length;
  double cx, cy, w, h;
};

double reflect(double v, double lo, double hi) {
  if (hi <= lo) return 0.5 * (lo + hi);
  for (int i = 0; i < 4 && (v < lo || v > hi); ++i) v = v < lo ? 2 * lo - v : 2 * hi - v;
  return std::clamp(v, lo, hi);
}

Tube random_walk(const WalkStart& s, double drift, double size_drift, double fw, double fh,
                 Rng& rng) {
  Tube t{s.start_frame, {}};
  t.boxes.reserve(static_cast<std::size_t>(s.length));
  double cx = s.cx, cy = s.cy, log_scale = 0.0;
  for (int k = 0; k < s.length; ++k) {
    if (k > 0) {
      cx += rng.normal(0.0, drift);
      cy += rng.normal(0.0, drift);
      log_scale = std::clamp(log_scale + rng.normal(0.0, size_drift), -0.4, 0.4);
    }
    const double w = s.w * std::exp(log_scale);
    const double h = s.h * std::exp(log_scale);
    cx = reflect(cx, w / 2, fw - w / 2);
    cy = reflect(cy, h / 2, fh - h / 2);
    t.boxes.push_back(BoundingBox::clamped(cx - w / 2, cy - h / 2, w, h, fw, fh));
  }
  return t;
}

// Size and placement of an actor-like box.
WalkStart actor_start(const WorldConfig& cfg, int start, int length, Rng& rng) {
  const double w = rng.uniform(cfg.gt_min_width, cfg.gt_max_width) * cfg.frame_w;
  const double h = std::min(w * rng.uniform(cfg.gt_min_aspect, cfg.gt_max_aspect), 0.9 * cfg.frame_h);
  const double cx = rng.uniform(w / 2, cfg.frame_w - w / 2);
  const double cy = rng.uniform(h / 2, cfg.frame_h - h / 2);
  return {start, length, cx, cy, w, h};
}

std::pair<int, int> random_interval(int n_frames, double min_share, double max_share, Rng& rng) {
  const int length = std::clamp(
      static_cast<int>(std::lround(rng.uniform(min_share, max_share) * n_frames)), 1, n_frames);
  const int start = rng.between(1, n_frames - length + 1);
  return {start, length};
}

Tube perturbed_copy(const Tube& gt, int n_frames, const WorldConfig& cfg, Rng& rng) {
  const double d = rng.uniform();
  const int len = gt.length();
  auto shift = [&]() { return static_cast<int>(rng.uniform(0.0, d * cfg.temporal_crop) * len); };
  int s = gt.start_frame;
  int e = gt.end_frame();
  const int a = shift();
  s = rng.uniform() < 0.5 ? s + a : std::max(1, s - a);
  const int b = shift();
  e = rng.uniform() < 0.5 ? e - b : std::min(n_frames, e + b);
  if (s > e) s = e = std::clamp((gt.start_frame + gt.end_frame()) / 2, 1, n_frames);

  const double dx = rng.normal(0.0, d * cfg.spatial_jitter);
  const double dy = rng.normal(0.0, d * cfg.spatial_jitter);
  const double common = rng.normal(0.0, d * cfg.scale_jitter);
  const double aspect = rng.normal(0.0, 0.3 * d * cfg.scale_jitter);
  const double sx = std::exp(common + aspect);
  const double sy = std::exp(common - aspect);

  Tube t{s, {}};
  for (int f = s; f <= e; ++f) {
    const BoundingBox& base = gt.box_at(std::clamp(f, gt.start_frame, gt.end_frame()));
    const Vec2 c = box_center(base);
    const double w = base.w * sx;
    const double h = base.h * sy;
    t.boxes.push_back(BoundingBox::clamped(c.x + dx * base.w - w / 2, c.y + dy * base.h - h / 2, w,
                                           h, cfg.frame_w, cfg.frame_h));
  }
  return t;
}

Tube distractor(int n_frames, const WorldConfig& cfg, Rng& rng) {
  const auto [start, length] = random_interval(n_frames, 0.3, 1.0, rng);
  return random_walk(actor_start(cfg, start, length, rng), cfg.drift_sigma, cfg.size_drift_sigma,
                     cfg.frame_w, cfg.frame_h, rng);
}

Tube scene_tube(int n_frames, const WorldConfig& cfg, Rng& rng) {
  const auto [start, length] = random_interval(n_frames, 0.7, 1.0, rng);
  const double w = rng.uniform(0.5, 1.0) * cfg.frame_w;
  const double h = rng.uniform(0.5, 1.0) * cfg.frame_h;
  const double cx = cfg.frame_w / 2 + rng.normal(0.0, 0.1 * cfg.frame_w);
  const double cy = cfg.frame_h / 2 + rng.normal(0.0, 0.1 * cfg.frame_h);
  const BoundingBox box = BoundingBox::clamped(cx - w / 2, cy - h / 2, w, h, cfg.frame_w, cfg.frame_h);
  return Tube{start, std::vector<BoundingBox>(static_cast<std::size_t>(length), box)};
}

}  // namespace

Tube generate_gt_tube(const WorldConfig& cfg, int n_frames, Rng& rng) {
  const auto [start, length] = random_interval(n_frames, cfg.gt_min_span, 1.0, rng);
  return random_walk(actor_start(cfg, start, length, rng), cfg.drift_sigma, cfg.size_drift_sigma,
                     cfg.frame_w, cfg.frame_h, rng);
}

std::vector<Tube> generate_proposals(const Tube& gt, int n_frames, const WorldConfig& cfg, Rng& rng) {
  const int total = cfg.proposals_per_video;
  const int n_distract = std::min(total, static_cast<int>(std::lround(cfg.distractor_fraction * total)));
  const int n_scene = std::min(total - n_distract, static_cast<int>(std::lround(cfg.scene_fraction * total)));
  const int n_copy = total - n_distract - n_scene;

  constexpr int kMaxAttempts = 64;
  std::vector<Tube> pool;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    pool.clear();
    double best = 0.0;
    for (int i = 0; i < n_copy; ++i) {
      pool.push_back(perturbed_copy(gt, n_frames, cfg, rng));
      best = std::max(best, tube_iou(pool.back(), gt));
    }
    if (n_copy == 0 || best >= 0.5) break;
  }
  for (int i = 0; i < n_distract; ++i) pool.push_back(distractor(n_frames, cfg, rng));
  for (int i = 0; i < n_scene; ++i) pool.push_back(scene_tube(n_frames, cfg, rng));
  rng.shuffle(std::span<Tube>(pool));
  return pool;
}

FeatureVector random_unit_vector(int dim, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  FeatureVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

FeatureVector synthesize_feature(const Tube& p, const std::vector<Tube>& gts, double frame_area,
                                 const FeatureVector& prototype, const FeatureVector& context,
                                 const WorldConfig& cfg, Rng& rng) {
  if (prototype.size() != context.size()) throw InvalidInput("prototype dimensions differ");
  const double q = best_tube_iou(p, gts);
  double coverage = 0.0;
  for (const BoundingBox& b : p.boxes) coverage += b.area();
  coverage /= static_cast<double>(std::max<std::size_t>(p.boxes.size(), 1)) * frame_area;
  FeatureVector z(prototype.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double noise = rng.normal(0.0, cfg.feature_noise);
    const double background = noise + cfg.context_strength * coverage * context[j];
    z[j] = static_cast<float>(q * prototype[j] + (1.0 - q) * background);
  }
  return z;
}

PointTrack simulate_points(const Tube& gt, const PointSimulation& sim, double frame_w,
                           double frame_h, Rng& rng) {
  if (sim.rate < 1) throw InvalidInput("annotation rate must be at least 1");
  PointTrack track;
  for (int f = gt.start_frame; f <= gt.end_frame(); f += sim.rate) {
    const BoundingBox& b = gt.box_at(f);
    const Vec2 c = box_center(b);
    const double spread = sim.jitter * max_center_to_edge(b);
    double x = c.x + rng.normal(0.0, spread);
    double y = c.y + rng.normal(0.0, spread);
    if (sim.clamp_to_box) {
      x = std::clamp(x, b.x, b.right());
      y = std::clamp(y, b.y, b.bottom());
    } else {
      x = std::clamp(x, 0.0, frame_w);
      y = std::clamp(y, 0.0, frame_h);
    }
    track.points.push_back(Point{f, x, y});
  }
  return track;
}

namespace {

Rng points_rng(std::uint64_t seed, const std::string& video_id, std::size_t instance, int rate) {
  return Rng(derive_seed(seed, {hash_tag("points"), hash_tag(video_id),
                                static_cast<std::uint64_t>(instance), static_cast<std::uint64_t>(rate)}));
}

}  // namespace

void resimulate_points(Dataset& data, const WorldConfig& cfg, int rate) {
  const PointSimulation sim{rate, cfg.point_jitter, cfg.clamp_points};
  for (VideoRecord& v : data.videos) {
    v.points.clear();
    for (std::size_t g = 0; g < v.gt_tubes.size(); ++g) {
      Rng rng = points_rng(cfg.seed, v.id, g, rate);
      v.points.push_back(simulate_points(v.gt_tubes[g], sim, v.frame_w, v.frame_h, rng));
    }
  }
}

namespace {

std::string video_id(std::string_view prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*s%05d", static_cast<int>(prefix.size()), prefix.data(), index);
  return buf;
}

Dataset generate_split(const WorldConfig& cfg, std::string_view split, int per_class,
                       const std::vector<FeatureVector>& prototypes,
                       const std::vector<FeatureVector>& contexts) {
  Dataset d;
  d.manifest.dataset_id = "synth-" + std::to_string(cfg.seed);
  d.manifest.split = std::string(split);
  d.manifest.config = to_entries(cfg);
  d.manifest.config_hash = config_hash(d.manifest.config);
  d.proposal_features = FeatureStore(static_cast<std::size_t>(cfg.feature_dim));
  d.gt_features = FeatureStore(static_cast<std::size_t>(cfg.feature_dim));

  const std::string prefix = split == "train" ? "tr" : "te";
  int index = 0;
  for (int label = 0; label < cfg.n_classes; ++label) {
    for (int k = 0; k < per_class; ++k, ++index) {
      const std::uint64_t key =
          derive_seed(cfg.seed, {hash_tag(split), static_cast<std::uint64_t>(index)});
      VideoRecord v;
      v.id = video_id(prefix, index);
      v.label = label;
      v.frame_w = cfg.frame_w;
      v.frame_h = cfg.frame_h;

      Rng layout(derive_seed(key, {hash_tag("layout")}));
      v.n_frames = layout.between(cfg.min_frames, cfg.max_frames);
      for (int g = 0; g < cfg.instances_per_video; ++g) {
        v.gt_tubes.push_back(generate_gt_tube(cfg, v.n_frames, layout));
      }

      Rng prop_rng(derive_seed(key, {hash_tag("proposals")}));
      WorldConfig per_instance = cfg;
      per_instance.proposals_per_video =
          (cfg.proposals_per_video + cfg.instances_per_video - 1) / cfg.instances_per_video;
      std::vector<Tube> pool;
      for (const Tube& g : v.gt_tubes) {
        auto part = generate_proposals(g, v.n_frames, per_instance, prop_rng);
        pool.insert(pool.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      if (cfg.instances_per_video > 1) prop_rng.shuffle(std::span<Tube>(pool));
      pool.resize(static_cast<std::size_t>(cfg.proposals_per_video));
      for (std::size_t j = 0; j < pool.size(); ++j) {
        v.proposals.push_back(Proposal{static_cast<int>(j), std::move(pool[j])});
      }

      Rng feat_rng(derive_seed(key, {hash_tag("features")}));
      const auto& proto = prototypes[static_cast<std::size_t>(label)];
      const auto& ctx = contexts[static_cast<std::size_t>(label)];
      std::vector<FeatureVector> rows;
      for (const Proposal& p : v.proposals) {
        rows.push_back(synthesize_feature(p.tube, v.gt_tubes, v.frame_area(), proto, ctx, cfg, feat_rng));
      }
      d.proposal_features.append_video(rows);
      rows.clear();
      for (const Tube& g : v.gt_tubes) {
        rows.push_back(synthesize_feature(g, v.gt_tubes, v.frame_area(), proto, ctx, cfg, feat_rng));
      }
      d.gt_features.append_video(rows);
      d.videos.push_back(std::move(v));
    }
  }
  return d;
}

}  // namespace

World generate_world(const WorldConfig& cfg) {
  validate(cfg);
  std::vector<FeatureVector> prototypes, contexts;
  for (int c = 0; c < cfg.n_classes; ++c) {
    Rng p(derive_seed(cfg.seed, {hash_tag("prototype"), static_cast<std::uint64_t>(c)}));
    prototypes.push_back(random_unit_vector(cfg.feature_dim, p));
    Rng q(derive_seed(cfg.seed, {hash_tag("context"), static_cast<std::uint64_t>(c)}));
    contexts.push_back(random_unit_vector(cfg.feature_dim, q));
  }
  World w;
  w.train = generate_split(cfg, "train", cfg.train_videos_per_class, prototypes, contexts);
  w.test = generate_split(cfg, "test", cfg.test_videos_per_class, prototypes, contexts);
  resimulate_points(w.train, cfg, cfg.annotation_rate);
  return w;
}

}  // namespace pointmine
