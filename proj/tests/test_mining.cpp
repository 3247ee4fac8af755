#include <doctest.h>

#include <set>

#include "pointmine/error.hpp"
#include "pointmine/evaluation.hpp"
#include "pointmine/mining.hpp"
#include "pointmine/synthworld.hpp"

using namespace pointmine;

namespace {

Tube box_tube(int length, BoundingBox b) {
  return Tube{1, std::vector<BoundingBox>(static_cast<std::size_t>(length), b)};
}

// Adds a video with the given proposal boxes and one feature row per proposal.
void add_video(Dataset& d, const std::string& id, int label, const std::vector<BoundingBox>& boxes,
               const std::vector<FeatureVector>& features, std::vector<PointTrack> points = {}) {
  VideoRecord v;
  v.id = id;
  v.label = label;
  v.n_frames = 4;
  v.frame_w = 100;
  v.frame_h = 100;
  v.gt_tubes.push_back(box_tube(4, {40, 40, 20, 20}));
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    v.proposals.push_back({static_cast<int>(j), box_tube(4, boxes[j])});
  }
  v.points = std::move(points);
  d.proposal_features.append_video(features);
  d.gt_features.append_video({features.front()});
  d.videos.push_back(std::move(v));
}

Dataset empty_dataset(std::size_t dim) {
  Dataset d;
  d.proposal_features = FeatureStore(dim);
  d.gt_features = FeatureStore(dim);
  return d;
}

const PointTrack kCenter{{{1, 50, 50}, {3, 50, 50}}};

WorldConfig small_world(std::uint64_t seed) {
  WorldConfig w;
  w.n_classes = 3;
  w.train_videos_per_class = 10;
  w.test_videos_per_class = 4;
  w.proposals_per_video = 40;
  w.min_frames = 40;
  w.max_frames = 60;
  w.feature_dim = 16;
  w.seed = seed;
  return w;
}

}  // namespace

TEST_CASE("map_score examples") {
  CHECK(map_score(2.0, OverlapScore{0, 0, 0.5}) == 1.0);
  CHECK(map_score(-3.0, OverlapScore{0, 0, 0.5}) == -1.5);
  CHECK(map_score(2.0, OverlapScore{0, 0, -0.2}) == doctest::Approx(2e-6).epsilon(1e-12));
  const LinearModel m{{1, 1}, 0, 100};
  CHECK(map_score(m, FeatureVector{1, 1}, OverlapScore{0, 0, 0.5}) == 1.0);
}

TEST_CASE("supervision names round-trip") {
  for (auto mode : {SupervisionMode::Points, SupervisionMode::LabelOnly,
                    SupervisionMode::BestIouOracle, SupervisionMode::GtOracle}) {
    CHECK(parse_supervision(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(parse_supervision("boxes"), InvalidInput);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.n_folds = 1;
  CHECK_THROWS_AS(validate(cfg), InvalidInput);
  cfg = {};
  cfg.lambda = 0;
  CHECK_THROWS_AS(validate(cfg), InvalidInput);
}

TEST_CASE("initial selection in Points mode") {
  Dataset d = empty_dataset(2);
  // Proposal 0 is large (small O), 1 is tight around the points, 2 misses them.
  add_video(d, "a", 0, {{0, 0, 100, 100}, {40, 40, 20, 20}, {0, 0, 10, 10}},
            {{1, 0}, {1, 0}, {1, 0}}, {kCenter});
  add_video(d, "b", 0, {{45, 45, 10, 10}}, {{1, 0}}, {kCenter});
  // Identical proposals: the lower id wins.
  add_video(d, "c", 0, {{40, 40, 20, 20}, {40, 40, 20, 20}}, {{1, 0}, {1, 0}}, {kCenter});
  std::vector<std::string> dropped;
  const auto sets = collect_candidates(d, 0, SupervisionMode::Points, &dropped);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].local == std::vector<std::size_t>{0, 1});
  const auto choice = initial_selection(d, sets, SupervisionMode::Points, 0);
  CHECK(choice == std::vector<std::size_t>{1, 0, 0});
}

TEST_CASE("videos without admissible proposals are dropped") {
  Dataset d = empty_dataset(2);
  add_video(d, "a", 0, {{0, 0, 10, 10}}, {{1, 0}}, {kCenter});
  add_video(d, "b", 0, {{40, 40, 20, 20}}, {{1, 0}}, {});
  add_video(d, "c", 0, {{40, 40, 20, 20}}, {{1, 0}}, {kCenter});
  std::vector<std::string> dropped;
  const auto sets = collect_candidates(d, 0, SupervisionMode::Points, &dropped);
  CHECK(sets.size() == 1);
  CHECK(dropped == std::vector<std::string>{"a", "b"});
}

TEST_CASE("sample_negatives") {
  Dataset d = empty_dataset(1);
  add_video(d, "pos", 0, {{40, 40, 20, 20}}, {{1}});
  std::vector<BoundingBox> fifty(50, BoundingBox{0, 0, 10, 10});
  std::vector<BoundingBox> many(500, BoundingBox{0, 0, 10, 10});
  add_video(d, "n50", 1, fifty, std::vector<FeatureVector>(50, FeatureVector{0}));
  add_video(d, "n500", 2, many, std::vector<FeatureVector>(500, FeatureVector{0}));
  TrainConfig cfg;
  const auto rows = sample_negatives(d, 0, cfg);
  CHECK(rows.size() == 150);
  std::set<std::size_t> first(rows.begin(), rows.begin() + 50), second(rows.begin() + 50, rows.end());
  CHECK(first.size() == 50);
  CHECK(second.size() == 100);
  for (auto r : first) CHECK(r < 51);
  for (auto r : second) CHECK(r >= 51);
  CHECK(sample_negatives(d, 0, cfg) == rows);
  cfg.seed = 9;
  CHECK(sample_negatives(d, 0, cfg) != rows);

  Dataset lonely = empty_dataset(1);
  add_video(lonely, "pos", 0, {{40, 40, 20, 20}}, {{1}});
  CHECK_THROWS_AS(sample_negatives(lonely, 0, TrainConfig{}), InvalidInput);
}

TEST_CASE("relocalize_fold picks the best mining score") {
  Dataset d = empty_dataset(1);
  add_video(d, "a", 0, {{40, 40, 20, 20}, {41, 41, 20, 20}, {39, 39, 20, 20}}, {{-1}, {4}, {2}},
            {kCenter});
  TrainConfig cfg;
  cfg.supervision = SupervisionMode::LabelOnly;
  auto sets = collect_candidates(d, 0, cfg.supervision);
  const LinearModel identity{{1}, 0, 100};
  CHECK(relocalize_fold(identity, d, sets, std::vector<std::size_t>{0}, cfg) ==
        std::vector<std::size_t>{1});

  // Equal priors make Points agree with LabelOnly.
  cfg.supervision = SupervisionMode::Points;
  sets = collect_candidates(d, 0, cfg.supervision);
  for (auto& o : sets[0].prior) o = OverlapScore{0.5, 0.0, 0.5};
  CHECK(relocalize_fold(identity, d, sets, std::vector<std::size_t>{0}, cfg) ==
        std::vector<std::size_t>{1});
}

TEST_CASE("a flat model makes relocalization follow the prior") {
  const World w = generate_world(small_world(4));
  TrainConfig cfg;
  const auto sets = collect_candidates(w.train, 0, SupervisionMode::Points);
  const auto init = initial_selection(w.train, sets, SupervisionMode::Points, 0);
  const LinearModel flat{std::vector<double>(16, 0.0), 1.0, 100};
  CHECK(relocalize_fold(flat, w.train, sets, init, cfg) == init);
}

TEST_CASE("relocalize_fold is idempotent and invariant to prior scaling") {
  const World w = generate_world(small_world(5));
  TrainConfig cfg;
  const MilResult r = run_mil(w.train, 1, cfg);
  auto sets = r.candidates;
  const auto once = relocalize_fold(r.state.model, w.train, sets, r.choice, cfg);
  CHECK(relocalize_fold(r.state.model, w.train, sets, once, cfg) == once);

  // Restricted to candidates with positive score and prior, scaling one
  // video's priors leaves its choice alone.
  std::vector<CandidateSet> kept;
  for (const auto& set : sets) {
    CandidateSet k{set.video, {}, {}};
    for (std::size_t j = 0; j < set.local.size(); ++j) {
      if (score(r.state.model, w.train.proposal_features.row(set.video, set.local[j])) > 0 &&
          set.prior[j].o > 0) {
        k.local.push_back(set.local[j]);
        k.prior.push_back(set.prior[j]);
      }
    }
    if (!k.local.empty()) kept.push_back(k);
  }
  REQUIRE(!kept.empty());
  const std::vector<std::size_t> zeros(kept.size(), 0);
  const auto base = relocalize_fold(r.state.model, w.train, kept, zeros, cfg);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto scaled = kept;
    for (auto& o : scaled[i].prior) o.o *= 3.7;
    CHECK(relocalize_fold(r.state.model, w.train, scaled, zeros, cfg) == base);
  }
}

TEST_CASE("a single admissible candidate pins the selection") {
  Dataset d = empty_dataset(2);
  for (int i = 0; i < 6; ++i) {
    // Proposal 1 is the only one touching the points; proposal 0 looks more
    // like the class.
    add_video(d, "p" + std::to_string(i), 0, {{0, 0, 10, 10}, {40, 40, 20, 20}},
              {{5, 0}, {0.1f, 1}}, {kCenter});
    add_video(d, "n" + std::to_string(i), 1, {{0, 0, 10, 10}, {40, 40, 20, 20}},
              {{-1, 0}, {0, -1}}, {kCenter});
  }
  TrainConfig cfg;
  cfg.sgd_epochs = 5;
  const MilResult r = run_mil(d, 0, cfg);
  for (const auto& [id, proposal] : r.state.selected) CHECK(proposal == 1);
}

TEST_CASE("zero iterations return the initial selection") {
  const World w = generate_world(small_world(6));
  TrainConfig cfg;
  cfg.max_iterations = 0;
  cfg.supervision = SupervisionMode::LabelOnly;
  cfg.seed = 3;
  const MilResult r = run_mil(w.train, 2, cfg);
  const std::uint64_t class_seed = derive_seed(cfg.seed, {hash_tag("mil"), 2});
  CHECK(r.choice == initial_selection(w.train, r.candidates, cfg.supervision, class_seed));
  CHECK(r.state.iteration == 0);
}

TEST_CASE("Points selections always have positive center bias") {
  const World w = generate_world(small_world(7));
  const MilResult r = run_mil(w.train, 0, TrainConfig{});
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& set = r.candidates[i];
    const VideoRecord& v = w.train.videos[set.video];
    const Tube& t = v.proposals[set.local[r.choice[i]]].tube;
    CHECK(center_bias(t, v.points) > 0.0);
    CHECK(r.state.selected.at(v.id) == v.proposals[set.local[r.choice[i]]].id);
  }
}

TEST_CASE("run_mil is deterministic") {
  const World w = generate_world(small_world(8));
  TrainConfig cfg;
  cfg.seed = 12;
  const MilResult a = run_mil(w.train, 0, cfg);
  const MilResult b = run_mil(w.train, 0, cfg);
  CHECK(a.state.selected == b.state.selected);
  CHECK(a.state.model == b.state.model);
}

TEST_CASE("oracle modes") {
  const World w = generate_world(small_world(9));
  TrainConfig cfg;
  cfg.supervision = SupervisionMode::GtOracle;
  const MilResult gt = run_mil(w.train, 0, cfg);
  for (const auto& [id, p] : gt.state.selected) CHECK(p == kGroundTruthId);

  cfg.supervision = SupervisionMode::BestIouOracle;
  const MilResult best = run_mil(w.train, 0, cfg);
  for (std::size_t i = 0; i < best.candidates.size(); ++i) {
    const VideoRecord& v = w.train.videos[best.candidates[i].video];
    const double chosen = best_tube_iou(v.proposals[best.candidates[i].local[best.choice[i]]].tube, v.gt_tubes);
    for (const Proposal& p : v.proposals) CHECK(best_tube_iou(p.tube, v.gt_tubes) <= chosen);
  }
}

namespace {

double mean_selected_iou(const Dataset& d, const MilResult& r) {
  double sum = 0.0;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const VideoRecord& v = d.videos[r.candidates[i].video];
    sum += best_tube_iou(v.proposals[r.candidates[i].local[r.choice[i]]].tube, v.gt_tubes);
  }
  return sum / static_cast<double>(r.candidates.size());
}

}  // namespace

TEST_CASE("Points mining finds near-best proposals and beats label-only mining") {
  double points_sum = 0.0, label_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const World w = generate_world(small_world(seed));
    TrainConfig cfg;
    cfg.seed = seed;
    for (int action = 0; action < 3; ++action) {
      cfg.supervision = SupervisionMode::Points;
      const MilResult p = run_mil(w.train, action, cfg);
      double best = 0.0;
      for (const auto& set : p.candidates) {
        best += best_proposal_ious(w.train.videos[set.video]).front();
      }
      best /= static_cast<double>(p.candidates.size());
      const double got = mean_selected_iou(w.train, p);
      CHECK(got >= 0.9 * best);
      points_sum += got;

      cfg.supervision = SupervisionMode::LabelOnly;
      label_sum += mean_selected_iou(w.train, run_mil(w.train, action, cfg));
    }
  }
  CHECK(points_sum >= label_sum);
}
