#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pointmine/error.hpp"
#include "pointmine/geometry.hpp"
#include "pointmine/rng.hpp"

using namespace pointmine;

TEST_CASE("box_center") {
  CHECK(box_center({0, 0, 100, 100}) == Vec2{50, 50});
  CHECK(box_center({10, 20, 40, 60}) == Vec2{30, 50});
  CHECK(box_center({0, 0, 1, 1}) == Vec2{0.5, 0.5});
}

TEST_CASE("max_center_to_edge matches dense boundary sampling") {
  CHECK(max_center_to_edge({0, 0, 100, 100}) == doctest::Approx(70.7107).epsilon(1e-6));
  CHECK(max_center_to_edge({0, 0, 6, 8}) == doctest::Approx(5.0));
  CHECK(max_center_to_edge({0, 0, 2, 0.0001}) == doctest::Approx(1.0).epsilon(1e-6));

  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const BoundingBox b{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0.5, 80),
                        rng.uniform(0.5, 80)};
    const double oracle = oracle::max_boundary_distance(b, 4000);
    CHECK(max_center_to_edge(b) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(max_center_to_edge(b) >= std::max(b.w, b.h) / 2);
  }
}

TEST_CASE("point_in_box is boundary inclusive") {
  const BoundingBox b{0, 0, 100, 100};
  CHECK(point_in_box(50, 50, b));
  CHECK(point_in_box(100, 50, b));
  CHECK(point_in_box(0, 0, b));
  CHECK_FALSE(point_in_box(101, 50, b));
  CHECK_FALSE(point_in_box(50, -0.001, b));
}

TEST_CASE("frame_iou examples") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(frame_iou(a, a) == 1.0);
  CHECK(frame_iou(a, {20, 20, 5, 5}) == 0.0);
  CHECK(frame_iou(a, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(frame_iou(a, {10, 0, 10, 10}) == 0.0);
}

TEST_CASE("frame_iou matches grid rasterization on integer boxes") {
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    const auto a = oracle::random_int_box(rng, 40);
    const auto b = oracle::random_int_box(rng, 40);
    const double expected = oracle::raster_iou(a, b);
    CHECK(std::abs(frame_iou(a, b) - expected) <= 1e-9);
    CHECK(frame_iou(a, b) == frame_iou(b, a));
  }
}

TEST_CASE("frame_iou properties") {
  Rng rng(29);
  for (int i = 0; i < 500; ++i) {
    const BoundingBox a{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 50), rng.uniform(1, 50)};
    const BoundingBox b{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 50), rng.uniform(1, 50)};
    const double v = frame_iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == frame_iou(b, a));
    CHECK(v < 1.0);
  }
}

TEST_CASE("tube_iou examples") {
  const BoundingBox box{0, 0, 10, 10};
  const Tube b{1, {box, box}};
  const Tube p{1, {box, box, box, box}};
  CHECK(tube_iou(b, b) == 1.0);
  CHECK(tube_iou(p, b) == doctest::Approx(0.5));
  CHECK(tube_iou(Tube{1, {box}}, Tube{5, {box}}) == 0.0);
}

TEST_CASE("tube_iou matches per-frame enumeration") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const Tube a = oracle::random_tube(rng, 30, 100.0);
    const Tube b = oracle::random_tube(rng, 30, 100.0);
    CHECK(tube_iou(a, b) == oracle::tube_iou_enumerated(a, b));
    CHECK(tube_iou(a, b) == tube_iou(b, a));
  }
}

TEST_CASE("tube_iou is invariant to uniform scaling") {
  Rng rng(37);
  for (int i = 0; i < 100; ++i) {
    const Tube a = oracle::random_tube(rng, 20, 100.0);
    const Tube b = oracle::random_tube(rng, 20, 100.0);
    const double k = rng.uniform(0.1, 10.0);
    CHECK(tube_iou(oracle::scaled(a, k), oracle::scaled(b, k)) ==
          doctest::Approx(tube_iou(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("best_tube_iou") {
  const Tube t{1, {{0, 0, 10, 10}}};
  CHECK(best_tube_iou(t, {}) == 0.0);
  CHECK(best_tube_iou(t, {Tube{1, {{5, 0, 10, 10}}}, t}) == 1.0);
}

TEST_CASE("box construction and clamping") {
  CHECK_THROWS_AS(BoundingBox::make(0, 0, 0, 5), InvalidInput);
  CHECK_THROWS_AS(BoundingBox::make(0, 0, 5, -1), InvalidInput);
  const auto c = BoundingBox::clamped(-10, -10, 30, 30, 100, 100);
  CHECK(c == BoundingBox{0, 0, 20, 20});
  const auto edge = BoundingBox::clamped(150, 50, 20, 20, 100, 100);
  CHECK(edge.w >= 1.0);
  CHECK(edge.right() <= 100.0);
  CHECK(edge.x >= 0.0);
}

TEST_CASE("validate_video rejects escaping geometry") {
  VideoRecord v;
  v.id = "v";
  v.n_frames = 5;
  v.frame_w = 100;
  v.frame_h = 100;
  v.gt_tubes.push_back(Tube{1, {{0, 0, 10, 10}}});
  CHECK_NOTHROW(validate_video(v));
  v.proposals.push_back(Proposal{0, Tube{5, {{0, 0, 10, 10}, {0, 0, 10, 10}}}});
  CHECK_THROWS_AS(validate_video(v), InvalidInput);
  v.proposals.clear();
  v.points.push_back(PointTrack{{{2, 5, 5}, {2, 6, 6}}});
  CHECK_THROWS_AS(validate_video(v), InvalidInput);
  v.points = {PointTrack{{{2, 5, 5}, {3, 150, 6}}}};
  CHECK_THROWS_AS(validate_video(v), InvalidInput);
}
