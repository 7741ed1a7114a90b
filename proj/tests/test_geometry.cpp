#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "roep/geometry.hpp"

using namespace roep;
using namespace roep::geometry;
using roep::testing::place;
using roep::testing::spec_named;

namespace {

const SceneLayout kLayout{};

void expect_point_near(const Point3& a, const Point3& b, double tol = 1e-12) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(CameraPose, AxisAlignedViewpoints) {
  expect_point_near(camera_pose(Viewpoint(0), kLayout).position, {1.2, 0.0, 1.1});
  expect_point_near(camera_pose(Viewpoint(6), kLayout).position, {-1.2, 0.0, 1.1});
  expect_point_near(camera_pose(Viewpoint(3), kLayout).position, {0.0, 1.2, 1.1});
}

TEST(CameraPose, GazePointsAtTableCenter) {
  for (int i = 0; i < kViewpointCount; ++i) {
    const auto pose = camera_pose(Viewpoint(i), kLayout);
    EXPECT_NEAR(norm(pose.gaze), 1.0, 1e-12);
    const Point3 to_center = normalized(Point3{0.0, 0.0, kLayout.table_height} - pose.position);
    expect_point_near(pose.gaze, to_center);
  }
}

TEST(CameraPose, IndexIsTakenModuloTwelve) {
  for (int i = -30; i < 30; ++i) {
    const int wrapped = ((i % 12) + 12) % 12;
    EXPECT_EQ(camera_pose(Viewpoint(i), kLayout).position, camera_pose(Viewpoint(wrapped), kLayout).position);
  }
}

TEST(Viewpoint, LeftAndRightAreInverses) {
  for (int i = 0; i < kViewpointCount; ++i) {
    const Viewpoint v(i);
    EXPECT_EQ(v.left().right(), v);
    EXPECT_EQ(v.right().left(), v);
  }
  EXPECT_EQ(Viewpoint(0).left().index(), 11);
  EXPECT_EQ(Viewpoint(11).right().index(), 0);
}

TEST(Viewpoint, TwelveStepsCloseTheRing) {
  Viewpoint v(0);
  for (int i = 0; i < kViewpointCount; ++i) v = v.left();
  EXPECT_EQ(v.index(), 0);
}

TEST(ObjectSpec, CategoryHeightBounds) {
  ObjectSpec ok{0, "box", SizeCategory::Large, 10, 10, 21};
  EXPECT_NO_THROW(ok.validate());
  ObjectSpec short_large{0, "box", SizeCategory::Large, 10, 10, 20};
  EXPECT_THROW(short_large.validate(), std::invalid_argument);
  ObjectSpec tall_medium{0, "box", SizeCategory::Medium, 10, 10, 15};
  EXPECT_THROW(tall_medium.validate(), std::invalid_argument);
  ObjectSpec tiny_medium{0, "box", SizeCategory::Medium, 10, 10, 4};
  EXPECT_THROW(tiny_medium.validate(), std::invalid_argument);
  ObjectSpec tall_small{0, "box", SizeCategory::Small, 1, 1, 3.5};
  EXPECT_THROW(tall_small.validate(), std::invalid_argument);
  ObjectSpec flat{0, "box", SizeCategory::Small, 0, 1, 1};
  EXPECT_THROW(flat.validate(), std::invalid_argument);
}

TEST(Occlusion, TargetBehindLargeOccluderIsFullyOccluded) {
  const Point3 camera = camera_pose(Viewpoint(0), kLayout).position;
  const auto occluder = place(spec_named("cracker_box"), 0.1, 0.0, kPi / 2);
  const auto target = place(spec_named("dice"), -0.15, 0.0, 0.0);
  EXPECT_EQ(occlusion_level(camera, occluder, target), OcclusionLevel::FullyOccluded);
  // The nearer-object condition makes the relation asymmetric.
  EXPECT_NE(occlusion_level(camera, target, occluder), OcclusionLevel::FullyOccluded);
}

TEST(Occlusion, ObjectsNinetyDegreesApartAreNotOccluded) {
  const Point3 camera = camera_pose(Viewpoint(0), kLayout).position;
  const auto a = place(spec_named("pitcher"), 0.0, 0.3, 0.0);
  const auto b = place(spec_named("apple"), 0.0, -0.3, 0.0);
  EXPECT_EQ(occlusion_level(camera, a, b), OcclusionLevel::NotOccluded);
  EXPECT_EQ(occlusion_level(camera, b, a), OcclusionLevel::NotOccluded);
}

TEST(Occlusion, HalfProtrudingObjectIsPartiallyOccluded) {
  const Point3 camera = camera_pose(Viewpoint(0), kLayout).position;
  const auto occluder = place(spec_named("cracker_box"), 0.1, 0.0, kPi / 2);
  const auto target = place(spec_named("apple"), -0.1, 0.09, 0.0);
  EXPECT_EQ(occlusion_level(camera, occluder, target), OcclusionLevel::PartiallyOccluded);
  Rng rng(7);
  EXPECT_EQ(roep::testing::ray_oracle(camera, occluder, target, rng), OcclusionLevel::PartiallyOccluded);
}

TEST(Occlusion, OccluderBehindTargetDoesNotOcclude) {
  const Point3 camera = camera_pose(Viewpoint(0), kLayout).position;
  const auto near = place(spec_named("dice"), 0.2, 0.0, 0.0);
  const auto far = place(spec_named("cracker_box"), -0.1, 0.0, kPi / 2);
  EXPECT_EQ(occlusion_level(camera, far, near), OcclusionLevel::NotOccluded);
}

TEST(Occlusion, DegenerateObjectThrows) {
  const Point3 camera = camera_pose(Viewpoint(0), kLayout).position;
  auto flat_spec = spec_named("card");
  flat_spec.height_cm = 0.0;
  const auto flat = place(flat_spec, 0.0, 0.0, 0.0);
  const auto box = place(spec_named("cracker_box"), 0.2, 0.0, 0.0);
  EXPECT_THROW(occlusion_level(camera, box, flat), std::invalid_argument);
}

TEST(Occlusion, AgreesWithRayOracleOnRandomConfigurations) {
  Rng rng(11);
  const auto& catalog = scene::Catalog::builtin();
  int agree = 0;
  int total = 0;
  while (total < 500) {
    const auto& a = catalog.at(static_cast<int>(rng.index(catalog.size())));
    const auto& b = catalog.at(static_cast<int>(rng.index(catalog.size())));
    const auto pa = place(a, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0, kPi));
    const auto pb = place(b, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0, kPi));
    if (footprints_overlap(pa, pb)) continue;
    const Point3 camera = camera_pose(Viewpoint(static_cast<int>(rng.index(12))), kLayout).position;
    agree += occlusion_level(camera, pa, pb) == roep::testing::ray_oracle(camera, pa, pb, rng, 500) ? 1 : 0;
    ++total;
  }
  EXPECT_GE(agree, 495);
}

TEST(VisibleSet, LoneObjectIsAlwaysVisible) {
  const std::vector<PlacedObject> scene{place(spec_named("marble"), 0.1, -0.2, 0.3)};
  for (int i = 0; i < kViewpointCount; ++i) {
    const auto seen = visible_set(Viewpoint(i), scene, kLayout);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].index, 0u);
  }
}

TEST(VisibleSet, ApparentHeightAndBearing) {
  const std::vector<PlacedObject> scene{place(spec_named("wine"), 0.0, 0.0, 0.0)};
  const auto seen = visible_set(Viewpoint(0), scene, kLayout);
  ASSERT_EQ(seen.size(), 1u);
  const Point3 camera = camera_pose(Viewpoint(0), kLayout).position;
  const double d = norm(scene[0].centroid() - camera);
  EXPECT_NEAR(seen[0].apparent_height, 2.0 * std::atan(0.30 / (2.0 * d)), 1e-12);
  EXPECT_NEAR(seen[0].bearing, 0.0, 1e-12);
}

TEST(VisibleSet, SortedByBearingAndExcludesHiddenObjects) {
  // Viewpoint 0 looks along -x, so an object at +y is to the right (negative bearing).
  const std::vector<PlacedObject> apart{place(spec_named("apple"), 0.0, 0.3, 0.0),
                                        place(spec_named("mug"), 0.0, -0.3, 0.0)};
  const auto seen = visible_set(Viewpoint(0), apart, kLayout);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_LT(seen[0].bearing, seen[1].bearing);
  EXPECT_EQ(seen[0].index, 0u);
  EXPECT_LT(seen[0].bearing, 0.0);

  const std::vector<PlacedObject> hidden{place(spec_named("cracker_box"), 0.1, 0.0, kPi / 2),
                                         place(spec_named("dice"), -0.15, 0.0, 0.0)};
  EXPECT_EQ(visible_set(Viewpoint(0), hidden, kLayout).size(), 1u);
  int both_seen = 0;
  for (int i = 0; i < kViewpointCount; ++i) both_seen += visible_set(Viewpoint(i), hidden, kLayout).size() == 2;
  EXPECT_GT(both_seen, 0);
}

TEST(Polygon, HullAreaClipAndContainment) {
  const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  const auto hull = convex_hull(square);
  EXPECT_EQ(hull.size(), 4u);
  EXPECT_NEAR(polygon_area(hull), 1.0, 1e-12);
  const std::vector<Point2> shifted{{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}};
  EXPECT_NEAR(polygon_area(clip_convex(hull, shifted)), 0.25, 1e-12);
  EXPECT_TRUE(contains_point(hull, {0.2, 0.7}));
  EXPECT_FALSE(contains_point(hull, {1.2, 0.7}));
}

TEST(Ray, BoxEntryDistance) {
  const auto box = place(spec_named("cracker_box"), 0.0, 0.0, 0.0);
  const Point3 origin{1.0, 0.0, kLayout.table_height + 0.1};
  EXPECT_NEAR(ray_box_entry(origin, {-1.0, 0.0, 0.0}, box), 1.0 - 0.08, 1e-12);
  EXPECT_LT(ray_box_entry(origin, {1.0, 0.0, 0.0}, box), 0.0);
}

TEST(Table, FootprintContainment) {
  EXPECT_TRUE(footprint_inside_table(place(spec_named("apple"), 0.0, 0.0, 0.0), kLayout));
  EXPECT_FALSE(footprint_inside_table(place(spec_named("laptop"), 0.45, 0.0, 0.0), kLayout));
}
