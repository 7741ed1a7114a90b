#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace roep::geometry {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

double dot(const Point3& a, const Point3& b);
Point3 cross(const Point3& a, const Point3& b);
double norm(const Point3& a);
Point3 normalized(const Point3& a);

/// Ordered Small < Medium < Large.
enum class SizeCategory : int { Small = 0, Medium = 1, Large = 2 };

inline constexpr std::array<SizeCategory, 3> kAllCategories = {SizeCategory::Large, SizeCategory::Medium,
                                                               SizeCategory::Small};

std::string to_string(SizeCategory category);
SizeCategory parse_category(const std::string& text);

struct ObjectSpec {
  int id = -1;  // position in the catalog; doubles as the observation identity slot
  std::string name;
  SizeCategory category = SizeCategory::Small;
  double width_cm = 0.0;
  double depth_cm = 0.0;
  double height_cm = 0.0;

  /// Throws std::invalid_argument when a dimension is non-positive or the
  /// height falls outside the category bounds.
  void validate() const;
  /// Half of the footprint diagonal, in meters.
  double footprint_radius() const;
};

struct PlacedObject {
  ObjectSpec spec;
  Point3 center;  // footprint center on the table surface
  double yaw = 0.0;

  /// The 8 corners of the upright box, in meters.
  std::array<Point3, 8> corners() const;
  /// Center of the box volume.
  Point3 centroid() const;
};

/// Table and camera ring dimensions in meters.
struct SceneLayout {
  double table_radius = 0.5;
  double table_height = 0.75;
  double ring_radius = 1.2;
  double ring_height = 1.1;

  void validate() const;

  friend bool operator==(const SceneLayout&, const SceneLayout&) = default;
};

inline constexpr int kViewpointCount = 12;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kViewpointStep = kPi / 6.0;  // 30 degrees

/// Camera slot on the ring; index increases counterclockwise seen from above.
class Viewpoint {
public:
  constexpr Viewpoint() = default;
  constexpr explicit Viewpoint(int index) : index_(((index % kViewpointCount) + kViewpointCount) % kViewpointCount) {}

  constexpr int index() const { return index_; }
  double azimuth() const { return index_ * kViewpointStep; }

  /// Clockwise step (circle_left).
  constexpr Viewpoint left() const { return Viewpoint(index_ - 1); }
  /// Counterclockwise step (circle_right).
  constexpr Viewpoint right() const { return Viewpoint(index_ + 1); }

  friend constexpr bool operator==(Viewpoint, Viewpoint) = default;

private:
  int index_ = 0;
};

struct CameraPose {
  Point3 position;
  Point3 gaze;  // unit vector toward the table center
};

CameraPose camera_pose(Viewpoint viewpoint, const SceneLayout& layout);

enum class OcclusionLevel : int { NotOccluded = 0, PartiallyOccluded = 1, FullyOccluded = 2 };

std::string to_string(OcclusionLevel level);

/// How much of `target` is hidden behind `occluder` when seen from `camera`.
/// Silhouettes are the perspective projections of the box corners' convex
/// hulls; the occluder must also be the nearer of the two along the shared
/// sight lines.
OcclusionLevel occlusion_level(const Point3& camera, const PlacedObject& occluder, const PlacedObject& target);

struct Sighting {
  std::size_t index = 0;         // into the input object list
  double apparent_height = 0.0;  // radians
  double bearing = 0.0;          // radians, positive to the left of the gaze
};

/// Objects that are not fully occluded by another object, sorted by bearing.
std::vector<Sighting> visible_set(Viewpoint viewpoint, std::span<const PlacedObject> objects,
                                  const SceneLayout& layout);

/// Whether the object footprint lies completely inside the table disc.
bool footprint_inside_table(const PlacedObject& object, const SceneLayout& layout);

/// Conservative overlap test on the footprint circumcircles.
bool footprints_overlap(const PlacedObject& a, const PlacedObject& b, double clearance = 0.0);

// 2-D helpers for convex polygons; exposed for testing.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

std::vector<Point2> convex_hull(std::vector<Point2> points);
double polygon_area(std::span<const Point2> polygon);
/// Intersection of two counterclockwise convex polygons.
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip);
bool contains_point(std::span<const Point2> polygon, Point2 p, double tolerance = 1e-12);

/// Entry distance of the ray origin + s*direction into the box, or a negative
/// value when the ray misses.
double ray_box_entry(const Point3& origin, const Point3& direction, const PlacedObject& box);

}  // namespace roep::geometry
