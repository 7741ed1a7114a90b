#include "roep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roep::geometry {

double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

Point3 normalized(const Point3& a) {
  const double n = norm(a);
  if (!(n > 0.0)) {
    throw std::invalid_argument("normalized: zero-length vector");
  }
  return (1.0 / n) * a;
}

std::string to_string(SizeCategory category) {
  switch (category) {
    case SizeCategory::Large: return "Large";
    case SizeCategory::Medium: return "Medium";
    case SizeCategory::Small: return "Small";
  }
  return "?";
}

SizeCategory parse_category(const std::string& text) {
  if (text == "Large") return SizeCategory::Large;
  if (text == "Medium") return SizeCategory::Medium;
  if (text == "Small") return SizeCategory::Small;
  throw std::invalid_argument("unknown size category '" + text + "'");
}

void ObjectSpec::validate() const {
  if (!(width_cm > 0.0 && depth_cm > 0.0 && height_cm > 0.0) || !std::isfinite(width_cm) ||
      !std::isfinite(depth_cm) || !std::isfinite(height_cm)) {
    throw std::invalid_argument("object '" + name + "' has a degenerate size");
  }
  bool ok = true;
  switch (category) {
    case SizeCategory::Large: ok = height_cm >= 21.0; break;
    case SizeCategory::Medium: ok = height_cm >= 5.0 && height_cm <= 14.0; break;
    case SizeCategory::Small: ok = height_cm <= 3.0; break;
  }
  if (!ok) {
    throw std::invalid_argument("object '" + name + "' height is outside the " + to_string(category) + " bounds");
  }
}

double ObjectSpec::footprint_radius() const {
  return 0.5 * std::hypot(width_cm, depth_cm) / 100.0;
}

std::array<Point3, 8> PlacedObject::corners() const {
  const double hw = 0.5 * spec.width_cm / 100.0;
  const double hd = 0.5 * spec.depth_cm / 100.0;
  const double h = spec.height_cm / 100.0;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  std::array<Point3, 8> out{};
  std::size_t k = 0;
  for (double z : {0.0, h}) {
    for (double lx : {-hw, hw}) {
      for (double ly : {-hd, hd}) {
        out[k++] = {center.x + c * lx - s * ly, center.y + s * lx + c * ly, center.z + z};
      }
    }
  }
  return out;
}

Point3 PlacedObject::centroid() const {
  return {center.x, center.y, center.z + 0.5 * spec.height_cm / 100.0};
}

void SceneLayout::validate() const {
  if (!(table_radius > 0.0) || !(ring_radius > table_radius)) {
    throw std::invalid_argument("scene layout: ring radius must exceed the table radius");
  }
}

CameraPose camera_pose(Viewpoint viewpoint, const SceneLayout& layout) {
  const double a = viewpoint.azimuth();
  CameraPose pose;
  pose.position = {layout.ring_radius * std::cos(a), layout.ring_radius * std::sin(a), layout.ring_height};
  pose.gaze = normalized(Point3{0.0, 0.0, layout.table_height} - pose.position);
  return pose;
}

std::string to_string(OcclusionLevel level) {
  switch (level) {
    case OcclusionLevel::NotOccluded: return "NotOccluded";
    case OcclusionLevel::PartiallyOccluded: return "PartiallyOccluded";
    case OcclusionLevel::FullyOccluded: return "FullyOccluded";
  }
  return "?";
}

namespace {

double cross2(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Pinhole projection onto the plane at unit distance along `forward`.
struct Projector {
  Point3 origin;
  Point3 forward;
  Point3 right;
  Point3 up;

  Projector(const Point3& camera, const Point3& look) : origin(camera), forward(normalized(look)) {
    Point3 r = cross(forward, Point3{0.0, 0.0, 1.0});
    if (norm(r) < 1e-12) {
      r = cross(forward, Point3{1.0, 0.0, 0.0});
    }
    right = normalized(r);
    up = cross(right, forward);
  }

  Point2 project(const Point3& p) const {
    const Point3 q = p - origin;
    const double depth = dot(q, forward);
    if (!(depth > 0.0)) {
      throw std::invalid_argument("occlusion: object behind the camera");
    }
    return {dot(q, right) / depth, dot(q, up) / depth};
  }

  Point3 ray(Point2 image) const {
    return forward + image.x * right + image.y * up;
  }
};

std::vector<Point2> silhouette(const Projector& projector, const PlacedObject& object) {
  std::vector<Point2> pts;
  pts.reserve(8);
  for (const auto& c : object.corners()) {
    pts.push_back(projector.project(c));
  }
  return convex_hull(std::move(pts));
}

}  // namespace

std::vector<Point2> convex_hull(std::vector<Point2> points) {
  std::sort(points.begin(), points.end(),
            [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (points.size() < 3) {
    return points;
  }
  std::vector<Point2> hull(2 * points.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(std::span<const Point2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[(i + 1) % polygon.size()];
    twice += a.x * b.y - a.y * b.x;
  }
  return 0.5 * twice;
}

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
  std::vector<Point2> output(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 b = clip[(e + 1) % clip.size()];
    std::vector<Point2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point2 p = input[i];
      const Point2 q = input[(i + 1) % input.size()];
      const double sp = cross2(a, b, p);
      const double sq = cross2(a, b, q);
      if (sp >= 0.0) output.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        output.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
  }
  return output;
}

bool contains_point(std::span<const Point2> polygon, Point2 p, double tolerance) {
  if (polygon.size() < 3) return false;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    if (cross2(polygon[i], polygon[(i + 1) % polygon.size()], p) < -tolerance) {
      return false;
    }
  }
  return true;
}

double ray_box_entry(const Point3& origin, const Point3& direction, const PlacedObject& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Point3 rel = origin - box.center;
  // Rotate into the box frame (inverse yaw).
  const std::array<double, 3> o = {c * rel.x + s * rel.y, -s * rel.x + c * rel.y, rel.z};
  const std::array<double, 3> d = {c * direction.x + s * direction.y, -s * direction.x + c * direction.y,
                                   direction.z};
  const std::array<double, 3> lo = {-0.5 * box.spec.width_cm / 100.0, -0.5 * box.spec.depth_cm / 100.0, 0.0};
  const std::array<double, 3> hi = {0.5 * box.spec.width_cm / 100.0, 0.5 * box.spec.depth_cm / 100.0,
                                    box.spec.height_cm / 100.0};
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return -1.0;
      continue;
    }
    double t1 = (lo[axis] - o[axis]) / d[axis];
    double t2 = (hi[axis] - o[axis]) / d[axis];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
  }
  if (tmax < std::max(tmin, 0.0)) return -1.0;
  return std::max(tmin, 0.0);
}

OcclusionLevel occlusion_level(const Point3& camera, const PlacedObject& occluder, const PlacedObject& target) {
  occluder.spec.validate();
  target.spec.validate();

  // Any projection plane in front of both objects gives the same containment
  // answer; aim it between the two objects.
  const Point3 mid = 0.5 * (occluder.centroid() + target.centroid());
  const Projector projector(camera, mid - camera);
  const auto occluder_hull = silhouette(projector, occluder);
  const auto target_hull = silhouette(projector, target);

  const auto overlap = clip_convex(target_hull, occluder_hull);
  if (overlap.size() < 3 || polygon_area(overlap) <= 1e-12 * polygon_area(target_hull)) {
    return OcclusionLevel::NotOccluded;
  }

  Point2 probe{};
  for (const auto& p : overlap) {
    probe.x += p.x;
    probe.y += p.y;
  }
  probe.x /= static_cast<double>(overlap.size());
  probe.y /= static_cast<double>(overlap.size());
  const Point3 ray = projector.ray(probe);
  const double t_occluder = ray_box_entry(camera, ray, occluder);
  const double t_target = ray_box_entry(camera, ray, target);
  const bool occluder_nearer =
      (t_occluder >= 0.0 && t_target >= 0.0)
          ? t_occluder < t_target
          : norm(occluder.centroid() - camera) < norm(target.centroid() - camera);
  if (!occluder_nearer) {
    return OcclusionLevel::NotOccluded;
  }

  for (const auto& p : target_hull) {
    if (!contains_point(occluder_hull, p)) {
      return OcclusionLevel::PartiallyOccluded;
    }
  }
  return OcclusionLevel::FullyOccluded;
}

std::vector<Sighting> visible_set(Viewpoint viewpoint, std::span<const PlacedObject> objects,
                                  const SceneLayout& layout) {
  const CameraPose pose = camera_pose(viewpoint, layout);
  std::vector<Sighting> out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    bool hidden = false;
    for (std::size_t j = 0; j < objects.size() && !hidden; ++j) {
      hidden = j != i && occlusion_level(pose.position, objects[j], objects[i]) == OcclusionLevel::FullyOccluded;
    }
    if (hidden) continue;
    const Point3 to_object = objects[i].centroid() - pose.position;
    const double distance = norm(to_object);
    Sighting s;
    s.index = i;
    s.apparent_height = 2.0 * std::atan(objects[i].spec.height_cm / 100.0 / (2.0 * distance));
    s.bearing = std::atan2(pose.gaze.x * to_object.y - pose.gaze.y * to_object.x,
                           pose.gaze.x * to_object.x + pose.gaze.y * to_object.y);
    out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [](const Sighting& a, const Sighting& b) { return a.bearing < b.bearing; });
  return out;
}

bool footprint_inside_table(const PlacedObject& object, const SceneLayout& layout) {
  const auto corners = object.corners();
  for (std::size_t k = 0; k < 4; ++k) {
    const Point3& c = corners[k];
    if (std::hypot(c.x, c.y) > layout.table_radius) return false;
  }
  return true;
}

bool footprints_overlap(const PlacedObject& a, const PlacedObject& b, double clearance) {
  const double d = std::hypot(a.center.x - b.center.x, a.center.y - b.center.y);
  return d < a.spec.footprint_radius() + b.spec.footprint_radius() + clearance;
}

}  // namespace roep::geometry
