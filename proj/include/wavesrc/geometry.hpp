#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

namespace wavesrc {

struct Point3 {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  friend constexpr Point3 operator+(Point3 a, Point3 b) { return {a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3}; }
  friend constexpr Point3 operator-(Point3 a, Point3 b) { return {a.x1 - b.x1, a.x2 - b.x2, a.x3 - b.x3}; }
  friend constexpr Point3 operator*(double s, Point3 a) { return {s * a.x1, s * a.x2, s * a.x3}; }
  friend constexpr Point3 operator*(Point3 a, double s) { return s * a; }
  friend constexpr Point3 operator/(Point3 a, double s) { return {a.x1 / s, a.x2 / s, a.x3 / s}; }
  friend constexpr bool operator==(const Point3&, const Point3&) = default;
};

constexpr double dot(Point3 a, Point3 b) { return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3; }
constexpr Point3 cross(Point3 a, Point3 b) {
  return {a.x2 * b.x3 - a.x3 * b.x2, a.x3 * b.x1 - a.x1 * b.x3, a.x1 * b.x2 - a.x2 * b.x1};
}
inline double norm(Point3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Point3 a, Point3 b) { return norm(a - b); }
inline bool is_finite(Point3 p) { return std::isfinite(p.x1) && std::isfinite(p.x2) && std::isfinite(p.x3); }

struct Vec2 {
  double u = 0.0;
  double v = 0.0;
};

// Orthonormal frame of an affine plane: points are origin + a*u + b*v.
struct PlaneFrame {
  Point3 origin{};
  Point3 u{1.0, 0.0, 0.0};
  Point3 v{0.0, 1.0, 0.0};

  Point3 normal() const { return cross(u, v); }
  Point3 to_world(Vec2 p) const { return origin + p.u * u + p.v * v; }
  Vec2 to_local(Point3 p) const { return {dot(p - origin, u), dot(p - origin, v)}; }
  double height(Point3 p) const { return dot(p - origin, normal()); }

  // Gram-Schmidt on the two directions; throws if they are parallel.
  static PlaneFrame from_directions(Point3 origin, Point3 u, Point3 v);
  static PlaneFrame x1x2(double x3 = 0.0) { return {{0.0, 0.0, x3}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}; }
};

struct PointSource {
  Point3 position;
  double intensity = 1.0;
};

// Atomic sources with per-point intensities.
struct PointSet {
  std::vector<PointSource> sources;
};

struct Segment {
  Point3 a;
  Point3 b;
};

// Parametric curve zeta -> fn(zeta) on [z0, z1], held as a dense sample whose
// adjacent spacing bounds the distance-query error.
class ParamCurve {
 public:
  using Fn = std::function<Point3(double)>;

  ParamCurve(Fn fn, double z0, double z1, std::size_t intervals);
  // Picks the interval count by doubling until every chord is <= spacing.
  static ParamCurve with_spacing(Fn fn, double z0, double z1, double spacing);

  Point3 at(double zeta) const { return fn_(zeta); }
  double z0() const { return z0_; }
  double z1() const { return z1_; }
  const std::vector<Point3>& samples() const { return samples_; }
  double max_spacing() const { return max_spacing_; }
  double length() const;  // chord length of the dense sample

  // Nested uniform resampling; interval count is a power-of-two multiple of 16.
  std::vector<Point3> resample(double spacing) const;

 private:
  Fn fn_;
  double z0_;
  double z1_;
  std::vector<Point3> samples_;
  double max_spacing_ = 0.0;
};

// Simple polygon with coplanar vertices, exact distance queries.
class PlanarPolygon {
 public:
  explicit PlanarPolygon(std::vector<Point3> vertices);

  const std::vector<Point3>& vertices() const { return vertices_; }
  const PlaneFrame& frame() const { return frame_; }
  const std::vector<Vec2>& local() const { return local_; }
  double area() const { return area_; }
  bool contains_local(Vec2 p) const;

 private:
  std::vector<Point3> vertices_;
  PlaneFrame frame_;
  std::vector<Vec2> local_;
  double area_ = 0.0;
};

// Planar region bounded by a closed, densely sampled curve in a plane frame.
class PlanarRegion {
 public:
  PlanarRegion(PlaneFrame frame, std::vector<Vec2> boundary);
  using Fn2 = std::function<Vec2(double)>;
  static PlanarRegion from_curve(PlaneFrame frame, const Fn2& boundary, double z0, double z1, double spacing);

  const PlaneFrame& frame() const { return frame_; }
  const std::vector<Vec2>& boundary() const { return boundary_; }
  double area() const { return area_; }
  bool contains_local(Vec2 p) const;  // even-odd rule on the sampled boundary

 private:
  PlaneFrame frame_;
  std::vector<Vec2> boundary_;
  double area_ = 0.0;
};

class ConvexPolyhedron {
 public:
  struct Face {
    std::vector<std::size_t> vertices;  // counter-clockwise seen from outside
    Point3 normal;                      // outward unit normal
    double offset = 0.0;                // normal . p == offset on the face plane
  };

  // Faces are recovered as the convex hull of the vertices.
  explicit ConvexPolyhedron(std::vector<Point3> vertices);
  ConvexPolyhedron(std::vector<Point3> vertices, std::vector<std::vector<std::size_t>> faces);

  const std::vector<Point3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<PlanarPolygon>& face_polygons() const { return face_polygons_; }
  double volume() const { return volume_; }
  bool contains(Point3 p, double tol = 1e-12) const;

 private:
  void finish();

  std::vector<Point3> vertices_;
  std::vector<Face> faces_;
  std::vector<PlanarPolygon> face_polygons_;
  double volume_ = 0.0;
};

using SupportShape = std::variant<PointSet, Segment, ParamCurve, PlanarPolygon, PlanarRegion, ConvexPolyhedron>;

// One connected piece of a source support. `intensity` is the constant tau of
// extended shapes; point sets carry their own per-point intensities.
struct SupportPart {
  SupportShape shape;
  double intensity = 1.0;
};

// Union of support parts. Validated on construction.
class SourceSupport {
 public:
  explicit SourceSupport(std::vector<SupportPart> parts);
  SourceSupport(SupportShape shape, double intensity = 1.0);

  const std::vector<SupportPart>& parts() const { return parts_; }

 private:
  std::vector<SupportPart> parts_;
};

struct NearestPoint {
  double distance = 0.0;
  Point3 nearest;
};

struct QuadratureSet {
  std::vector<Point3> nodes;
  std::vector<double> weights;      // length, area or volume elements (1 for atoms)
  std::vector<double> intensities;  // tau at each node

  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
};

// Distance from x to the support and one closest point. Parts are scanned in
// order and, within a part, features in storage order (points, curve samples,
// polygon edges, polyhedron faces); the first feature attaining the minimum
// wins. Exact for point sets, segments, polygons and polyhedra; sample-based
// for curves and regions.
NearestPoint min_distance(const SourceSupport& support, Point3 x);
NearestPoint min_distance(const SupportShape& shape, Point3 x);

QuadratureSet quadrature(const SourceSupport& support, double target_spacing);

// Total length / area / volume; point sets contribute their point count.
double measure(const SourceSupport& support);

// Consistency check: distance(support, sensor) - c * (arrival - onset).
double control_residual(const SourceSupport& support, Point3 sensor, double arrival, double onset, double c);

double point_segment_distance(Point3 x, Point3 a, Point3 b, Point3* nearest = nullptr);

}  // namespace wavesrc
