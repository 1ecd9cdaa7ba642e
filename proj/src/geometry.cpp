#include "wavesrc/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "wavesrc/errors.hpp"

namespace wavesrc {
namespace {

constexpr double kPlaneTol = 1e-9;
constexpr std::size_t kMaxIntervals = std::size_t{1} << 22;

double cross2(Vec2 o, Vec2 a, Vec2 b) { return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u); }

double signed_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    s += a.u * b.v - b.u * a.v;
  }
  return 0.5 * s;
}

bool even_odd_contains(const std::vector<Vec2>& poly, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.v > p.v) != (b.v > p.v)) {
      const double x = a.u + (p.v - a.v) * (b.u - a.u) / (b.v - a.v);
      if (p.u < x) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = cross2(q1, q2, p1);
  const double d2 = cross2(q1, q2, p2);
  const double d3 = cross2(p1, p2, q1);
  const double d4 = cross2(p1, p2, q2);
  if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
  auto on = [](Vec2 a, Vec2 b, Vec2 p, double d) {
    return d == 0 && std::min(a.u, b.u) <= p.u && p.u <= std::max(a.u, b.u) && std::min(a.v, b.v) <= p.v &&
           p.v <= std::max(a.v, b.v);
  };
  return on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4);
}

Point3 normalized(Point3 p) {
  const double n = norm(p);
  return p / n;
}

std::vector<Point3> sample_uniform(const ParamCurve::Fn& fn, double z0, double z1, std::size_t intervals) {
  std::vector<Point3> pts(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double z = (i == intervals) ? z1 : z0 + (z1 - z0) * static_cast<double>(i) / static_cast<double>(intervals);
    pts[i] = fn(z);
    if (!is_finite(pts[i])) throw ValidationError("curve evaluates to a non-finite point");
  }
  return pts;
}

double max_chord(const std::vector<Point3>& pts) {
  double m = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) m = std::max(m, distance(pts[i - 1], pts[i]));
  return m;
}

std::vector<Point3> sample_to_spacing(const ParamCurve::Fn& fn, double z0, double z1, double spacing) {
  if (!(spacing > 0.0)) throw ValidationError("sample spacing must be positive");
  for (std::size_t n = 16; n <= kMaxIntervals; n *= 2) {
    auto pts = sample_uniform(fn, z0, z1, n);
    if (max_chord(pts) <= spacing) return pts;
  }
  throw ValidationError("curve cannot be sampled at the requested spacing");
}

// Ear clipping on a counter-clockwise simple polygon.
std::vector<std::array<Vec2, 3>> triangulate(std::vector<Vec2> poly) {
  if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  std::vector<std::size_t> idx(poly.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<Vec2, 3>> tris;
  std::size_t guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Vec2 a = poly[idx[(k + idx.size() - 1) % idx.size()]];
      const Vec2 b = poly[idx[k]];
      const Vec2 c = poly[idx[(k + 1) % idx.size()]];
      if (cross2(a, b, c) <= 0) continue;
      bool empty = true;
      for (std::size_t m = 0; m < idx.size() && empty; ++m) {
        const Vec2 p = poly[idx[m]];
        if (m == k || m == (k + 1) % idx.size() || m == (k + idx.size() - 1) % idx.size()) continue;
        if (cross2(a, b, p) >= 0 && cross2(b, c, p) >= 0 && cross2(c, a, p) >= 0) empty = false;
      }
      if (!empty) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > poly.size() * poly.size()) throw ValidationError("polygon triangulation failed");
  }
  tris.push_back({poly[idx[0]], poly[idx[1]], poly[idx[2]]});
  return tris;
}

NearestPoint nearest_in_polygon(const PlanarPolygon& poly, Point3 x) {
  const PlaneFrame& f = poly.frame();
  const Vec2 p = f.to_local(x);
  if (poly.contains_local(p)) return {std::abs(f.height(x)), f.to_world(p)};
  NearestPoint best{std::numeric_limits<double>::infinity(), {}};
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    Point3 q;
    const double d = point_segment_distance(x, v[i], v[(i + 1) % v.size()], &q);
    if (d < best.distance) best = {d, q};
  }
  return best;
}

void trapezoid_chords(const std::vector<Point3>& pts, double tau, QuadratureSet& q) {
  const std::size_t base = q.nodes.size();
  q.nodes.insert(q.nodes.end(), pts.begin(), pts.end());
  q.weights.resize(base + pts.size(), 0.0);
  q.intensities.resize(base + pts.size(), tau);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double h = distance(pts[i - 1], pts[i]);
    q.weights[base + i - 1] += 0.5 * h;
    q.weights[base + i] += 0.5 * h;
  }
}

// Cell-centred lattice restricted to the interior, rescaled to the exact measure.
void rescale_tail(QuadratureSet& q, std::size_t base, double exact) {
  double sum = 0.0;
  for (std::size_t i = base; i < q.weights.size(); ++i) sum += q.weights[i];
  if (sum <= 0.0) return;
  const double s = exact / sum;
  for (std::size_t i = base; i < q.weights.size(); ++i) q.weights[i] *= s;
}

void region_quadrature(const PlanarRegion& region, double h, double tau, QuadratureSet& q) {
  const auto& b = region.boundary();
  double umin = b[0].u, umax = b[0].u, vmin = b[0].v, vmax = b[0].v;
  for (const Vec2& p : b) {
    umin = std::min(umin, p.u);
    umax = std::max(umax, p.u);
    vmin = std::min(vmin, p.v);
    vmax = std::max(vmax, p.v);
  }
  const std::size_t base = q.nodes.size();
  const auto rows = static_cast<std::size_t>(std::ceil((vmax - vmin) / h));
  std::vector<double> xs;
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = vmin + (static_cast<double>(r) + 0.5) * h;
    xs.clear();
    for (std::size_t i = 0, j = b.size() - 1; i < b.size(); j = i++) {
      if ((b[i].v > y) != (b[j].v > y)) xs.push_back(b[i].u + (y - b[i].v) * (b[j].u - b[i].u) / (b[j].v - b[i].v));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // cell centres umin + (c + 0.5) h inside (xs[k], xs[k+1])
      const double c0 = std::ceil((xs[k] - umin) / h - 0.5);
      const double c1 = std::floor((xs[k + 1] - umin) / h - 0.5);
      for (double c = std::max(0.0, c0); c <= c1; c += 1.0) {
        const double x = umin + (c + 0.5) * h;
        if (x <= xs[k] || x >= xs[k + 1]) continue;
        q.nodes.push_back(region.frame().to_world({x, y}));
        q.weights.push_back(h * h);
        q.intensities.push_back(tau);
      }
    }
  }
  if (q.nodes.size() == base) {
    Vec2 c{0.0, 0.0};
    for (const Vec2& p : b) c = {c.u + p.u, c.v + p.v};
    c = {c.u / static_cast<double>(b.size()), c.v / static_cast<double>(b.size())};
    q.nodes.push_back(region.frame().to_world(c));
    q.weights.push_back(region.area());
    q.intensities.push_back(tau);
  }
  rescale_tail(q, base, region.area());
}

void polygon_quadrature(const PlanarPolygon& poly, double h, double tau, QuadratureSet& q) {
  for (const auto& t : triangulate(poly.local())) {
    const double area = 0.5 * std::abs(cross2(t[0], t[1], t[2]));
    auto len = [](Vec2 a, Vec2 b) { return std::hypot(a.u - b.u, a.v - b.v); };
    const double edge = std::max({len(t[0], t[1]), len(t[1], t[2]), len(t[2], t[0])});
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(edge / h)));
    const double w = area / static_cast<double>(m * m);
    const double md = static_cast<double>(m);
    auto lattice = [&](double i, double j) {
      return Vec2{t[0].u + (i / md) * (t[1].u - t[0].u) + (j / md) * (t[2].u - t[0].u),
                  t[0].v + (i / md) * (t[1].v - t[0].v) + (j / md) * (t[2].v - t[0].v)};
    };
    auto emit = [&](Vec2 a, Vec2 b, Vec2 c) {
      q.nodes.push_back(poly.frame().to_world({(a.u + b.u + c.u) / 3.0, (a.v + b.v + c.v) / 3.0}));
      q.weights.push_back(w);
      q.intensities.push_back(tau);
    };
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; i + j < m; ++j) {
        const double di = static_cast<double>(i);
        const double dj = static_cast<double>(j);
        emit(lattice(di, dj), lattice(di + 1, dj), lattice(di, dj + 1));
        if (i + j + 2 <= m) emit(lattice(di + 1, dj), lattice(di + 1, dj + 1), lattice(di, dj + 1));
      }
    }
  }
}

void polyhedron_quadrature(const ConvexPolyhedron& poly, double h, double tau, QuadratureSet& q) {
  Point3 lo = poly.vertices()[0];
  Point3 hi = lo;
  for (const Point3& v : poly.vertices()) {
    lo = {std::min(lo.x1, v.x1), std::min(lo.x2, v.x2), std::min(lo.x3, v.x3)};
    hi = {std::max(hi.x1, v.x1), std::max(hi.x2, v.x2), std::max(hi.x3, v.x3)};
  }
  const std::size_t base = q.nodes.size();
  const auto n1 = static_cast<std::size_t>(std::ceil((hi.x1 - lo.x1) / h));
  const auto n2 = static_cast<std::size_t>(std::ceil((hi.x2 - lo.x2) / h));
  const auto n3 = static_cast<std::size_t>(std::ceil((hi.x3 - lo.x3) / h));
  for (std::size_t k = 0; k < n3; ++k)
    for (std::size_t j = 0; j < n2; ++j)
      for (std::size_t i = 0; i < n1; ++i) {
        const Point3 p{lo.x1 + (static_cast<double>(i) + 0.5) * h, lo.x2 + (static_cast<double>(j) + 0.5) * h,
                       lo.x3 + (static_cast<double>(k) + 0.5) * h};
        if (!poly.contains(p, 0.0)) continue;
        q.nodes.push_back(p);
        q.weights.push_back(h * h * h);
        q.intensities.push_back(tau);
      }
  if (q.nodes.size() == base) {
    Point3 c{};
    for (const Point3& v : poly.vertices()) c = c + v;
    q.nodes.push_back(c / static_cast<double>(poly.vertices().size()));
    q.weights.push_back(poly.volume());
    q.intensities.push_back(tau);
  }
  rescale_tail(q, base, poly.volume());
}

}  // namespace

PlaneFrame PlaneFrame::from_directions(Point3 origin, Point3 u, Point3 v) {
  if (!is_finite(origin) || !is_finite(u) || !is_finite(v)) throw ValidationError("plane frame must be finite");
  const double nu = norm(u);
  if (nu == 0.0) throw ValidationError("plane frame direction u is zero");
  const Point3 e1 = u / nu;
  const Point3 w = v - dot(v, e1) * e1;
  const double nw = norm(w);
  if (nw <= 1e-12 * std::max(1.0, norm(v))) throw ValidationError("plane frame directions are parallel");
  return {origin, e1, w / nw};
}

double point_segment_distance(Point3 x, Point3 a, Point3 b, Point3* nearest) {
  const Point3 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(x - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Point3 q = (t == 0.0) ? a : (t == 1.0 ? b : a + t * ab);
  if (nearest) *nearest = q;
  return distance(x, q);
}

// ---------------------------------------------------------------- ParamCurve

ParamCurve::ParamCurve(Fn fn, double z0, double z1, std::size_t intervals)
    : fn_(std::move(fn)), z0_(z0), z1_(z1) {
  if (!fn_) throw ValidationError("curve needs a coordinate function");
  if (!(std::isfinite(z0) && std::isfinite(z1) && z1 > z0)) throw ValidationError("curve parameter range is empty");
  if (intervals < 1) throw ValidationError("curve needs at least one interval");
  samples_ = sample_uniform(fn_, z0_, z1_, intervals);
  max_spacing_ = max_chord(samples_);
}

ParamCurve ParamCurve::with_spacing(Fn fn, double z0, double z1, double spacing) {
  if (!(std::isfinite(z0) && std::isfinite(z1) && z1 > z0)) throw ValidationError("curve parameter range is empty");
  auto pts = sample_to_spacing(fn, z0, z1, spacing);
  return ParamCurve(std::move(fn), z0, z1, pts.size() - 1);
}

double ParamCurve::length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < samples_.size(); ++i) s += distance(samples_[i - 1], samples_[i]);
  return s;
}

std::vector<Point3> ParamCurve::resample(double spacing) const { return sample_to_spacing(fn_, z0_, z1_, spacing); }

// ------------------------------------------------------------- PlanarPolygon

PlanarPolygon::PlanarPolygon(std::vector<Point3> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw ValidationError("polygon needs at least 3 vertices");
  for (const Point3& p : vertices_)
    if (!is_finite(p)) throw ValidationError("polygon vertex is not finite");
  // Newell normal
  Point3 nrm{};
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 a = vertices_[i];
    const Point3 b = vertices_[(i + 1) % n];
    nrm = nrm + Point3{(a.x2 - b.x2) * (a.x3 + b.x3), (a.x3 - b.x3) * (a.x1 + b.x1), (a.x1 - b.x1) * (a.x2 + b.x2)};
  }
  if (norm(nrm) <= 1e-14) throw ValidationError("polygon is degenerate");
  nrm = normalized(nrm);
  Point3 u{};
  for (std::size_t i = 1; i < n && norm(u) == 0.0; ++i) {
    const Point3 d = vertices_[i] - vertices_[0];
    u = d - dot(d, nrm) * nrm;
  }
  u = normalized(u);
  frame_ = {vertices_[0], u, cross(nrm, u)};
  local_.reserve(n);
  for (const Point3& p : vertices_) {
    if (std::abs(frame_.height(p)) > kPlaneTol) throw ValidationError("polygon vertices are not coplanar");
    local_.push_back(frame_.to_local(p));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(local_[i], local_[(i + 1) % n], local_[j], local_[(j + 1) % n]))
        throw ValidationError("polygon is not simple");
    }
    const Vec2 a = local_[i];
    const Vec2 b = local_[(i + 1) % n];
    if (a.u == b.u && a.v == b.v) throw ValidationError("polygon has repeated vertices");
  }
  area_ = std::abs(signed_area(local_));
}

bool PlanarPolygon::contains_local(Vec2 p) const { return even_odd_contains(local_, p); }

// -------------------------------------------------------------- PlanarRegion

PlanarRegion::PlanarRegion(PlaneFrame frame, std::vector<Vec2> boundary) : frame_(frame), boundary_(std::move(boundary)) {
  if (boundary_.size() >= 2) {
    const Vec2 a = boundary_.front();
    const Vec2 b = boundary_.back();
    if (std::hypot(a.u - b.u, a.v - b.v) <= 1e-12) boundary_.pop_back();
  }
  if (boundary_.size() < 3) throw ValidationError("region boundary needs at least 3 samples");
  area_ = std::abs(signed_area(boundary_));
  if (area_ <= 0.0) throw ValidationError("region boundary encloses no area");
}

PlanarRegion PlanarRegion::from_curve(PlaneFrame frame, const Fn2& boundary, double z0, double z1, double spacing) {
  auto lift = [&](double z) {
    const Vec2 p = boundary(z);
    return Point3{p.u, p.v, 0.0};
  };
  const auto pts = sample_to_spacing(lift, z0, z1, spacing);
  std::vector<Vec2> b;
  b.reserve(pts.size());
  for (const Point3& p : pts) b.push_back({p.x1, p.x2});
  return PlanarRegion(frame, std::move(b));
}

bool PlanarRegion::contains_local(Vec2 p) const { return even_odd_contains(boundary_, p); }

// ---------------------------------------------------------- ConvexPolyhedron

ConvexPolyhedron::ConvexPolyhedron(std::vector<Point3> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 4) throw ValidationError("polyhedron needs at least 4 vertices");
  double scale = 0.0;
  for (const Point3& p : vertices_) {
    if (!is_finite(p)) throw ValidationError("polyhedron vertex is not finite");
    scale = std::max(scale, norm(p - vertices_[0]));
  }
  const double tol = kPlaneTol * std::max(1.0, scale);
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        Point3 nrm = cross(vertices_[j] - vertices_[i], vertices_[k] - vertices_[i]);
        if (norm(nrm) <= 1e-12 * scale * scale) continue;
        nrm = normalized(nrm);
        bool below = true;
        bool above = true;
        std::vector<std::size_t> on;
        for (std::size_t m = 0; m < n; ++m) {
          const double d = dot(vertices_[m] - vertices_[i], nrm);
          if (d > tol) below = false;
          if (d < -tol) above = false;
          if (std::abs(d) <= tol) on.push_back(m);
        }
        if (!(below || above)) continue;
        if (!seen.insert(on).second) continue;
        if (!below) nrm = -1.0 * nrm;
        // order counter-clockwise around the outward normal
        Point3 c{};
        for (std::size_t m : on) c = c + vertices_[m];
        c = c / static_cast<double>(on.size());
        const Point3 e1 = normalized(vertices_[on[0]] - c);
        const Point3 e2 = cross(nrm, e1);
        std::sort(on.begin(), on.end(), [&](std::size_t a, std::size_t b) {
          const Point3 da = vertices_[a] - c;
          const Point3 db = vertices_[b] - c;
          return std::atan2(dot(da, e2), dot(da, e1)) < std::atan2(dot(db, e2), dot(db, e1));
        });
        faces_.push_back({on, nrm, dot(nrm, vertices_[i])});
      }
  finish();
}

ConvexPolyhedron::ConvexPolyhedron(std::vector<Point3> vertices, std::vector<std::vector<std::size_t>> faces)
    : vertices_(std::move(vertices)) {
  if (vertices_.size() < 4 || faces.size() < 4) throw ValidationError("polyhedron needs at least 4 vertices and faces");
  Point3 c{};
  for (const Point3& p : vertices_) c = c + p;
  c = c / static_cast<double>(vertices_.size());
  for (auto& f : faces) {
    if (f.size() < 3) throw ValidationError("polyhedron face needs at least 3 vertices");
    Point3 nrm{};
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] >= vertices_.size()) throw ValidationError("polyhedron face index out of range");
      const Point3 a = vertices_[f[i]];
      const Point3 b = vertices_[f[(i + 1) % f.size()]];
      nrm = nrm + Point3{(a.x2 - b.x2) * (a.x3 + b.x3), (a.x3 - b.x3) * (a.x1 + b.x1), (a.x1 - b.x1) * (a.x2 + b.x2)};
    }
    if (norm(nrm) == 0.0) throw ValidationError("polyhedron face is degenerate");
    nrm = normalized(nrm);
    double off = dot(nrm, vertices_[f[0]]);
    if (dot(nrm, c) > off) {
      nrm = -1.0 * nrm;
      off = -off;
      std::reverse(f.begin(), f.end());
    }
    faces_.push_back({f, nrm, off});
  }
  finish();
}

void ConvexPolyhedron::finish() {
  if (faces_.size() < 4) throw ValidationError("polyhedron is degenerate");
  for (const Face& f : faces_)
    for (const Point3& p : vertices_)
      if (dot(f.normal, p) - f.offset > kPlaneTol) throw ValidationError("polyhedron is not convex");
  Point3 c{};
  for (const Point3& p : vertices_) c = c + p;
  c = c / static_cast<double>(vertices_.size());
  volume_ = 0.0;
  face_polygons_.clear();
  for (const Face& f : faces_) {
    std::vector<Point3> pts;
    for (std::size_t i : f.vertices) pts.push_back(vertices_[i]);
    face_polygons_.emplace_back(pts);
    volume_ += face_polygons_.back().area() * (f.offset - dot(f.normal, c)) / 3.0;
  }
  if (volume_ <= 0.0) throw ValidationError("polyhedron has no volume");
}

bool ConvexPolyhedron::contains(Point3 p, double tol) const {
  for (const Face& f : faces_)
    if (dot(f.normal, p) - f.offset > tol) return false;
  return true;
}

// ------------------------------------------------------------- SourceSupport

SourceSupport::SourceSupport(std::vector<SupportPart> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw ValidationError("support is empty");
  for (const SupportPart& part : parts_) {
    if (!(part.intensity > 0.0) || !std::isfinite(part.intensity))
      throw ValidationError("support intensity must be positive");
    if (const auto* ps = std::get_if<PointSet>(&part.shape)) {
      if (ps->sources.empty()) throw ValidationError("point set is empty");
      for (std::size_t i = 0; i < ps->sources.size(); ++i) {
        const PointSource& s = ps->sources[i];
        if (!is_finite(s.position)) throw ValidationError("point source is not finite");
        if (!(s.intensity > 0.0) || !std::isfinite(s.intensity))
          throw ValidationError("point source intensity must be positive");
        for (std::size_t j = 0; j < i; ++j)
          if (ps->sources[j].position == s.position) throw ValidationError("point sources must be distinct");
      }
    } else if (const auto* seg = std::get_if<Segment>(&part.shape)) {
      if (!is_finite(seg->a) || !is_finite(seg->b)) throw ValidationError("segment end point is not finite");
      if (seg->a == seg->b) throw ValidationError("segment end points coincide");
    }
  }
}

SourceSupport::SourceSupport(SupportShape shape, double intensity)
    : SourceSupport(std::vector<SupportPart>{SupportPart{std::move(shape), intensity}}) {}

double QuadratureSet::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

NearestPoint min_distance(const SupportShape& shape, Point3 x) {
  struct Visitor {
    Point3 x;
    NearestPoint operator()(const PointSet& ps) const {
      NearestPoint best{std::numeric_limits<double>::infinity(), {}};
      for (const PointSource& s : ps.sources) {
        const double d = distance(x, s.position);
        if (d < best.distance) best = {d, s.position};
      }
      return best;
    }
    NearestPoint operator()(const Segment& s) const {
      Point3 q;
      const double d = point_segment_distance(x, s.a, s.b, &q);
      return {d, q};
    }
    NearestPoint operator()(const ParamCurve& c) const {
      NearestPoint best{std::numeric_limits<double>::infinity(), {}};
      for (const Point3& p : c.samples()) {
        const double d = distance(x, p);
        if (d < best.distance) best = {d, p};
      }
      return best;
    }
    NearestPoint operator()(const PlanarPolygon& p) const { return nearest_in_polygon(p, x); }
    NearestPoint operator()(const PlanarRegion& r) const {
      const PlaneFrame& f = r.frame();
      const Vec2 p = f.to_local(x);
      const double h = f.height(x);
      if (r.contains_local(p)) return {std::abs(h), f.to_world(p)};
      double best2 = std::numeric_limits<double>::infinity();
      Vec2 arg{};
      for (const Vec2& b : r.boundary()) {
        const double d2 = (b.u - p.u) * (b.u - p.u) + (b.v - p.v) * (b.v - p.v);
        if (d2 < best2) {
          best2 = d2;
          arg = b;
        }
      }
      return {std::sqrt(best2 + h * h), f.to_world(arg)};
    }
    NearestPoint operator()(const ConvexPolyhedron& poly) const {
      if (poly.contains(x)) return {0.0, x};
      NearestPoint best{std::numeric_limits<double>::infinity(), {}};
      for (const PlanarPolygon& face : poly.face_polygons()) {
        const NearestPoint np = nearest_in_polygon(face, x);
        if (np.distance < best.distance) best = np;
      }
      return best;
    }
  };
  return std::visit(Visitor{x}, shape);
}

NearestPoint min_distance(const SourceSupport& support, Point3 x) {
  if (support.parts().empty()) throw ValidationError("support is empty");
  NearestPoint best{std::numeric_limits<double>::infinity(), {}};
  for (const SupportPart& part : support.parts()) {
    const NearestPoint np = min_distance(part.shape, x);
    if (np.distance < best.distance) best = np;
  }
  return best;
}

QuadratureSet quadrature(const SourceSupport& support, double target_spacing) {
  if (!(target_spacing > 0.0) || !std::isfinite(target_spacing))
    throw ValidationError("quadrature spacing must be positive");
  const double h = target_spacing;
  QuadratureSet q;
  for (const SupportPart& part : support.parts()) {
    const double tau = part.intensity;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, PointSet>) {
            for (const PointSource& p : s.sources) {
              q.nodes.push_back(p.position);
              q.weights.push_back(1.0);
              q.intensities.push_back(p.intensity);
            }
          } else if constexpr (std::is_same_v<T, Segment>) {
            const double len = distance(s.a, s.b);
            const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / h)));
            std::vector<Point3> pts(n + 1);
            for (std::size_t i = 0; i <= n; ++i)
              pts[i] = (i == n) ? s.b : s.a + (static_cast<double>(i) / static_cast<double>(n)) * (s.b - s.a);
            trapezoid_chords(pts, tau, q);
          } else if constexpr (std::is_same_v<T, ParamCurve>) {
            trapezoid_chords(s.resample(h), tau, q);
          } else if constexpr (std::is_same_v<T, PlanarPolygon>) {
            polygon_quadrature(s, h, tau, q);
          } else if constexpr (std::is_same_v<T, PlanarRegion>) {
            region_quadrature(s, h, tau, q);
          } else {
            polyhedron_quadrature(s, h, tau, q);
          }
        },
        part.shape);
  }
  return q;
}

double measure(const SourceSupport& support) {
  double total = 0.0;
  for (const SupportPart& part : support.parts()) {
    total += std::visit(
        [](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, PointSet>) return static_cast<double>(s.sources.size());
          else if constexpr (std::is_same_v<T, Segment>) return distance(s.a, s.b);
          else if constexpr (std::is_same_v<T, ParamCurve>) return s.length();
          else if constexpr (std::is_same_v<T, ConvexPolyhedron>) return s.volume();
          else return s.area();
        },
        part.shape);
  }
  return total;
}

double control_residual(const SourceSupport& support, Point3 sensor, double arrival, double onset, double c) {
  if (!(c > 0.0)) throw ValidationError("sound speed must be positive");
  return min_distance(support, sensor).distance - c * (arrival - onset);
}

}  // namespace wavesrc
