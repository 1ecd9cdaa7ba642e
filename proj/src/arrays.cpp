#include "wavesrc/arrays.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavesrc/errors.hpp"

namespace wavesrc {

ArraySpec& ArraySpec::operator|=(const ArraySpec& other) {
  components.insert(components.end(), other.components.begin(), other.components.end());
  return *this;
}

std::vector<Point3> generate_points(const ArrayComponent& component) {
  struct Visitor {
    std::vector<Point3> operator()(const CircleArray& a) const {
      if (a.count < 1) throw ValidationError("circle array needs at least one sensor");
      if (!(a.radius > 0.0)) throw ValidationError("circle array radius must be positive");
      const double step = (a.half_circle ? std::numbers::pi : 2.0 * std::numbers::pi) / static_cast<double>(a.count);
      std::vector<Point3> pts;
      pts.reserve(a.count);
      for (std::size_t i = 0; i < a.count; ++i) {
        const double th = step * static_cast<double>(i);
        pts.push_back(a.frame.to_world({a.radius * std::cos(th), a.radius * std::sin(th)}));
      }
      return pts;
    }
    std::vector<Point3> operator()(const FibonacciSphereArray& a) const {
      if (a.count < 2) throw ValidationError("fibonacci sphere needs at least two sensors");
      if (!(a.radius > 0.0)) throw ValidationError("fibonacci sphere radius must be positive");
      const double beta = std::numbers::pi * (3.0 - std::sqrt(5.0));
      const double r = a.radius;
      std::vector<Point3> pts;
      pts.reserve(a.count);
      for (std::size_t i = 0; i < a.count; ++i) {
        const double y = r * (1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(a.count - 1));
        const double rho = std::sqrt(std::max(0.0, r * r - y * y));
        const double phi = beta * static_cast<double>(i);
        pts.push_back(a.center + Point3{rho * std::cos(phi), y, rho * std::sin(phi)});
      }
      return pts;
    }
    std::vector<Point3> operator()(const LineArray& a) const {
      if (a.count < 1) throw ValidationError("line array needs at least one sensor");
      std::vector<Point3> pts;
      pts.reserve(a.count);
      for (std::size_t i = 0; i < a.count; ++i) pts.push_back(a.start + static_cast<double>(i) * a.step);
      return pts;
    }
  };
  return std::visit(Visitor{}, component);
}

SensorArray generate(const ArraySpec& spec) {
  if (spec.components.empty()) throw ValidationError("array spec is empty");
  std::vector<Point3> pts;
  double radius = 0.0;
  for (const ArrayComponent& c : spec.components) {
    auto part = generate_points(c);
    pts.insert(pts.end(), part.begin(), part.end());
    if (const auto* circle = std::get_if<CircleArray>(&c)) radius = std::max(radius, circle->radius);
    if (const auto* sphere = std::get_if<FibonacciSphereArray>(&c)) radius = std::max(radius, sphere->radius);
  }
  return SensorArray(std::move(pts), radius);
}

SensorArray generate(const ArrayComponent& component) { return generate(ArraySpec(component)); }

}  // namespace wavesrc
