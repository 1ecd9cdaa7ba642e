#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "wavesrc/forward.hpp"
#include "wavesrc/geometry.hpp"

namespace wavesrc {

// n sensors on a circle; angle step 2 pi / n starting at angle 0 along frame.u.
// half_circle uses step pi / n instead (angles 0 .. (n-1) pi / n).
struct CircleArray {
  double radius = 1.0;
  std::size_t count = 1;
  PlaneFrame frame = PlaneFrame::x1x2();
  bool half_circle = false;
};

// Golden-angle lattice with the polar axis along x2:
// (sqrt(R^2 - y_i^2) cos(beta i), y_i, sqrt(R^2 - y_i^2) sin(beta i)),
// y_i = R (1 - 2 i / (n - 1)), beta = pi (3 - sqrt 5).
struct FibonacciSphereArray {
  double radius = 1.0;
  std::size_t count = 2;
  Point3 center{};
};

// start + i * step for i = 0..n-1.
struct LineArray {
  Point3 start{};
  Point3 step{};
  std::size_t count = 1;
};

using ArrayComponent = std::variant<CircleArray, FibonacciSphereArray, LineArray>;

// Ordered union of array components.
struct ArraySpec {
  std::vector<ArrayComponent> components;

  ArraySpec() = default;
  ArraySpec(ArrayComponent c) : components{std::move(c)} {}
  ArraySpec& operator|=(const ArraySpec& other);
  friend ArraySpec operator|(ArraySpec a, const ArraySpec& b) { return a |= b; }
};

std::vector<Point3> generate_points(const ArrayComponent& component);
SensorArray generate(const ArraySpec& spec);
SensorArray generate(const ArrayComponent& component);

}  // namespace wavesrc
