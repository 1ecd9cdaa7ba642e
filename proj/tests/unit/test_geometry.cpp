#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wavesrc/errors.hpp"
#include "wavesrc/geometry.hpp"

using namespace wavesrc;

namespace {

PlanarPolygon unit_square() { return PlanarPolygon({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}); }

ParamCurve circle_curve(double r) {
  return ParamCurve::with_spacing([r](double z) { return Point3{r * std::cos(z), r * std::sin(z), 0.0}; }, 0.0,
                                  2.0 * std::numbers::pi, 0.01);
}

// Brute force over quadrature nodes; error bounded by the node spacing.
double brute_distance(const SourceSupport& s, Point3 x, double h) {
  double best = INFINITY;
  for (const Point3& p : quadrature(s, h).nodes) best = std::min(best, distance(p, x));
  return best;
}

}  // namespace

TEST(MinDistance, SegmentPerpendicular) {
  const auto r = min_distance(SourceSupport(Segment{{0, -1, 0}, {0, 1, 0}}), {2, 0, 0});
  EXPECT_DOUBLE_EQ(r.distance, 2.0);
  EXPECT_NEAR(norm(r.nearest), 0.0, 1e-15);
}

TEST(MinDistance, TwoPointSet) {
  const SourceSupport s(PointSet{{{{0, 1, 0}, 3.0}, {{0, -1, 0}, 2.0}}});
  const auto r = min_distance(s, {3.5, 0, 0});
  EXPECT_NEAR(r.distance, 3.640054944640259, 1e-14);
  // tie between both points: the first stored one wins
  EXPECT_EQ(r.nearest, (Point3{0, 1, 0}));
}

TEST(MinDistance, SquareAbove) {
  const auto r = min_distance(SourceSupport(unit_square()), {0.5, 0.5, 1});
  EXPECT_NEAR(r.distance, 1.0, 1e-14);
  EXPECT_NEAR(distance(r.nearest, {0.5, 0.5, 0}), 0.0, 1e-14);
}

TEST(MinDistance, SquareCorner) {
  const auto r = min_distance(SourceSupport(unit_square()), {2, 2, 0});
  EXPECT_NEAR(r.distance, std::sqrt(2.0), 1e-14);
  double brute = INFINITY;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) brute = std::min(brute, distance({i / 199.0, j / 199.0, 0}, {2, 2, 0}));
  EXPECT_NEAR(r.distance, brute, 1e-12);
}

TEST(MinDistance, PolyhedronInsideIsZero) {
  const ConvexPolyhedron tet({{2, 2, 2}, {2, -2, -2}, {-2, 2, -2}, {-2, -2, 2}});
  EXPECT_EQ(min_distance(SourceSupport(tet), {0, 0, 0}).distance, 0.0);
  EXPECT_NEAR(tet.volume(), 64.0 / 3.0, 1e-12);
  // midpoint of two support points stays in the support
  const Point3 m = 0.5 * (Point3{2, 2, 2} + Point3{-2, -2, 2});
  EXPECT_NEAR(min_distance(SourceSupport(tet), m).distance, 0.0, 1e-12);
}

TEST(MinDistance, PolyhedronOutsideFace) {
  const ConvexPolyhedron cube({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  EXPECT_NEAR(cube.volume(), 1.0, 1e-12);
  EXPECT_NEAR(min_distance(SourceSupport(cube), {0.5, 0.5, 3}).distance, 2.0, 1e-12);
  EXPECT_NEAR(min_distance(SourceSupport(cube), {2, 2, 2}).distance, std::sqrt(3.0), 1e-12);
}

TEST(MinDistance, RegionContainsAndBoundary) {
  const auto region = PlanarRegion::from_curve(
      PlaneFrame::x1x2(), [](double z) { return Vec2{std::cos(z), std::sin(z)}; }, 0, 2 * std::numbers::pi, 0.01);
  const SourceSupport s(region);
  EXPECT_EQ(min_distance(s, {0.2, 0.1, 0}).distance, 0.0);
  EXPECT_NEAR(min_distance(s, {0.2, 0.1, 2}).distance, 2.0, 1e-12);
  EXPECT_NEAR(min_distance(s, {3, 0, 0}).distance, 2.0, 0.01);
}

TEST(MinDistance, AgreesWithBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4, 4);
  const double h = 0.02;
  const std::vector<SourceSupport> supports = {
      SourceSupport(Segment{{-1, 0.5, 0}, {1, -0.3, 0.2}}),
      SourceSupport(circle_curve(0.6)),
      SourceSupport(PlanarPolygon({{0, 0, 0}, {2, 1, 0}, {3, 3, 0}, {1, 3, 0}, {-1, 2, 0}})),
      SourceSupport(ConvexPolyhedron({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}})),
  };
  for (int trial = 0; trial < 100; ++trial) {
    const SourceSupport& s = supports[trial % supports.size()];
    const Point3 x{u(rng), u(rng), u(rng)};
    const double exact = min_distance(s, x).distance;
    EXPECT_LE(exact, brute_distance(s, x, h) + 1e-12);
    EXPECT_GE(exact, brute_distance(s, x, h) - 2 * h) << trial;
  }
}

TEST(MinDistance, RigidMotionInvariance) {
  const double a = 0.7;
  auto rot = [a](Point3 p) {
    return Point3{std::cos(a) * p.x1 - std::sin(a) * p.x3 + 1, p.x2 - 2, std::sin(a) * p.x1 + std::cos(a) * p.x3};
  };
  const std::vector<Point3> v = {{0, 0, 0}, {2, 1, 0}, {3, 3, 0}, {1, 3, 0}};
  std::vector<Point3> w;
  for (const auto& p : v) w.push_back(rot(p));
  const Point3 x{0.4, 2.2, 1.3};
  EXPECT_NEAR(min_distance(SourceSupport(PlanarPolygon(v)), x).distance,
              min_distance(SourceSupport(PlanarPolygon(w)), rot(x)).distance, 1e-9);
}

TEST(Quadrature, SegmentLength) {
  const auto q = quadrature(SourceSupport(Segment{{0, -1, 0}, {0, 1, 0}}), 0.1);
  EXPECT_GE(q.size(), 20u);
  EXPECT_NEAR(q.total_weight(), 2.0, 0.02);
}

TEST(Quadrature, CircleCircumference) {
  const auto q = quadrature(SourceSupport(circle_curve(0.6)), 0.05);
  EXPECT_NEAR(q.total_weight(), 2 * std::numbers::pi * 0.6, 0.01 * 3.7699);
}

TEST(Quadrature, PointSetIsAtomic) {
  const SourceSupport s(PointSet{{{{1, 0, 0}, 3}, {{0, 1, 0}, 2}, {{-1, 0, 0}, 4}, {{0, 0.5, 0}, 1}}});
  const auto q = quadrature(s, 0.01);
  ASSERT_EQ(q.size(), 4u);
  for (double w : q.weights) EXPECT_EQ(w, 1.0);
  EXPECT_EQ(q.intensities[2], 4.0);
}

TEST(Quadrature, AreaAndVolume) {
  EXPECT_NEAR(quadrature(SourceSupport(unit_square()), 0.05).total_weight(), 1.0, 0.01);
  const ConvexPolyhedron tet({{2, 2, 2}, {2, -2, -2}, {-2, 2, -2}, {-2, -2, 2}});
  EXPECT_NEAR(quadrature(SourceSupport(tet), 0.2).total_weight(), 64.0 / 3.0, 0.01 * 64.0 / 3.0);
}

TEST(Quadrature, RefinementDoesNotWorsen) {
  const SourceSupport s(PlanarPolygon({{0, 0, 0}, {2, 1, 0}, {3, 3, 0}, {1, 3, 0}, {-1, 2, 0}}));
  const double exact = std::get<PlanarPolygon>(s.parts()[0].shape).area();
  double prev = INFINITY;
  for (double h : {0.4, 0.2, 0.1, 0.05}) {
    const double err = std::abs(quadrature(s, h).total_weight() - exact);
    EXPECT_LE(err, prev + 1e-9);
    prev = err;
  }
}

TEST(Quadrature, RejectsNonpositiveSpacing) {
  EXPECT_THROW(quadrature(SourceSupport(unit_square()), 0.0), ValidationError);
}

TEST(ControlResidual, Definition) {
  const SourceSupport one(PointSet{{{{0, 0, 0}, 1}}});
  EXPECT_NEAR(control_residual(one, {3.5, 0, 0}, 3.5, 0, 1), 0.0, 1e-15);
  EXPECT_NEAR(control_residual(one, {3.5, 0, 0}, 3.6, 0, 1), -0.1, 1e-12);
  const SourceSupport two(PointSet{{{{0, 1, 0}, 3}, {{0, -1, 0}, 2}}});
  EXPECT_NEAR(control_residual(two, {3.5, 0, 0}, std::sqrt(13.25), 0, 1), 0.0, 1e-14);
}

TEST(SupportValidation, Rejects) {
  EXPECT_THROW(SourceSupport(PointSet{}), ValidationError);
  EXPECT_THROW(SourceSupport(PointSet{{{{0, 0, 0}, 1}, {{0, 0, 0}, 2}}}), ValidationError);
  EXPECT_THROW(SourceSupport(Segment{{1, 1, 1}, {1, 1, 1}}), ValidationError);
  EXPECT_THROW(PlanarPolygon({{0, 0, 0}, {1, 0, 0}, {1, 1, 0.1}, {0, 1, 0}}), ValidationError);
  EXPECT_THROW(PlanarPolygon({{0, 0, 0}, {1, 1, 0}, {1, 0, 0}, {0, 1, 0}}), ValidationError);
  EXPECT_THROW(ConvexPolyhedron({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}), ValidationError);
  EXPECT_THROW(SourceSupport(Segment{{0, 0, 0}, {1, 0, 0}}, -1.0), ValidationError);
}
