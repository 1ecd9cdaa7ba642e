#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wavesrc/arrays.hpp"
#include "wavesrc/errors.hpp"

using namespace wavesrc;

TEST(Arrays, CircleFirstPointAndSpacing) {
  const auto p = generate_points(CircleArray{3.5, 64});
  ASSERT_EQ(p.size(), 64u);
  EXPECT_EQ(p[0], (Point3{3.5, 0, 0}));
  EXPECT_NEAR(p[16].x1, 0.0, 1e-12);
  EXPECT_NEAR(p[16].x2, 3.5, 1e-12);
  for (const auto& x : p) {
    EXPECT_NEAR(norm(x), 3.5, 1e-12);
    EXPECT_EQ(x.x3, 0.0);
  }
}

TEST(Arrays, HalfCircleLiteral) {
  CircleArray c{3.5, 64};
  c.half_circle = true;
  const auto p = generate_points(c);
  EXPECT_NEAR(std::atan2(p[63].x2, p[63].x1), 63 * std::numbers::pi / 64, 1e-12);
}

TEST(Arrays, FibonacciPoles) {
  const auto p = generate_points(FibonacciSphereArray{5, 100});
  ASSERT_EQ(p.size(), 100u);
  EXPECT_NEAR(p[0].x1, 0, 1e-12);
  EXPECT_EQ(p[0].x2, 5.0);
  EXPECT_NEAR(p[0].x3, 0, 1e-12);
  EXPECT_NEAR(p[99].x1, 0, 1e-12);
  EXPECT_EQ(p[99].x2, -5.0);
  for (const auto& x : p) EXPECT_NEAR(norm(x), 5.0, 1e-12);
  EXPECT_THROW(generate(FibonacciSphereArray{5, 1}), ValidationError);
}

TEST(Arrays, LineAndUnion) {
  const LineArray line{{-4, 4, 0}, {0.5, -0.5, 0}, 16};
  const auto p = generate_points(line);
  EXPECT_EQ(p[15], (Point3{3.5, -3.5, 0}));
  const SensorArray s = generate(ArraySpec(CircleArray{5, 64}) | ArraySpec(line));
  ASSERT_EQ(s.size(), 80u);
  EXPECT_EQ(s[0], (Point3{5, 0, 0}));
  EXPECT_EQ(s[64], (Point3{-4, 4, 0}));
  EXPECT_EQ(s.radius_hint, 5.0);
}

TEST(Arrays, Rejections) {
  EXPECT_THROW(generate(CircleArray{0.0, 4}), ValidationError);
  EXPECT_THROW(generate(CircleArray{1.0, 0}), ValidationError);
  EXPECT_THROW(generate(LineArray{{0, 0, 0}, {0, 0, 0}, 2}), ValidationError);
}
