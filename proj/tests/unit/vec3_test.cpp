#include "springmass/vec3.hpp"

#include <gtest/gtest.h>

#include <random>

namespace springmass {
namespace {

TEST(Vec3Test, NormOfPythagoreanTriple) { EXPECT_EQ(norm(Vec3{3, 4, 0}), 5.0); }

TEST(Vec3Test, AddIsComponentWise) {
  EXPECT_EQ((Vec3{1, 0, 0} + Vec3{0, 1, 0}), (Vec3{1, 1, 0}));
}

TEST(Vec3Test, NormalizeAxisVector) {
  const auto n = normalize(Vec3{0, 0, 2});
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(*n, (Vec3{0, 0, 1}));
}

TEST(Vec3Test, NormalizeZeroIsAnError) { EXPECT_FALSE(normalize(Vec3{}).has_value()); }

TEST(Vec3Test, CrossFollowsRightHandRule) {
  EXPECT_EQ(cross(Vec3{1, 0, 0}, Vec3{0, 1, 0}), (Vec3{0, 0, 1}));
}

TEST(Vec3Test, AlgebraicIdentitiesHoldOnRandomVectors) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  const double pow2[] = {0.25, 0.5, 2.0, 4.0, 1024.0};
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec3 a{u(rng), u(rng), u(rng)};
    const Vec3 b{u(rng), u(rng), u(rng)};
    const double n = norm(a);
    EXPECT_NEAR(dot(a, a), n * n, 1e-12 * dot(a, a));
    for (double s : pow2) {
      // Power-of-two scaling is exact, so distribution over add is bitwise.
      EXPECT_EQ((a + b) * s, a * s + b * s);
    }
    if (auto unit = normalize(a)) EXPECT_NEAR(norm(*unit), 1.0, 1e-15);
  }
}

TEST(Vec3Test, FiniteCheckRejectsNanAndInf) {
  EXPECT_TRUE(is_finite(Vec3{1, 2, 3}));
  EXPECT_FALSE(is_finite(Vec3{std::nan(""), 0, 0}));
  EXPECT_FALSE(is_finite(Vec3{0, INFINITY, 0}));
}

}  // namespace
}  // namespace springmass
