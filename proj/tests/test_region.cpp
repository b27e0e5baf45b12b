#include <gtest/gtest.h>

#include <cmath>

#include "rieszpot/region.hpp"

using namespace rieszpot;

TEST(Region, BallAndSphereMembership) {
    const Region ball = Region::ball(Point{1, 0, 0}, 2.0);
    EXPECT_TRUE(contains(ball, Point{3, 0, 0}));
    EXPECT_FALSE(contains(ball, Point{3.0001, 0, 0}));
    const Region sphere = Region::sphere_shell(Point::origin(3), 1.0);
    EXPECT_TRUE(contains(sphere, Point{0.6, 0.8, 0}));
    EXPECT_FALSE(contains(sphere, Point{0.5, 0, 0}));
    EXPECT_THROW(contains(ball, Point{0, 0}), InvalidInput);
}

TEST(Region, HalfSpaceNormalizesNormal) {
    const Region h = Region::half_space({0, 0, 4}, 1.0);
    EXPECT_TRUE(contains(h, Point{5, -3, 1.0}));
    EXPECT_FALSE(contains(h, Point{0, 0, 0.99}));
    EXPECT_THROW(Region::half_space({0, 0, 0}, 1.0), InvalidInput);
}

TEST(Region, F1ProfileBoundary) {
    // F1 with s = 1: |x_perp| <= 1 / x1 for x1 > 0; the plane x1 = 0 is included.
    const Region f1 = f1_body(1.0);
    EXPECT_TRUE(contains(f1, Point{2.0, 0.3, 0.3}));
    EXPECT_FALSE(contains(f1, Point{2.0, 0.4, 0.4}));
    EXPECT_TRUE(contains(f1, Point{0.0, 100.0, -7.0}));
    EXPECT_FALSE(contains(f1, Point{-0.1, 0.0, 0.0}));
    const Region cyl = f1_body(0.0);
    EXPECT_TRUE(contains(cyl, Point{1e6, 0.99, 0.0}));
    EXPECT_FALSE(contains(cyl, Point{1e6, 1.01, 0.0}));
}

TEST(Region, F2ProfileUsesLogDomain) {
    const Region f2 = f2_body(1.0);
    EXPECT_TRUE(contains(f2, Point{1.0, std::exp(-1.0) * 0.999, 0.0}));
    EXPECT_FALSE(contains(f2, Point{1.0, std::exp(-1.0) * 1.001, 0.0}));
    // rho(800) underflows as a double but the test stays meaningful.
    EXPECT_TRUE(contains(f2, Point{800.0, 0.0, 0.0}));
    EXPECT_FALSE(contains(f2, Point{800.0, 1e-150, 0.0}));
    EXPECT_THROW(f2_body(0.0), InvalidInput);
}

TEST(Region, CompositesAndAnnulusClip) {
    const Region ball = Region::ball(Point::origin(3), 2.0);
    const Region shell = Region::intersection({ball, Region::complement(Region::ball(Point::origin(3), 1.0))});
    EXPECT_TRUE(contains(shell, Point{1.5, 0, 0}));
    EXPECT_FALSE(contains(shell, Point{0.5, 0, 0}));

    const Region clip = Region::annulus_clip(f1_body(0.0), Point::origin(3), 2.0, 4.0);
    EXPECT_TRUE(contains(clip, Point{2.0, 0, 0}));
    EXPECT_FALSE(contains(clip, Point{4.0, 0, 0}));
    const Region closed = Region::annulus_clip(f1_body(0.0), Point::origin(3), 2.0, 4.0, true);
    EXPECT_FALSE(contains(closed, Point{2.0, 0, 0}));
    EXPECT_TRUE(contains(closed, Point{4.0, 0, 0}));
    EXPECT_THROW(Region::annulus_clip(ball, Point::origin(3), 2.0, 2.0), InvalidInput);
}

TEST(Region, AnnularSlicesPartitionTheBody) {
    const Region body = f1_body(0.0);
    const Point y = Point::origin(3);
    for (double t : {1.0, 1.999, 2.0, 3.5, 7.99}) {
        int hits = 0;
        for (int j = 0; j < 3; ++j) hits += contains(annular_slice(body, y, 2.0, j), Point{t, 0, 0});
        EXPECT_EQ(hits, 1) << "t = " << t;
    }
    EXPECT_THROW(annular_slice(body, y, 1.0, 0), InvalidInput);
}

TEST(Region, BoundingBall) {
    EXPECT_FALSE(bounding_ball(f1_body(1.0)).has_value());
    const auto bb = bounding_ball(Region::annulus_clip(f2_body(1.0), Point::origin(3), 0.0, 8.0));
    ASSERT_TRUE(bb.has_value());
    EXPECT_DOUBLE_EQ(bb->radius, 8.0);
    const auto small = bounding_ball(Region::intersection({Region::ball(Point::origin(3), 5.0),
                                                           Region::ball(Point{1, 0, 0}, 0.5)}));
    ASSERT_TRUE(small.has_value());
    EXPECT_DOUBLE_EQ(small->radius, 0.5);
}

TEST(Region, JsonRoundTrip) {
    const Region r = Region::annulus_clip(
        Region::intersection({f2_body(0.5), Region::complement(Region::ball(Point{0, 1, 0}, 0.25))}),
        Point::origin(3), 1.0, 8.0, true);
    const nlohmann::json j = region_to_json(r);
    const Region back = region_from_json(j);
    EXPECT_EQ(describe(back), describe(r));
    EXPECT_EQ(region_to_json(back), j);
}

TEST(Region, JsonRejectsBadDescriptors) {
    EXPECT_THROW(region_from_json({{"type", "torus"}}), InvalidInput);
    EXPECT_THROW(region_from_json({{"type", "ball"}, {"center", {0, 0, 0}}, {"radius", -1}}), InvalidInput);
    EXPECT_THROW(region_from_json({{"type", "f1"}}), InvalidInput);
    EXPECT_THROW(region_from_json(nlohmann::json::array()), InvalidInput);
}
