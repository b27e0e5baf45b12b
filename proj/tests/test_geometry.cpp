#include <gtest/gtest.h>

#include <cmath>

#include "rieszpot/geometry.hpp"

using namespace rieszpot;

TEST(Point, RejectsLowDimensionAndNonFinite) {
    EXPECT_THROW(Point({1.0}), InvalidInput);
    EXPECT_THROW(Point({1.0, NAN}), InvalidInput);
    EXPECT_THROW(Point({INFINITY, 0.0, 0.0}), InvalidInput);
    EXPECT_NO_THROW(Point({0.0, 0.0}));
}

TEST(Point, DistanceChecksDimensions) {
    EXPECT_DOUBLE_EQ(distance(Point{0, 0, 0}, Point{1, 2, 2}), 3.0);
    EXPECT_THROW(distance(Point{0, 0}, Point{0, 0, 0}), InvalidInput);
}

TEST(Inversion, MapsToReciprocalRadiusOnSameRay) {
    const Inversion inv{Point{1, 1, 1}};
    const Point p{3, 1, 1};
    const Point q = invert(inv, p);
    EXPECT_NEAR(q[0], 1.5, 1e-15);
    EXPECT_NEAR(q[1], 1.0, 1e-15);
    EXPECT_NEAR(q[2], 1.0, 1e-15);
}

TEST(Inversion, IsAnInvolution) {
    const Inversion inv{Point{0.3, -0.2, 0.7, 1.1}};
    const Point p{2.0, -1.0, 0.5, 0.25};
    const Point back = invert(inv, invert(inv, p));
    for (std::size_t k = 0; k < p.dim(); ++k) EXPECT_NEAR(back[k], p[k], 1e-14);
}

TEST(Inversion, FixesTheUnitSphere) {
    const Inversion inv{Point::origin(3)};
    const Point p{0.6, 0.0, 0.8};
    const Point q = invert(inv, p);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(q[k], p[k], 1e-15);
}

TEST(Inversion, PoleAndDimensionMismatchThrow) {
    const Inversion inv{Point{1, 2, 3}};
    EXPECT_THROW(invert(inv, Point{1, 2, 3}), InvalidInput);
    EXPECT_THROW(invert(inv, Point{1, 2}), InvalidInput);
}

TEST(PointCloud, ValidatesRadiiAndLengths) {
    EXPECT_THROW(PointCloud(3, {0, 0, 0}, {0.0}), InvalidInput);
    EXPECT_THROW(PointCloud(3, {0, 0, 0, 1}, {0.1}), InvalidInput);
    EXPECT_THROW(PointCloud(1, SampleMode::surface), InvalidInput);
    PointCloud c(2, SampleMode::volume);
    EXPECT_THROW(c.push_back(std::vector<double>{1, 2, 3}, 0.1), InvalidInput);
    EXPECT_THROW(c.push_back(std::vector<double>{1, 2}, -0.1), InvalidInput);
}

TEST(PointCloud, MinPairwiseDistance) {
    PointCloud c(3, {0, 0, 0, 3, 0, 0, 3, 4, 0}, {0.1, 0.1, 0.1});
    EXPECT_DOUBLE_EQ(c.min_pairwise_distance(), 3.0);
    EXPECT_TRUE(std::isinf(PointCloud(3, SampleMode::surface).min_pairwise_distance()));
}

TEST(SampleMode, RoundTripsNames) {
    EXPECT_EQ(sample_mode_from_string(to_string(SampleMode::surface)), SampleMode::surface);
    EXPECT_EQ(sample_mode_from_string(to_string(SampleMode::volume)), SampleMode::volume);
    EXPECT_THROW(sample_mode_from_string("edge"), InvalidInput);
}
