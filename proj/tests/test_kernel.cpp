#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "rieszpot/kernel.hpp"
#include "rieszpot/sampling.hpp"

using namespace rieszpot;

TEST(Kernel, ValuesAndDiagonal) {
    EXPECT_DOUBLE_EQ(kernel_eval(RieszParams(3, 2), Point{0, 0, 0}, Point{0, 0, 2}), 0.5);
    EXPECT_NEAR(kernel_eval(RieszParams(3, 1), Point{0, 0, 0}, Point{0, 0, 2}), 0.25, 1e-15);
    EXPECT_NEAR(kernel_eval(RieszParams(2, 0.5), Point{0, 0}, Point{0, 4}), std::pow(4.0, -1.5), 1e-15);
    EXPECT_THROW(kernel_eval(RieszParams(3, 2), Point{1, 1, 1}, Point{1, 1, 1}), InvalidInput);
    EXPECT_THROW(kernel_eval(RieszParams(3, 2), Point{1, 1}, Point{1, 1, 1}), InvalidInput);
}

TEST(Kernel, ParamsValidation) {
    EXPECT_THROW(RieszParams(1, 0.5), InvalidInput);
    EXPECT_THROW(RieszParams(3, 0.0), InvalidInput);
    EXPECT_THROW(RieszParams(3, 2.5), InvalidInput);
    EXPECT_THROW(RieszParams(2, 2.0), InvalidInput);
    EXPECT_NO_THROW(RieszParams(2, 1.999));
}

TEST(Kernel, RegularizationCapsNearDiagonal) {
    const RieszParams P(3, 2);
    EXPECT_DOUBLE_EQ(regularized_kernel(P, Point{0, 0, 0}, Point{0, 0, 0}, 0.1), 10.0);
    EXPECT_DOUBLE_EQ(regularized_kernel(P, Point{0, 0, 0}, Point{0.05, 0, 0}, 0.1), 10.0);
    EXPECT_DOUBLE_EQ(regularized_kernel(P, Point{0, 0, 0}, Point{2, 0, 0}, 0.1), 0.5);
    EXPECT_THROW(regularized_kernel(P, Point{0, 0, 0}, Point{1, 0, 0}, 0.0), InvalidInput);
}

TEST(Kernel, PotentialOfSphereEquilibriumMatchesClosedForm) {
    // Uniform surface measure of total mass r on the sphere of radius r has potential r / max(|x|, r).
    const double r = 1.5;
    const PointCloud c = sample(Region::sphere_shell(Point::origin(3), r), 4000, SampleMode::surface, 0);
    const DiscreteMeasure mu(c, std::vector<double>(c.size(), r / static_cast<double>(c.size())));
    const RieszParams P(3, 2);
    for (const oracle::Vec3 x : {oracle::Vec3{3, 0, 0}, oracle::Vec3{0, -5, 1}, oracle::Vec3{0.2, 0.1, 0},
                                 oracle::Vec3{0, 0, 0}}) {
        const double exact = oracle::sphere_equilibrium_potential(x, r);
        EXPECT_NEAR(potential(mu, std::vector<double>(x.begin(), x.end()), P), exact, 1e-3 * exact);
    }
}

TEST(Kernel, EnergyIsSymmetricAndUsesAveragedCap) {
    const RieszParams P(3, 1.2);
    const DiscreteMeasure a(PointCloud(3, {0, 0, 0, 1, 0, 0}, {0.2, 0.4}), {1.0, 2.0});
    const DiscreteMeasure b(PointCloud(3, {0, 0.1, 0, 0, 3, 0}, {0.1, 0.1}), {0.5, 1.5});
    EXPECT_NEAR(energy(a, b, P), energy(b, a, P), 1e-14);
    const double e = P.exponent();
    const double expected = 1.0 * (0.5 * std::pow(0.15, e) + 1.5 * std::pow(3.0, e)) +
                            2.0 * (0.5 * std::pow(std::hypot(1.0, 0.1), e) + 1.5 * std::pow(std::hypot(1.0, 3.0), e));
    EXPECT_NEAR(energy(a, b, P), expected, 1e-13);
}

TEST(Kernel, GramMatchesPairwiseKernelOffDiagonal) {
    const RieszParams P(3, 2);
    const PointCloud c = sample(Region::ball(Point::origin(3), 1.0), 200, SampleMode::volume, 1);
    GramOptions go;
    const GramMatrix G = gram(c, P, go);
    ASSERT_EQ(G.size(), c.size());
    for (std::size_t i = 0; i < c.size(); i += 17)
        for (std::size_t j = 0; j < c.size(); j += 13) {
            const double v = G.entries()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (i == j)
                EXPECT_DOUBLE_EQ(v, 1.0 / c.cell_radius(i));
            else
                EXPECT_NEAR(v, kernel_eval(P, c.point(i), c.point(j)), 1e-14 * v);
        }
    EXPECT_TRUE(G.monitor().choleskyOk);
    EXPECT_GT(G.monitor().lambdaMin, 0.0);
    EXPECT_TRUE(G.monitor().passes);
}

TEST(Kernel, GramCacheRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "rieszpot-gram-cache-test";
    std::filesystem::remove_all(dir);
    const RieszParams P(3, 1.0);
    const PointCloud c = sample(Region::sphere_shell(Point::origin(3), 1.0), 150, SampleMode::surface, 3);
    GramOptions go;
    go.cacheDir = dir.string();
    const GramMatrix first = gram(c, P, go);
    const GramMatrix second = gram(c, P, go);
    EXPECT_FALSE(first.loadedFromCache());
    EXPECT_TRUE(second.loadedFromCache());
    EXPECT_EQ(first.entries(), second.entries());
    // Different parameters must not hit the same entry.
    EXPECT_FALSE(gram(c, RieszParams(3, 1.5), go).loadedFromCache());
    std::filesystem::remove_all(dir);
}

TEST(Kernel, PotentialFieldIsThreadCountInvariant) {
    const RieszParams P(3, 2);
    const PointCloud c = sample(Region::ball(Point::origin(3), 1.0), 300, SampleMode::volume, 2);
    const DiscreteMeasure mu(c, std::vector<double>(c.size(), 1.0 / 300));
    const PointCloud probes = sample(Region::sphere_shell(Point::origin(3), 2.0), 500, SampleMode::surface, 5);
    set_thread_count(1);
    const auto a = potential_field(mu, probes, P).values;
    set_thread_count(8);
    const auto b = potential_field(mu, probes, P).values;
    set_thread_count(0);
    EXPECT_EQ(a, b);
}

TEST(Kernel, ExactPotentialAndPairwiseEnergy) {
    const RieszParams P(3, 2);
    const DiscreteMeasure mu(PointCloud(3, {0, 0, 0, 2, 0, 0}, {0.1, 0.1}), {1.0, 3.0});
    const std::vector<double> x{0, 1, 0};
    EXPECT_NEAR(exact_potential(mu, x, P), 1.0 + 3.0 / std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(exact_pairwise_energy(mu, mu, P), 2.0 * 1.0 * 3.0 / 2.0, 1e-15);
}
