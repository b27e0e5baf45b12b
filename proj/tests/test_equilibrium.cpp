#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "rieszpot/equilibrium.hpp"

using namespace rieszpot;

namespace {

const RieszParams kNewton(3, 2.0);

EquilibriumOptions with_resolution(std::size_t N, std::uint64_t seed = 0) {
    EquilibriumOptions o;
    o.resolution = N;
    o.seed = seed;
    return o;
}

std::vector<int> range(int a, int b) {
    std::vector<int> v;
    for (int j = a; j <= b; ++j) v.push_back(j);
    return v;
}

template <class F>
std::vector<double> terms_of(const std::vector<int>& idx, F f) {
    std::vector<double> t;
    for (int j : idx) t.push_back(f(j));
    return t;
}

} // namespace

TEST(Equilibrium, SphereCapacityMatchesRadius) {
    for (double r : {1.0, 2.0}) {
        const auto res = equilibrium_measure(Region::sphere_shell(Point::origin(3), r), kNewton, with_resolution(1000));
        ASSERT_TRUE(res.solver.converged);
        EXPECT_NEAR(res.capacity, oracle::sphere_capacity(r), 0.02 * r);
    }
}

TEST(Equilibrium, CapacityEqualsEnergyAndPotentialIsOneOnSupport) {
    const auto res = equilibrium_measure(Region::ball(Point{1, -1, 0.5}, 1.0), RieszParams(3, 1.3), with_resolution(700));
    ASSERT_TRUE(res.solver.converged);
    EXPECT_NEAR(res.energyValue, res.capacity, 1e-8 * res.capacity);
    EXPECT_LE(res.potentialOnSet.supportMaxDeviation, 1e-8);
    EXPECT_GE(res.potentialOnSet.min, 1.0 - 1e-8);
}

TEST(Equilibrium, CapacityScalesWithRadius) {
    // Same seed: the radius-2 cloud is the radius-1 cloud scaled by 2, so c(2K) = 2^{n - alpha} c(K).
    const RieszParams P(3, 1.0);
    const double c1 = capacity(Region::sphere_shell(Point::origin(3), 1.0), P, with_resolution(500, 4));
    const double c2 = capacity(Region::sphere_shell(Point::origin(3), 2.0), P, with_resolution(500, 4));
    EXPECT_NEAR(c2 / c1, 4.0, 1e-8);
}

TEST(Equilibrium, ExteriorPotentialMatchesClosedForm) {
    const auto res = equilibrium_measure(Region::sphere_shell(Point::origin(3), 1.0), kNewton, with_resolution(1500));
    for (const oracle::Vec3 x : {oracle::Vec3{3, 0, 0}, oracle::Vec3{0, 1.5, -1}, oracle::Vec3{10, 10, 10}}) {
        const double exact = oracle::sphere_equilibrium_potential(x, 1.0);
        EXPECT_NEAR(potential(res.gamma, std::vector<double>(x.begin(), x.end()), kNewton), exact, 0.02 * exact);
    }
}

TEST(Equilibrium, EmptyRegionHasZeroCapacity) {
    const Region empty =
        Region::intersection({Region::ball(Point::origin(3), 1.0), Region::ball(Point{4, 0, 0}, 1.0)});
    const auto res = equilibrium_measure(empty, kNewton, with_resolution(100));
    EXPECT_EQ(res.capacity, 0.0);
    EXPECT_TRUE(res.solver.converged);
}

TEST(Equilibrium, SubsetHasSmallerCapacity) {
    const PointCloud cloud = sample(Region::sphere_shell(Point::origin(3), 1.0), 600, SampleMode::surface, 2);
    PointCloud half(3, SampleMode::surface);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.point(i)[2] > 0.0) half.push_back(cloud.point(i), cloud.cell_radius(i));
    EXPECT_LT(equilibrium_on(half, kNewton).capacity, equilibrium_on(cloud, kNewton).capacity);
}

TEST(SeriesClassifier, ReferenceSeries) {
    const auto idx = range(1, 7);
    struct Case {
        const char* name;
        std::vector<double> terms;
        SeriesVerdict expected;
    };
    const std::vector<Case> cases{
        {"geometric 1/2", terms_of(idx, [](int j) { return std::pow(0.5, j); }), SeriesVerdict::convergent},
        {"geometric 1.2", terms_of(idx, [](int j) { return std::pow(1.2, j); }), SeriesVerdict::divergent},
        {"constant", terms_of(idx, [](int) { return 1.33; }), SeriesVerdict::divergent},
        {"harmonic", terms_of(idx, [](int j) { return 1.0 / j; }), SeriesVerdict::divergent},
        {"power 3", terms_of(idx, [](int j) { return std::pow(j, -3.0); }), SeriesVerdict::convergent},
        {"trailing zero", {0.5, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0}, SeriesVerdict::convergent},
        {"all zero", std::vector<double>(7, 0.0), SeriesVerdict::convergent},
        {"noise", {1.0, 0.01, 3.0, 0.02, 5.0, 0.001, 2.0}, SeriesVerdict::inconclusive},
    };
    for (const auto& c : cases)
        EXPECT_EQ(classify_series(idx, c.terms).verdict, c.expected) << c.name << ": "
                                                                      << classify_series(idx, c.terms).reason;
}

TEST(SeriesClassifier, RejectsInvalidTerms) {
    EXPECT_THROW(classify_series({1, 2}, {1.0}), InvalidInput);
    EXPECT_THROW(classify_series({1, 2}, {1.0, -1.0}), InvalidInput);
    EXPECT_EQ(classify_series({}, {}).verdict, SeriesVerdict::inconclusive);
}

TEST(Wiener, BoundedSetIsThinAtInfinity) {
    WienerOptions o;
    o.slicePoints = 150;
    o.jMax = 5;
    const auto rep = wiener_series(Region::ball(Point::origin(3), 3.0), WienerMode::thinnessAtInfinity,
                                   Point::origin(3), kNewton, o);
    EXPECT_EQ(rep.classification.verdict, SeriesVerdict::convergent);
    EXPECT_EQ(rep.terms.back().sliceCapacity, 0.0);
    EXPECT_EQ(interpret(rep), "convergent (thin)");
}

TEST(Wiener, CylinderIsNotThinAndExpBodyIsThin) {
    WienerOptions o;
    o.slicePoints = 200;
    const auto cyl = wiener_series(f1_body(0.0), WienerMode::thinnessAtInfinity, Point::origin(3), kNewton, o);
    EXPECT_EQ(cyl.classification.verdict, SeriesVerdict::divergent) << cyl.classification.reason;
    const auto f2 = wiener_series(f2_body(1.0), WienerMode::thinnessAtInfinity, Point::origin(3), kNewton, o);
    EXPECT_EQ(f2.classification.verdict, SeriesVerdict::convergent) << f2.classification.reason;
    EXPECT_EQ(interpret(f2), "convergent (thin)");
    ASSERT_EQ(f2.partialSums.size(), f2.terms.size());
    for (std::size_t k = 0; k < f2.terms.size(); ++k) {
        const auto& t = f2.terms[k];
        EXPECT_DOUBLE_EQ(t.rLo, std::pow(2.0, t.j));
        EXPECT_NEAR(t.term, t.sliceCapacity / std::pow(2.0, t.j), 1e-15 * t.sliceCapacity);
    }
}

TEST(Wiener, CapacityFinitenessUsesRawCapacities) {
    WienerOptions o;
    o.slicePoints = 200;
    const auto rep = wiener_series(f2_body(2.0), WienerMode::capacityFiniteness, Point::origin(3), kNewton, o);
    for (const auto& t : rep.terms) EXPECT_EQ(t.term, t.sliceCapacity);
    EXPECT_EQ(rep.classification.verdict, SeriesVerdict::convergent);
    EXPECT_EQ(interpret(rep), "convergent (finite capacity)");
}

TEST(Wiener, RegularityAtBoundaryAndExteriorPoints) {
    WienerOptions o;
    o.q = 0.5;
    o.jMin = 1;
    o.jMax = 6;
    o.slicePoints = 150;
    const Region ball = Region::ball(Point::origin(3), 1.0);
    const auto boundary = wiener_series(ball, WienerMode::regularityAtPoint, Point{1, 0, 0}, kNewton, o);
    EXPECT_EQ(boundary.classification.verdict, SeriesVerdict::divergent) << boundary.classification.reason;
    EXPECT_EQ(interpret(boundary), "divergent (regular)");
    const auto outside = wiener_series(ball, WienerMode::regularityAtPoint, Point{2, 0, 0}, kNewton, o);
    EXPECT_EQ(outside.classification.verdict, SeriesVerdict::convergent);
}

TEST(Wiener, OptionValidation) {
    WienerOptions o;
    o.q = 0.5;
    EXPECT_THROW(wiener_series(f2_body(1.0), WienerMode::thinnessAtInfinity, Point::origin(3), kNewton, o),
                 InvalidInput);
    o.q = 2.0;
    EXPECT_THROW(wiener_series(f2_body(1.0), WienerMode::regularityAtPoint, Point::origin(3), kNewton, o),
                 InvalidInput);
    o.jMin = 4;
    o.jMax = 2;
    EXPECT_THROW(wiener_series(f2_body(1.0), WienerMode::thinnessAtInfinity, Point::origin(3), kNewton, o),
                 InvalidInput);
    EXPECT_EQ(wiener_mode_from_string("finiteness"), WienerMode::capacityFiniteness);
    EXPECT_THROW(wiener_mode_from_string("thin"), InvalidInput);
}

TEST(Wiener, CsvAndJsonSummaries) {
    WienerOptions o;
    o.slicePoints = 100;
    o.jMax = 4;
    const auto rep = wiener_series(f2_body(1.0), WienerMode::thinnessAtInfinity, Point::origin(3), kNewton, o);
    std::ostringstream os;
    write_wiener_csv(os, rep);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "j,rLo,rHi,sliceCapacity,term,partialSum");
    const auto j = wiener_summary_json(rep);
    EXPECT_EQ(j["mode"], "thinness");
    EXPECT_TRUE(j.contains("fit"));
    EXPECT_DOUBLE_EQ(j["partialSum"].get<double>(), rep.partialSums.back());
}

TEST(EquilibriumExhaustion, ThinBodyCapacitiesSettle) {
    EquilibriumExhaustionOptions o;
    o.pointsPerShell = 200;
    o.wiener.slicePoints = 150;
    const auto t = equilibrium_exhaustion(f2_body(2.0), {2.0, 4.0, 8.0}, kNewton, o);
    ASSERT_EQ(t.capacities.size(), 3u);
    EXPECT_TRUE(t.capacitiesMonotone);
    EXPECT_LE(t.potentialMonotonicity, 1e-6);
    ASSERT_TRUE(t.thinness.has_value());
    EXPECT_EQ(*t.thinness, SeriesVerdict::convergent);
    EXPECT_FALSE(t.equilibriumMayNotExist);
    EXPECT_LT(t.lastRelativeIncrement, 0.05);
}

TEST(EquilibriumExhaustion, NonThinBodyIsFlaggedAsMayNotExist) {
    EquilibriumExhaustionOptions o;
    o.pointsPerShell = 100;
    o.wiener.slicePoints = 150;
    const auto t = equilibrium_exhaustion(f1_body(0.0), {2.0, 4.0}, kNewton, o);
    EXPECT_TRUE(t.equilibriumMayNotExist);
    EXPECT_GT(t.capacities[1], t.capacities[0]);
}
