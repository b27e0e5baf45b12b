#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rieszpot/kernel.hpp"
#include "rieszpot/measure.hpp"
#include "rieszpot/sampling.hpp"

using namespace rieszpot;

namespace {

DiscreteMeasure random_measure(std::size_t n, std::size_t atoms, std::uint64_t seed) {
    detail::Rng rng(seed);
    PointCloud c(n, SampleMode::volume);
    std::vector<double> w;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < atoms; ++i) {
        for (auto& x : p) x = 2.0 * rng.normal();
        c.push_back(p, 1e-3 * (1.0 + rng.uniform()));
        w.push_back(rng.uniform());
    }
    return DiscreteMeasure(std::move(c), std::move(w));
}

} // namespace

TEST(Measure, RejectsNegativeOrMismatchedWeights) {
    PointCloud c(3, {0, 0, 0, 1, 0, 0}, {0.1, 0.1});
    EXPECT_THROW(DiscreteMeasure(c, {1.0}), InvalidInput);
    EXPECT_THROW(DiscreteMeasure(c, {1.0, -1e-9}), InvalidInput);
    EXPECT_THROW(DiscreteMeasure(c, {1.0, NAN}), InvalidInput);
    EXPECT_DOUBLE_EQ(total_mass(DiscreteMeasure(c, {0.25, 0.5})), 0.75);
}

TEST(Measure, MollifiedDirac) {
    const DiscreteMeasure d = mollified_dirac(Point{2, 0, 0}, 3.0, 1e-3);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_DOUBLE_EQ(total_mass(d), 3.0);
    EXPECT_DOUBLE_EQ(d.cloud().cell_radius(0), 1e-3);
    EXPECT_THROW(mollified_dirac(Point{0, 0, 0}, 0.0, 1e-3), InvalidInput);
    EXPECT_THROW(mollified_dirac(Point{0, 0, 0}, 1.0, 0.0), InvalidInput);
}

TEST(Measure, RestrictKeepsExactlyTheAtomsInside) {
    const DiscreteMeasure mu = random_measure(3, 200, 4);
    const Region ball = Region::ball(Point::origin(3), 2.0);
    const DiscreteMeasure in = restrict(mu, ball);
    const DiscreteMeasure out = restrict(mu, Region::complement(ball));
    EXPECT_EQ(in.size() + out.size(), mu.size());
    EXPECT_NEAR(total_mass(in) + total_mass(out), total_mass(mu), 1e-12);
    for (std::size_t i = 0; i < in.size(); ++i) EXPECT_TRUE(contains(ball, in.cloud().point(i)));
}

TEST(Measure, KelvinTransformIsAnInvolution) {
    const RieszParams P(3, 1.5);
    const DiscreteMeasure nu = random_measure(3, 30, 8);
    const Inversion inv{Point{0.1, 0.2, -0.3}};
    const DiscreteMeasure back = kelvin_transform(kelvin_transform(nu, inv, P), inv, P);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        EXPECT_NEAR(back.weight(i), nu.weight(i), 1e-12 * nu.weight(i));
        EXPECT_NEAR(back.cloud().cell_radius(i), nu.cloud().cell_radius(i), 1e-12 * nu.cloud().cell_radius(i));
        for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(back.cloud().point(i)[a], nu.cloud().point(i)[a], 1e-12);
    }
}

TEST(Measure, KelvinMassEqualsPotentialAtCenter) {
    // Written out directly: sum_i w_i |x_i - y|^{alpha - n}.
    for (const RieszParams P : {RieszParams(3, 2.0), RieszParams(3, 0.7), RieszParams(2, 1.0), RieszParams(4, 2.0)}) {
        const DiscreteMeasure nu = random_measure(P.n, 25, 11 + P.n);
        std::vector<double> y(P.n, 0.05);
        double direct = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i)
            direct += nu.weight(i) * std::pow(distance(nu.cloud().point(i), y), P.alpha - static_cast<double>(P.n));
        const DiscreteMeasure star = kelvin_transform(nu, Inversion{Point(y)}, P);
        EXPECT_NEAR(total_mass(star), direct, 1e-12 * direct);
    }
}

TEST(Measure, KelvinRejectsAtomAtCenterAndDimensionMismatch) {
    const DiscreteMeasure d = mollified_dirac(Point{1, 1, 1}, 1.0, 1e-3);
    EXPECT_THROW(kelvin_transform(d, Inversion{Point{1, 1, 1}}, RieszParams(3, 2)), InvalidInput);
    EXPECT_THROW(kelvin_transform(d, Inversion{Point{0, 0}}, RieszParams(3, 2)), InvalidInput);
    EXPECT_THROW(kelvin_transform(d, Inversion{Point{0, 0, 0}}, RieszParams(4, 2)), InvalidInput);
}

TEST(Measure, CsvRoundTripIsExact) {
    const DiscreteMeasure mu = random_measure(3, 50, 2);
    std::stringstream ss;
    write_measure_csv(ss, mu);
    const DiscreteMeasure back = read_measure_csv(ss);
    EXPECT_EQ(back.cloud().coords(), mu.cloud().coords());
    EXPECT_EQ(back.cloud().cell_radii(), mu.cloud().cell_radii());
    EXPECT_EQ(back.weights(), mu.weights());
}

TEST(Measure, CsvRejectsWrongHeader) {
    std::stringstream ss("a,b,c,d\n1,2,3,4\n");
    EXPECT_THROW(read_measure_csv(ss), InvalidInput);
}
