#include "qdom/schwarz.hpp"

#include <gtest/gtest.h>

using namespace qdom;

namespace {

ExteriorMap example_map() { return solve_exterior_map(0.5, 0.5, cplx(2.0, 0.0)); }

} // namespace

TEST(Boundary, AreaMatchesTheMassConstraint) {
    const auto bc = boundary_curve(example_map(), 4096);
    EXPECT_NEAR(bc.area, pi, 1e-5);
    EXPECT_GT(bc.min_abs_derivative, 0.0);
}

TEST(Boundary, FoldedMapIsRejected) {
    EXPECT_THROW(boundary_curve(ExteriorMap{1.0, 0.0, 1.5, 0.0}, 256), Error);
    EXPECT_THROW(boundary_curve(example_map(), 4), Error);
}

TEST(Schwarz, ConjugateOnTheBoundary) {
    const auto m = example_map();
    for (int i = 0; i < 64; ++i) {
        const cplx zeta = std::polar(1.0, 2.0 * pi * i / 64);
        EXPECT_NEAR(std::abs(schwarz_on_preimage(m, zeta) - std::conj(m.f(zeta))), 0.0, 1e-13);
    }
}

TEST(Schwarz, PreimagesSolveTheMap) {
    const auto m = example_map();
    const cplx z(0.7, 1.3);
    for (const auto& zeta : m.preimages(z))
        EXPECT_NEAR(std::abs(m.f(zeta) - z), 0.0, 1e-12);
}

TEST(Schwarz, BranchPointsAreDoublePreimages) {
    const auto m = example_map();
    const auto bps = branch_points(m);
    ASSERT_FALSE(bps.empty());
    for (const auto& b : bps) {
        EXPECT_LT(std::abs(preimage_discriminant(m, b)), 1e-12);
        EXPECT_LT(std::abs(jump_squared(m, b)), 1e-6);
        const auto z = m.preimages(b);
        EXPECT_LT(std::abs(z[0] - z[1]), 1e-5);
    }
}

TEST(Schwarz, DiskHasNoBranchPoints) {
    EXPECT_THROW(branch_points(ExteriorMap{1.0, 0.0, 0.0, 0.0}), Error);
}

TEST(Trajectories, ConnectBranchPointsWithPositiveMass) {
    const auto m = example_map();
    auto trs = critical_trajectories(m);
    tag_attractors(trs, m, 0.5);
    int connecting = 0;
    for (const auto& t : trs) {
        EXPECT_LT(t.max_residual, 1e-3);
        if (!t.connecting)
            continue;
        ++connecting;
        double mass = 0.0;
        const auto dens = effective_zero_density(t, m, &mass);
        double total = 0.0;
        for (const auto& s : dens) {
            EXPECT_GE(s.weight, -1e-9);
            total += s.weight;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_GT(mass, 0.0);
    }
    EXPECT_GE(connecting, 1);
}

TEST(Trajectories, RealChargeGivesConjugateSymmetry) {
    const auto m = example_map();
    const auto bps = branch_points(m);
    ASSERT_EQ(bps.size(), 2u);
    EXPECT_NEAR(std::abs(bps[0] - std::conj(bps[1])), 0.0, 1e-10);
}

TEST(Geometry, DistanceToPolyline) {
    const std::vector<cplx> line{cplx(0.0), cplx(1.0, 0.0), cplx(1.0, 1.0)};
    EXPECT_DOUBLE_EQ(distance_to_polyline(line, cplx(0.5, -0.5)), 0.5);
    EXPECT_DOUBLE_EQ(distance_to_polyline(line, cplx(2.0, 0.5)), 1.0);
    EXPECT_NEAR(distance_to_polyline(line, cplx(-3.0, 4.0)), 5.0, 1e-15);
}

TEST(Potential, ComparisonOfIdenticalPotentialsIsZero) {
    const auto m = example_map();
    const SupportPotential us{SupportGeometry(m)};
    const std::vector<cplx> zs{cplx(3.0, 0.0), cplx(0.0, 2.5), cplx(-2.0, -2.0)};
    const auto cmp = external_potential_compare([&](cplx z) { return 2.0 * 0.5 / pi * us(z); }, us, 0.5, zs);
    EXPECT_NEAR(cmp.sup, 0.0, 1e-15);
    EXPECT_EQ(cmp.error.size(), zs.size());
}
