#include "qdom/equilibrium.hpp"

#include <gtest/gtest.h>

using namespace qdom;

TEST(Geometry, RadiiFromMasses) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    EXPECT_NEAR(outer_radius(p), std::sqrt(1.5), 1e-15);
    EXPECT_NEAR(cavity_radius(0.5, 0.5), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(outer_radius(PerturbedPotential(0.5, PointChargeMeasure{})), 1.0, 1e-15);
}

TEST(Geometry, CavityCaseIsClosedForm) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    const auto geom = classify_support(p);
    const auto& d = std::get<DiskWithCavities>(geom);
    ASSERT_EQ(d.cavities.size(), 1u);
    EXPECT_NEAR(support_area(geom), pi / (2.0 * 0.5), 1e-14);
    EXPECT_TRUE(in_support(geom, cplx(-1.0, 0.0)));
    EXPECT_FALSE(in_support(geom, cplx(0.3, 0.1)));
    EXPECT_FALSE(in_support(geom, cplx(1.3, 0.0)));
}

TEST(Geometry, EmptyMeasureGivesTheUnitDisk) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    const auto geom = classify_support(p);
    EXPECT_NEAR(std::get<DiskWithCavities>(geom).R, 1.0, 1e-15);
    EXPECT_NEAR(robin_constant(geom, p), 0.5, 1e-15);
}

TEST(Geometry, OverlappingCavitiesAreUnsupported) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.5, 0.0), 0.5}, {cplx(-0.5, 0.0), 0.5}}));
    try {
        classify_support(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Unsupported);
    }
}

TEST(ExteriorMap, WorkedExample) {
    const auto m = solve_exterior_map(0.5, 0.5, cplx(2.0, 0.0));
    EXPECT_NEAR(m.rho, 1.00701032981, 1e-10);
    EXPECT_NEAR(m.u.real(), -0.214346128122, 1e-10);
    EXPECT_NEAR(m.v.real(), -0.0952119203315, 1e-10);
    EXPECT_NEAR(m.A.real(), 0.444197061855, 1e-10);
    for (double r : system_residuals(m, 0.5, 0.5, cplx(2.0, 0.0)))
        EXPECT_LT(std::abs(r), 1e-12);
    EXPECT_NEAR(support_area(SupportGeometry(m)), pi, 1e-12);
}

TEST(ExteriorMap, RotatesWithTheCharge) {
    const cplx rot = std::polar(1.0, 0.9);
    const auto m0 = solve_exterior_map(0.5, 0.5, cplx(1.7, 0.0));
    const auto m1 = solve_exterior_map(0.5, 0.5, 1.7 * rot);
    for (double t : {0.0, 1.0, 2.5})
        EXPECT_NEAR(std::abs(m1.f(rot * std::polar(1.0, t)) - rot * m0.f(std::polar(1.0, t))), 0.0, 1e-10);
}

TEST(Cubic, UniqueRootRegime) {
    const CubicProblem cp{1.6, 0.5, 0.5};
    ASSERT_TRUE(cp.in_unique_root_regime());
    EXPECT_LT(cp.g(1.0), 0.0);
    const double x = solve_cubic(cp);
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
    EXPECT_NEAR(cp.g(x), 0.0, 1e-12);
}

TEST(Equilibrium, CavityCaseIsExact) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    const auto geom = classify_support(p);
    const auto rep = verify_equilibrium(geom, p);
    EXPECT_TRUE(rep.pass);
    EXPECT_LT(rep.max_dev_on, 1e-8);
    EXPECT_GT(rep.min_margin_off, 0.0);
}

TEST(Equilibrium, InflatedSupportFails) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    auto geom = classify_support(p);
    std::get<DiskWithCavities>(geom).R *= 1.02;
    EXPECT_FALSE(verify_equilibrium(geom, p).pass);
}

TEST(Equilibrium, EffectivePotentialRisesOutsideTheDisk) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    const auto geom = classify_support(p);
    const double F = robin_constant(geom, p);
    EXPECT_NEAR(effective_potential(geom, p, cplx(-0.5, 0.2)).value(), F, 1e-12);
    EXPECT_GT(effective_potential(geom, p, cplx(2.0, 0.0)).value(), F);
    EXPECT_GT(effective_potential(geom, p, cplx(0.3, 0.2)).value(), F);
}

TEST(SupportPotential, BoundaryFormMatchesTheDisk) {
    // an exterior map with v = 0 is a disk of radius rho centered at u
    ExteriorMap m{1.3, cplx(0.2, -0.1), cplx(0.0), cplx(0.0)};
    const SupportPotential us(m);
    for (cplx z : {cplx(0.0), cplx(0.5, 0.5), cplx(3.0, 1.0)})
        EXPECT_NEAR(us(z), log_potential_disk({m.u, m.rho}, z), 1e-9);
}
