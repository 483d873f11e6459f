#include "qdom/fekete.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qdom;

TEST(Energy, TwoPointsClosedForm) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    const double q = p.rescaled().alpha();
    const double a = 0.3;
    // log 1/(2a) + 2 * 2 q a^2
    EXPECT_NEAR(fekete_energy({cplx(a, 0.0), cplx(-a, 0.0)}, p).value(), -std::log(2 * a) + 4 * q * a * a, 1e-14);
}

TEST(Energy, CoincidentPointsAreInfinite) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    EXPECT_TRUE(fekete_energy({cplx(0.1), cplx(0.1)}, p).is_infinite());
    EXPECT_THROW(fekete_gradient({cplx(0.1), cplx(0.1)}, p), Error);
}

TEST(Energy, GradientMatchesDifferences) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.2), 0.4}}));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> z(7);
    for (auto& x : z)
        x = cplx(u(rng), u(rng));
    const auto g = fekete_gradient(z, p);
    const double h = 1e-6;
    for (std::size_t i = 0; i < z.size(); ++i) {
        auto zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const double dx = (fekete_energy(zp, p).value() - fekete_energy(zm, p).value()) / (2 * h);
        zp = z;
        zm = z;
        zp[i] += cplx(0.0, h);
        zm[i] -= cplx(0.0, h);
        const double dy = (fekete_energy(zp, p).value() - fekete_energy(zm, p).value()) / (2 * h);
        EXPECT_NEAR(std::abs(g[i] - cplx(dx, dy)), 0.0, 1e-6);
    }
}

TEST(Energy, ChangeAgreesWithDifference) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.2), 0.4}}));
    const std::vector<cplx> z{cplx(0.5, 0.1), cplx(-0.4, 0.2), cplx(0.0, -0.6)};
    const std::vector<cplx> dz{cplx(1e-3, 0.0), cplx(0.0, -2e-3), cplx(5e-4, 5e-4)};
    std::vector<cplx> moved(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        moved[i] = z[i] + dz[i];
    EXPECT_NEAR(fekete_energy_change(z, dz, p).value(),
                fekete_energy(moved, p).value() - fekete_energy(z, p).value(), 1e-13);
}

TEST(Descent, TwoPointsSitSymmetrically) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    const double q = p.rescaled().alpha();
    const auto c = fekete_minimize(2, p, 7, {1e-10, 50000, 1e-4, 2});
    ASSERT_EQ(c.points.size(), 2u);
    EXPECT_NEAR(std::abs(c.points[0] + c.points[1]), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(c.points[0] - c.points[1]), 2.0 / std::sqrt(8.0 * q), 1e-8);
    EXPECT_LT(c.gradient_norm, 1e-10);
}

TEST(Descent, SameSeedIsReproducible) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    const auto a = fekete_descent(20, p, 5);
    const auto b = fekete_descent(20, p, 5);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i)
        EXPECT_EQ(a.points[i], b.points[i]);
}

TEST(Descent, IterationCapIsReported) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    EXPECT_THROW(fekete_descent(30, p, 1, {1e-14, 3, 1e-4, 1}), Error);
}

TEST(Geometry, LensArea) {
    EXPECT_NEAR(disk_overlap_area(1.0, cplx(0.0), 0.5), pi * 0.25, 1e-15);
    EXPECT_DOUBLE_EQ(disk_overlap_area(1.0, cplx(3.0, 0.0), 0.5), 0.0);
    // two unit disks at distance 1
    EXPECT_NEAR(disk_overlap_area(1.0, cplx(1.0, 0.0), 1.0), 2.0 * pi / 3.0 - std::sqrt(3.0) / 2.0, 1e-14);
}

TEST(Discrepancy, CavitySupportIsFilled) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    const auto geom = classify_support(p);
    const auto c = fekete_minimize(60, p, 11, {1e-8, 50000, 1e-4, 2});
    const auto rep = fekete_discrepancy(c.points, p, geom);
    EXPECT_GE(rep.fraction_in_support, 0.9);
    EXPECT_LT(rep.max_discrepancy, 3.0 / std::sqrt(60.0));
    double expected = 0.0;
    for (const auto& r : rep.rings)
        expected += r.expected;
    EXPECT_NEAR(expected, 1.0, 1e-12);
}

TEST(Discrepancy, ExteriorMapRingsCarryTheMass) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(2.0, 0.0), 0.5}}));
    const auto rep = fekete_discrepancy({}, p, classify_support(p), 8);
    double expected = 0.0;
    for (const auto& r : rep.rings)
        expected += r.expected;
    EXPECT_NEAR(expected, 1.0, 1e-3);
}
