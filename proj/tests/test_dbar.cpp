#include "qdom/dbar.hpp"
#include "qdom/verify.hpp"

#include <gtest/gtest.h>

using namespace qdom;

namespace {

struct Fixture {
    PerturbedPotential p;
    QuadGrid<long double> grid;
    OrthoPolySet<long double> ops;
};

Fixture make(const PerturbedPotential& p, int nmax, std::vector<cplx> samples = {}) {
    auto g = build_grid<long double>(p, 1e-14, {0, cauchy_angular(p, samples, 2 * nmax + 2)}, 2 * nmax + 2);
    auto ops = build_orthopolys<long double>(p, g, nmax);
    return {p, std::move(g), std::move(ops)};
}

} // namespace

TEST(Dbar, GaussianFirstColumn) {
    const auto f = make(PerturbedPotential(1.0, PointChargeMeasure{}), 3);
    const DbarMatrix<long double> Y(f.ops, f.grid, 1);
    const cplx z(0.4, 0.3);
    EXPECT_NEAR(std::abs(cplx(Y.Y11(z)) - z), 0.0, 1e-13);
    // h_0 = pi, so Y21 = -1
    EXPECT_NEAR(std::abs(cplx(Y.Y21(z)) + 1.0), 0.0, 1e-13);
}

TEST(Dbar, GaussianSecondRowClosedForm) {
    // Y22 = (1/pi) int e^{-|w|^2} / (z - w) = (1 - e^{-|z|^2}) / z for k = 1
    const cplx z(0.7, -0.2);
    const auto f = make(PerturbedPotential(1.0, PointChargeMeasure{}), 3, {z});
    const DbarMatrix<long double> Y(f.ops, f.grid, 1);
    EXPECT_NEAR(std::abs(cplx(Y.Y22(z)) - (1.0 - std::exp(-std::norm(z))) / z), 0.0, 1e-11);
}

TEST(Dbar, JumpRelationIsSecondOrder) {
    const cplx z0(0.5, 0.5);
    const auto f = make(cavity_config(), 3, {z0});
    const DbarMatrix<long double> Y(f.ops, f.grid, 2);
    const auto rep = dbar_order_check(Y, z0);
    EXPECT_GE(rep.order12, 1.8);
    EXPECT_GE(rep.order22, 1.8);
    for (const auto& r : rep.residuals) {
        EXPECT_LT(r[0], 1e-9);
        EXPECT_LT(r[2], 1e-9);
    }
}

TEST(Dbar, StencilNearAChargeIsRejected) {
    const auto f = make(cavity_config(), 2);
    const DbarMatrix<long double> Y(f.ops, f.grid, 1);
    EXPECT_THROW(dbar_residual(Y, cplx(0.301, 0.0), 1e-2), Error);
}

TEST(Dbar, FarFieldMatchesTheQuadrature) {
    const auto f = make(cavity_config(), 4);
    const DbarMatrix<long double> Y(f.ops, f.grid, 3);
    const cplx z = 1.5 * Y.far_radius() * std::polar(1.0, 0.7);
    const auto far = cplx(Y.cauchy(2, z));
    // direct sum is accurate this far out
    std::complex<long double> acc = 0;
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        acc += f.grid.lam[i] * std::conj(f.ops.eval(2, f.grid.z[i])) / (cplxl(z) - f.grid.z[i]);
    EXPECT_NEAR(std::abs(far - cplx(acc)) / std::abs(far), 0.0, 1e-10);
}

TEST(Dbar, NormalizationAtInfinity) {
    const auto f = make(cavity_config(), 3);
    const double R = outer_radius(f.p);
    for (int k : {1, 3}) {
        const DbarMatrix<long double> Y(f.ops, f.grid, k);
        const auto rep = asymptotic_normalization(Y, {4 * R, 8 * R, 16 * R, 32 * R});
        for (double s : rep.slopes)
            EXPECT_NEAR(s, -1.0, 0.2) << "k = " << k;
        for (const auto& v : rep.values)
            EXPECT_LT(v[3], 1.0);
    }
}

TEST(Dbar, LoglogSlopeOfAPowerLaw) {
    EXPECT_NEAR(loglog_slope({1.0, 2.0, 4.0}, {3.0, 0.75, 0.1875}), -2.0, 1e-12);
}

TEST(Dbar, UniquenessRelations) {
    const auto f = make(cavity_config(8.0), 4);
    for (int k = 1; k <= 4; ++k) {
        const auto u = uniqueness_crosscheck(f.ops, f.grid, k);
        EXPECT_LT(u.max_orthogonality, 1e-12);
        EXPECT_NEAR(u.normalization, 1.0, 1e-12);
    }
    EXPECT_THROW(uniqueness_crosscheck(f.ops, f.grid, 0), Error);
}

TEST(Dbar, FasterDecayStillSatisfiesTheBound) {
    AsymptoticReport rep;
    rep.slopes = {-3.0, -1.0, -1.1, -3.5};
    EXPECT_TRUE(rep.decays());
    EXPECT_FALSE(rep.matches());
    rep.slopes[1] = -0.5;
    EXPECT_FALSE(rep.decays());
    rep.exact[1] = true;
    EXPECT_TRUE(rep.decays());
}
