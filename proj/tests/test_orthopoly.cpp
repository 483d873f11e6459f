#include "qdom/orthopoly.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

using namespace qdom;

namespace {

long double gaussian_norm(double Na, double c, int k) {
    return std::exp(std::log(pi) + boost::math::lgamma(k + c + 1.0L) - (k + c + 1.0L) * std::log(Na));
}

} // namespace

TEST(OrthoPoly, GaussianGivesMonomialsWithFactorialNorms) {
    const PerturbedPotential p(1.0, PointChargeMeasure{});
    const auto g = build_grid<long double>(p, 1e-16, {}, 20);
    const auto ops = build_orthopolys<long double>(p, g, 10);
    // h_k = pi k! for N alpha = 1
    for (int k = 0; k <= 10; ++k) {
        EXPECT_NEAR(static_cast<double>(ops.norm(k) / (pi * std::tgamma(k + 1.0L))), 1.0, 1e-12);
        EXPECT_LT(off_monomial_mass(ops, g, k), 1e-10);
    }
    const cplx z(0.4, -1.1);
    EXPECT_NEAR(std::abs(cplx(ops.eval(5, cplxl(z))) - std::pow(z, 5)), 0.0, 1e-12);
}

TEST(OrthoPoly, OriginChargeShiftsTheGammaIndex) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.0), 0.5}}), 4.0);
    const auto g = build_grid<long double>(p, 1e-16, {}, 24);
    const auto ops = build_orthopolys<long double>(p, g, 12);
    for (int k = 0; k <= 12; ++k)
        EXPECT_NEAR(static_cast<double>(ops.norm(k) / gaussian_norm(2.0, 1.0, k)), 1.0, 1e-10);
}

TEST(OrthoPoly, GenericChargeIsOrthogonal) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.6, 0.4), 0.5}}), 20.0);
    const auto g = build_grid<long double>(p, 1e-16, {}, 40);
    const auto ops = build_orthopolys<long double>(p, g, 20);
    EXPECT_LT(gram_residual(ops, g, 20), 1e-10);
}

TEST(OrthoPoly, AutoPrecisionAgreesWithExtended) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.6, 0.4), 0.5}}), 10.0);
    const auto g = build_grid<long double>(p, 1e-15, {}, 16);
    const auto a = build_orthopolys_auto(p, g, 8);
    const auto b = build_orthopolys<long double>(p, g, 8);
    for (int k = 0; k <= 8; ++k)
        EXPECT_NEAR(static_cast<double>(a.norm(k) / b.norm(k)), 1.0, 1e-10);
}

TEST(OrthoPoly, DerivativeMatchesDifferences) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}), 6.0);
    const auto g = build_grid<long double>(p, 1e-14, {}, 12);
    const auto ops = build_orthopolys<long double>(p, g, 6);
    const cplxl z(0.3L, 0.7L);
    const long double h = 1e-5L;
    const auto [v, d] = ops.eval_with_derivative(6, z);
    const auto fd = (ops.eval(6, z + h) - ops.eval(6, z - h)) / (2 * h);
    EXPECT_NEAR(static_cast<double>(std::abs(d - fd) / std::abs(d)), 0.0, 1e-8);
    EXPECT_NEAR(static_cast<double>(std::abs(v - ops.eval(6, z))), 0.0, 1e-15);
}

TEST(OrthoPoly, RejectsDegreesBeyondTheSet) {
    const PerturbedPotential p(1.0, PointChargeMeasure{});
    const auto g = build_grid<long double>(p, 1e-12, {}, 6);
    const auto ops = build_orthopolys<long double>(p, g, 3);
    EXPECT_THROW(ops.eval(4, cplxl(1.0L)), Error);
    EXPECT_THROW(build_orthopolys<long double>(p, g, -1), Error);
}

TEST(Zeros, ReproduceTheCoefficients) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(2.0, 0.0), 0.5}}), 16.0);
    const auto g = build_grid<long double>(p, 1e-15, {}, 16);
    const auto ops = build_orthopolys<long double>(p, g, 8);
    const auto zs = compute_zeros(ops, 8);
    EXPECT_LT(zs.max_residual, 1e-10);
    const auto c = coefficients_from_zeros(zs.zeros);
    const auto ref = ops.monic_coefficients(8);
    for (int j = 0; j <= 8; ++j)
        EXPECT_NEAR(std::abs(c[j] - cplx(ref[j])), 0.0, 1e-8 * (1.0 + std::abs(cplx(ref[j]))));
    // real charge location: zeros come in conjugate pairs
    for (const auto& z : zs.zeros) {
        double best = 1e300;
        for (const auto& w : zs.zeros)
            best = std::min(best, std::abs(w - std::conj(z)));
        EXPECT_LT(best, 1e-8);
    }
}

TEST(Zeros, StayInsideTheOuterRadius) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}), 20.0);
    const auto g = build_grid<long double>(p, 1e-15, {}, 20);
    const auto ops = build_orthopolys<long double>(p, g, 10);
    const auto zs = compute_zeros(ops, 10);
    EXPECT_DOUBLE_EQ(radius_bound_check(p, zs, 1e-6).fraction_inside, 1.0);
}

TEST(OnePointFunction, IntegratesToOne) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.5), 0.5}}), 12.0);
    const auto g = build_grid<long double>(p, 1e-14, {}, 12);
    const auto ops = build_orthopolys<long double>(p, g, 6);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.w[i] > 0)
            acc += g.w[i] * one_point_function(ops, 6, cplx(static_cast<double>(g.z[i].real()), static_cast<double>(g.z[i].imag())));
    EXPECT_NEAR(static_cast<double>(acc), 1.0, 1e-10);
}

TEST(Potential, PolynomialAndZeroFormsAgree) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(2.0, 0.0), 0.5}}), 12.0);
    const auto g = build_grid<long double>(p, 1e-14, {}, 12);
    const auto ops = build_orthopolys<long double>(p, g, 6);
    const auto zs = compute_zeros(ops, 6);
    for (cplx z : {cplx(3.0, 0.0), cplx(0.5, 2.0)})
        EXPECT_NEAR(polynomial_potential(ops, 6, z).value(), zero_potential(zs, z).value(), 1e-10);
}
