#include "qdom/quadrature.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

using namespace qdom;

namespace {

// int |z|^{2k} |z|^{N beta} e^{-N alpha |z|^2} dm for a charge beta at the origin
double radial_moment(double Na, double c, int k) {
    return pi * std::exp(boost::math::lgamma(k + c + 1.0) - (k + c + 1.0) * std::log(Na));
}

} // namespace

TEST(Grid, GaussianMassAndMoments) {
    const PerturbedPotential p(1.0, PointChargeMeasure{});
    const auto g = build_grid<long double>(p, 1e-14, {}, 20);
    EXPECT_NEAR(static_cast<double>(absolute_moment(g, 0)), pi, 1e-12);
    for (int k : {2, 6, 10, 20})
        EXPECT_NEAR(static_cast<double>(absolute_moment(g, k)) / radial_moment(1.0, 0.0, k / 2), 1.0, 1e-12);
}

TEST(Grid, OriginChargeIsGraded) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.0), 0.3}}), 3.0);
    const auto g = build_grid<long double>(p, 1e-14, {}, 16);
    for (int k : {0, 4, 16})
        EXPECT_NEAR(static_cast<double>(absolute_moment(g, k)) / radial_moment(1.5, 0.45, k / 2), 1.0, 1e-11);
}

TEST(Grid, OffCenterChargeMassConverges) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.5), 0.7}}), 2.0);
    const auto a = build_grid<long double>(p, 1e-14, {}, 10);
    const auto b = build_grid<long double>(p, 1e-14, {0, 2 * a.angular}, 10);
    EXPECT_NEAR(static_cast<double>(absolute_moment(a, 0) / absolute_moment(b, 0)), 1.0, 1e-10);
    EXPECT_NEAR(static_cast<double>(absolute_moment(a, 10) / absolute_moment(b, 10)), 1.0, 1e-10);
}

TEST(Grid, TruncationRadiusCoversTheTail) {
    const PerturbedPotential p(0.5, PointChargeMeasure{}, 4.0);
    const double R = truncation_radius(p, 1e-12, 0);
    // relative Gaussian tail beyond R is e^{-N alpha R^2}
    EXPECT_LT(std::exp(-2.0 * R * R), 1e-12);
    EXPECT_GT(truncation_radius(p, 1e-12, 40), R);
}

TEST(Grid, CastKeepsTheNodes) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    const auto g = build_grid<long double>(p, 1e-10, {}, 4);
    const auto d = g.cast<double>();
    ASSERT_EQ(d.size(), g.size());
    EXPECT_NEAR(static_cast<double>(absolute_moment(d, 0)), static_cast<double>(absolute_moment(g, 0)), 1e-13);
}

TEST(Grid, RejectsBadOrders) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    EXPECT_THROW(build_grid<double>(p, 0.0), Error);
    EXPECT_THROW(build_grid<double>(p, 1e-10, {-1, 0}), Error);
}

TEST(InnerProduct, MonomialsAreOrthogonalForRadialWeights) {
    const PerturbedPotential p(1.0, PointChargeMeasure{});
    const auto g = build_grid<long double>(p, 1e-14, {}, 8);
    const auto ip = inner_product(g, [](auto z) { return z * z; }, [](auto z) { return z; });
    EXPECT_LT(static_cast<double>(std::abs(ip)), 1e-15);
}

TEST(Cauchy, GaussianClosedForm) {
    // int e^{-|w|^2} / (z - w) dm(w) = pi (1 - e^{-|z|^2}) / z
    const PerturbedPotential p(1.0, PointChargeMeasure{});
    for (cplx z : {cplx(0.3, 0.2), cplx(1.2, -0.7), cplx(0.0, 2.0), cplx(5.0, 3.0)}) {
        const auto g = build_grid<long double>(p, 1e-15, {0, cauchy_angular(p, {z}, 4)}, 4);
        const auto est = cauchy_transform(g, [](std::complex<long double>) { return std::complex<long double>(1); }, z);
        const cplx exact = pi * (1.0 - std::exp(-std::norm(z))) / z;
        EXPECT_NEAR(std::abs(est.value - exact), 0.0, 1e-11) << z;
        EXPECT_LE(std::abs(est.value), est.bound);
    }
}

TEST(Cauchy, AtTheOriginOfASymmetricWeight) {
    const PerturbedPotential p(1.0, PointChargeMeasure{});
    const auto g = build_grid<long double>(p, 1e-15, {}, 4);
    const auto est = cauchy_transform(g, [](std::complex<long double>) { return std::complex<long double>(1); }, cplx(0.0));
    EXPECT_NEAR(std::abs(est.value), 0.0, 1e-12);
}

TEST(Cauchy, AngularCountResolvesThePartition) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.5), 1.0}}));
    const int base = default_angular(p, 12);
    const int near = cauchy_angular(p, {cplx(0.5, 0.5)}, 12);
    EXPECT_GT(near, base);
    EXPECT_EQ(near % 8, 0);
    EXPECT_EQ(cauchy_angular(p, {}, 12), base);
}

TEST(Cauchy, WidthShrinksNearCharges) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    EXPECT_DOUBLE_EQ(cauchy_width(p, cplx(3.0, 0.0), 0.1), 0.1);
    EXPECT_NEAR(cauchy_width(p, cplx(0.42, 0.0), 0.1), 0.02, 1e-15);
}
