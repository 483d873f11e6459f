#pragma once

#include "qdom/core.hpp"
#include "qdom/orthopoly.hpp"
#include "qdom/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace qdom {

/// int conj(P_m(w)) / (z - w) dlambda(w) for z outside the grid, rewritten by
/// orthogonality as (1 / P_m(z)) int |P_m(w)|^2 / (z - w) dlambda(w).
/// Also returns the difference from h_m / z^{m+1} without cancelling the leading term.
template <class Real>
struct FarCauchy {
    std::complex<Real> value;
    std::complex<Real> minus_leading;
};

template <class Real>
FarCauchy<Real> far_cauchy_conj_poly(const OrthoPolySet<Real>& ops, const QuadGrid<Real>& grid,
                                     const std::vector<Real>& abs2, int m, std::complex<Real> z) {
    using C = std::complex<Real>;
    // E = int |P_m|^2 w / (z (z - w)) dlambda, so int |P_m|^2 / (z - w) = h_m / z + E
    std::vector<C> t(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        t[i] = grid.lam[i] * abs2[i] * grid.z[i] / (z - grid.z[i]);
    const C E = pairwise_sum(t) / z;
    const Real h = ops.norm(m);
    const C Pz = ops.eval(m, z);
    // z^m - P_m(z) from the lower coefficients
    const auto c = ops.monic_coefficients(m);
    C lower(0);
    C zp(1);
    for (int j = 0; j < m; ++j) {
        lower += c[j] * zp;
        zp *= z;
    }
    const C zm1 = zp * z; // z^{m+1}
    FarCauchy<Real> out;
    out.value = (h / z + E) / Pz;
    out.minus_leading = (-h * lower + E * zm1) / (Pz * zm1);
    return out;
}

/// The 2x2 matrix Y(z) built from P_k, P_{k-1} and Cauchy transforms of their
/// conjugates, with node values cached for repeated evaluation.
template <class Real>
class DbarMatrix {
public:
    using C = std::complex<Real>;

    DbarMatrix(const OrthoPolySet<Real>& ops, const QuadGrid<Real>& grid, int k, CauchyOptions opt = {})
        : ops_(ops), grid_(grid), k_(k), opt_(opt) {
        if (k < 1 || k > ops.n_max())
            throw Error(ErrorCode::InvalidArgument, "need 1 <= k <= n_max");
        const std::size_t M = grid.size();
        ck_.resize(M);
        ck1_.resize(M);
        a2k_.resize(M);
        a2k1_.resize(M);
        for (std::size_t i = 0; i < M; ++i) {
            const auto P = ops.eval_all(k, grid.z[i]);
            ck_[i] = std::conj(P[k]);
            ck1_[i] = std::conj(P[k - 1]);
            a2k_[i] = std::norm(P[k]);
            a2k1_[i] = std::norm(P[k - 1]);
        }
        far_ = grid.truncation_radius + 8.0 * opt.width;
        for (const auto& z : grid.z)
            far_ = std::max(far_, static_cast<double>(std::abs(z)) + 8.0 * opt.width);
    }

    int k() const { return k_; }
    const OrthoPolySet<Real>& polys() const { return ops_; }
    const QuadGrid<Real>& grid() const { return grid_; }

    C Y11(cplx z) const { return ops_.eval(k_, lift(z)); }
    C Y21(cplx z) const { return -Real(pi) / ops_.norm(k_ - 1) * ops_.eval(k_ - 1, lift(z)); }
    C Y12(cplx z) const { return -cauchy(k_, z) / Real(pi); }
    C Y22(cplx z) const { return cauchy(k_ - 1, z) / ops_.norm(k_ - 1); }

    std::array<C, 4> all(cplx z) const { return {Y11(z), Y12(z), Y21(z), Y22(z)}; }

    /// int conj(P_m) / (z - w) dlambda for m in {k-1, k}.
    C cauchy(int m, cplx z) const {
        if (m != k_ && m != k_ - 1)
            throw Error(ErrorCode::InvalidArgument, "only degrees k and k-1 are cached");
        if (std::abs(z) > far_)
            return far_cauchy_conj_poly(ops_, grid_, m == k_ ? a2k_ : a2k1_, m, lift(z)).value;
        auto f = [this, m](C w) { return std::conj(ops_.eval(m, w)); };
        const auto est = cauchy_transform(grid_, m == k_ ? ck_ : ck1_, f, z, opt_);
        return lift(est.value);
    }

    /// int conj(P_m)/(z - w) dlambda - h_m / z^{m+1}, valid only beyond the grid.
    C cauchy_minus_leading(int m, cplx z) const {
        return far_cauchy_conj_poly(ops_, grid_, m == k_ ? a2k_ : a2k1_, m, lift(z)).minus_leading;
    }

    double far_radius() const { return far_; }

private:
    static C lift(cplx z) { return C(static_cast<Real>(z.real()), static_cast<Real>(z.imag())); }

    const OrthoPolySet<Real>& ops_;
    const QuadGrid<Real>& grid_;
    int k_;
    CauchyOptions opt_;
    std::vector<C> ck_, ck1_;
    std::vector<Real> a2k_, a2k1_;
    double far_ = 0.0;
};

template <class Real>
DbarMatrix<Real> assemble_Y(const OrthoPolySet<Real>& ops, const QuadGrid<Real>& grid, int k, CauchyOptions opt = {}) {
    return DbarMatrix<Real>(ops, grid, k, opt);
}

/// Central-difference Wirtinger derivative (1/2)(d/dx + i d/dy) of a field.
template <class F>
auto dbar_fd(F&& field, cplx z, double h) {
    const auto fx = field(z + h) - field(z - h);
    const auto fy = field(z + cplx(0.0, h)) - field(z - cplx(0.0, h));
    using T = decltype(fx);
    using R = typename T::value_type;
    return (fx + T(0, 1) * fy) / R(4.0 * h);
}

/// Residuals of dY/dzbar = conj(Y) [[0, -w], [0, 0]] with w = e^{-NV}:
/// entries 0,1,2,3 are |dbar Y11|, |dbar Y12 + conj(Y11) w|, |dbar Y21|, |dbar Y22 + conj(Y21) w|.
template <class Real>
std::array<double, 4> dbar_residual(const DbarMatrix<Real>& Y, cplx z, double h) {
    for (const auto& c : Y.polys().potential().nu())
        if (std::abs(z - c.location) <= 2.0 * h)
            throw Error(ErrorCode::InvalidArgument, "stencil touches a charge");
    using C = std::complex<Real>;
    const Real w = static_cast<Real>(Y.polys().potential().weight_ld(cplxl(z)));
    const C y11 = Y.Y11(z), y21 = Y.Y21(z);
    std::array<double, 4> r{};
    r[0] = static_cast<double>(std::abs(dbar_fd([&](cplx x) { return Y.Y11(x); }, z, h)));
    r[1] = static_cast<double>(std::abs(dbar_fd([&](cplx x) { return Y.Y12(x); }, z, h) + std::conj(y11) * w));
    r[2] = static_cast<double>(std::abs(dbar_fd([&](cplx x) { return Y.Y21(x); }, z, h)));
    r[3] = static_cast<double>(std::abs(dbar_fd([&](cplx x) { return Y.Y22(x); }, z, h) + std::conj(y21) * w));
    return r;
}

struct DbarOrderReport {
    std::vector<double> steps;
    std::vector<std::array<double, 4>> residuals;
    double order12 = 0.0; // smallest observed order over consecutive step pairs
    double order22 = 0.0;
    double scale12 = 0.0; // |conj(Y11)| w, the size of the right side
    double scale22 = 0.0;
};

/// Runs dbar_residual over decreasing steps and estimates the convergence order of
/// the second column. A residual that grows when the step shrinks while still above
/// the rounding floor means the step is too small for the arithmetic.
template <class Real>
DbarOrderReport dbar_order_check(const DbarMatrix<Real>& Y, cplx z, std::vector<double> steps = {1e-2, 5e-3, 2.5e-3}) {
    DbarOrderReport rep;
    rep.steps = steps;
    const double w = static_cast<double>(Y.polys().potential().weight_ld(cplxl(z)));
    rep.scale12 = static_cast<double>(std::abs(Y.Y11(z))) * w;
    rep.scale22 = static_cast<double>(std::abs(Y.Y21(z))) * w;
    for (double h : steps)
        rep.residuals.push_back(dbar_residual(Y, z, h));
    rep.order12 = rep.order22 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
        const double lr = std::log(steps[i] / steps[i + 1]);
        for (int e : {1, 3}) {
            const double a = rep.residuals[i][e], b = rep.residuals[i + 1][e];
            const double floor = 1e-13 * (e == 1 ? rep.scale12 : rep.scale22) / steps[i + 1];
            if (b > a && b > floor)
                throw Error(ErrorCode::StepTooSmall, "residual grows as the step shrinks");
            const double ord = (a > 0.0 && b > 0.0) ? std::log(a / b) / lr : std::numeric_limits<double>::infinity();
            (e == 1 ? rep.order12 : rep.order22) = std::min(e == 1 ? rep.order12 : rep.order22, ord);
        }
    }
    return rep;
}

struct AsymptoticReport {
    std::vector<double> radii;
    // |Y11 z^-k - 1|, |Y21 z^-k|, |z^k Y12|, |z^k Y22 - 1| per radius
    std::vector<std::array<double, 4>> values;
    std::array<double, 4> slopes{};
    // entries at rounding level at every radius; their slope is NaN
    std::array<bool, 4> exact{};

    /// Every entry decays at least like 1/|z|; symmetric weights can cancel the leading term.
    bool decays(double tol = 0.2) const {
        for (int e = 0; e < 4; ++e)
            if (!exact[e] && !(slopes[e] <= -1.0 + tol))
                return false;
        return true;
    }

    /// Every entry decays like 1/|z| and not faster.
    bool matches(double tol = 0.2) const {
        for (int e = 0; e < 4; ++e)
            if (!exact[e] && !(std::abs(slopes[e] + 1.0) <= tol))
                return false;
        return true;
    }
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Checks Y diag(z^-k, z^k) -> I: each of the four deviations should decay like 1/|z|.
template <class Real>
AsymptoticReport asymptotic_normalization(const DbarMatrix<Real>& Y, const std::vector<double>& radii,
                                          double direction = 0.7) {
    using C = std::complex<Real>;
    AsymptoticReport rep;
    rep.radii = radii;
    const int k = Y.k();
    for (double r : radii) {
        const cplx z = std::polar(r, direction);
        const C zl(static_cast<Real>(z.real()), static_cast<Real>(z.imag()));
        const C zk = std::pow(zl, k);
        std::array<double, 4> v{};
        v[0] = static_cast<double>(std::abs(Y.Y11(z) / zk - Real(1)));
        v[1] = static_cast<double>(std::abs(Y.Y21(z) / zk));
        v[2] = static_cast<double>(std::abs(zk * Y.Y12(z)));
        if (std::abs(z) > Y.far_radius()) {
            // z^k Y22 - 1 = z^k (int conj(P_{k-1})/(z - w) - h_{k-1} / z^k) / h_{k-1}
            v[3] = static_cast<double>(std::abs(zk * Y.cauchy_minus_leading(k - 1, z) / Y.polys().norm(k - 1)));
        } else {
            v[3] = static_cast<double>(std::abs(zk * Y.Y22(z) - Real(1)));
        }
        rep.values.push_back(v);
    }
    for (int e = 0; e < 4; ++e) {
        std::vector<double> y;
        for (const auto& v : rep.values)
            y.push_back(v[e]);
        rep.exact[e] = *std::max_element(y.begin(), y.end()) < 1e-14;
        rep.slopes[e] = rep.exact[e] ? std::numeric_limits<double>::quiet_NaN() : loglog_slope(radii, y);
    }
    return rep;
}

struct UniquenessReport {
    double max_orthogonality = 0.0; // max_{l<k} |int w^l conj(P_k) dlam| / sqrt(int |w|^{2l} dlam h_k)
    double normalization = 0.0;     // -(1/pi) int w^{k-1} conj(Y21) dlam, expected 1
};

/// The moment identities that single out Y: the first row is orthogonal to
/// w^l for l < k, and the second row is normalized against w^{k-1}.
template <class Real>
UniquenessReport uniqueness_crosscheck(const OrthoPolySet<Real>& ops, const QuadGrid<Real>& grid, int k) {
    using C = std::complex<Real>;
    if (k < 1 || k > ops.n_max())
        throw Error(ErrorCode::InvalidArgument, "need 1 <= k <= n_max");
    const std::size_t M = grid.size();
    std::vector<C> pk(M), pk1(M);
    for (std::size_t i = 0; i < M; ++i) {
        const auto P = ops.eval_all(k, grid.z[i]);
        pk[i] = P[k];
        pk1[i] = P[k - 1];
    }
    UniquenessReport rep;
    std::vector<C> t(M);
    for (int l = 0; l < k; ++l) {
        for (std::size_t i = 0; i < M; ++i)
            t[i] = grid.lam[i] * std::pow(grid.z[i], l) * std::conj(pk[i]);
        const Real m2l = absolute_moment(grid, 2 * l);
        using std::sqrt;
        rep.max_orthogonality = std::max(rep.max_orthogonality,
                                         static_cast<double>(std::abs(pairwise_sum(t)) / sqrt(m2l * ops.norm(k))));
    }
    const Real coef = Real(pi) / ops.norm(k - 1);
    for (std::size_t i = 0; i < M; ++i)
        t[i] = grid.lam[i] * std::pow(grid.z[i], k - 1) * std::conj(-coef * pk1[i]);
    rep.normalization = static_cast<double>(std::real(-pairwise_sum(t) / Real(pi)));
    return rep;
}

} // namespace qdom
