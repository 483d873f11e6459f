#pragma once

#include "qdom/core.hpp"
#include "qdom/measures.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace qdom {

/// Radial panels / angular count; zero picks a size from N, alpha and the degree.
struct QuadOrders {
    int radial_panels = 0;
    int angular = 0;
};

inline constexpr int gauss_points = 20;

namespace detail {

/// Gauss-Legendre rule on [a, b], appended to (x, w).
inline void gauss_panel(long double a, long double b, std::vector<long double>& x, std::vector<long double>& w) {
    using rule = boost::math::quadrature::gauss<long double, gauss_points>;
    const auto& ab = rule::abscissa();
    const auto& wt = rule::weights();
    const long double mid = 0.5L * (a + b), half = 0.5L * (b - a);
    for (std::size_t i = ab.size(); i-- > 0;) {
        x.push_back(mid - half * ab[i]);
        w.push_back(half * wt[i]);
    }
    for (std::size_t i = 0; i < ab.size(); ++i) {
        if (ab[i] == 0.0L)
            continue;
        x.push_back(mid + half * ab[i]);
        w.push_back(half * wt[i]);
    }
}

/// Smooth step: 1 on [0, lo], 0 beyond hi, C-infinity in between.
inline long double smooth_cutoff(long double s, long double lo, long double hi) {
    if (s <= lo)
        return 1.0L;
    if (s >= hi)
        return 0.0L;
    const long double x = (s - lo) / (hi - lo);
    const long double a = std::exp(-1.0L / (1.0L - x));
    const long double b = std::exp(-1.0L / x);
    return a / (a + b);
}

/// Panels on [0, outer] that halve towards zero, for integrands like s^p with p not an even integer.
inline void graded_panels(long double outer, int levels, std::vector<long double>& x, std::vector<long double>& w) {
    long double hi = outer;
    for (int j = 0; j < levels; ++j) {
        gauss_panel(0.5L * hi, hi, x, w);
        hi *= 0.5L;
    }
    gauss_panel(0.0L, hi, x, w);
}

inline int grading_levels(double power) { return std::clamp(static_cast<int>(std::ceil(40.0 / (power + 2.0))) + 2, 2, 40); }

} // namespace detail

/// Patch of local polar nodes centred on an off-origin charge.
struct ChargePatch {
    cplx center;
    double radius;
};

/// Quadrature for integrals of the form int f(z) e^{-N V(z)} dm(z) over the plane.
/// lam holds w_i e^{-N V(z_i)}; nodes near charges come from local polar patches.
template <class Real>
struct QuadGrid {
    using Complex = std::complex<Real>;

    std::vector<Complex> z;
    std::vector<Real> w;
    std::vector<Real> lam;
    double truncation_radius = 0.0;
    int radial_nodes = 0;
    int angular = 0;
    double tail_bound = 0.0;
    double eps_tail = 0.0;
    std::vector<ChargePatch> patches;
    PerturbedPotential potential{1.0, PointChargeMeasure{}};

    std::size_t size() const { return z.size(); }

    template <class R2>
    QuadGrid<R2> cast() const {
        QuadGrid<R2> g;
        g.z.reserve(z.size());
        for (const auto& x : z)
            g.z.emplace_back(static_cast<R2>(x.real()), static_cast<R2>(x.imag()));
        g.w.assign(w.begin(), w.end());
        g.lam.assign(lam.begin(), lam.end());
        g.truncation_radius = truncation_radius;
        g.radial_nodes = radial_nodes;
        g.angular = angular;
        g.tail_bound = tail_bound;
        g.eps_tail = eps_tail;
        g.patches = patches;
        g.potential = potential;
        return g;
    }
};

namespace detail {

/// Smallest R with the relative tail of int |z|^{2d} e^{-NV} beyond R under eps,
/// using the angular maximum of the weight on each circle.
inline double moment_radius(const PerturbedPotential& p, int degree, double eps) {
    const double scale = 1.0 / std::sqrt(p.N() * p.alpha());
    double far = 0.0;
    for (const auto& c : p.nu())
        far = std::max(far, std::abs(c.location));
    const double ds = 0.01 * scale;
    std::vector<double> logb;
    double peak = -1e300;
    for (int i = 1;; ++i) {
        const double s = i * ds;
        double best = -1e300;
        for (int j = 0; j < 64; ++j) {
            const ExtendedReal v = p.value(std::polar(s, 2.0 * pi * (j + 0.5) / 64));
            if (v.is_finite())
                best = std::max(best, -p.N() * v.value());
        }
        const double lb = (degree + 1.0) * std::log(s) + best;
        logb.push_back(lb);
        peak = std::max(peak, lb);
        if (s > far + 2.0 * scale && lb < peak - 80.0)
            break;
    }
    std::vector<double> tail(logb.size() + 1, 0.0);
    for (std::size_t i = logb.size(); i-- > 0;)
        tail[i] = tail[i + 1] + std::exp(logb[i] - peak);
    const double total = tail[0];
    for (std::size_t i = 0; i < logb.size(); ++i)
        if (tail[i] <= eps * total)
            return (i + 1) * ds;
    return logb.size() * ds;
}

} // namespace detail

/// Truncation radius: the larger of the Gaussian-majorant tail radius and the
/// radius where the degree-weighted tail becomes relatively negligible.
inline double truncation_radius(const PerturbedPotential& p, double eps_tail, int degree) {
    const WeightBound wb = weight_upper_bound(p);
    const double Na = p.N() * p.alpha();
    const double arg = 2.0 * pi * std::exp(-wb.L) / (Na * eps_tail);
    const double r_major = arg > 1.0 ? std::sqrt(2.0 / Na * std::log(arg)) : 0.0;
    return std::max(r_major, detail::moment_radius(p, degree, eps_tail));
}

namespace detail {

struct PatchLayout {
    double origin_power = -1.0;
    std::vector<ChargePatch> patches;
    std::vector<double> power; // N times the mass of each patch charge
};

inline PatchLayout patch_layout(const PerturbedPotential& p) {
    PatchLayout out;
    for (std::size_t k = 0; k < p.nu().size(); ++k) {
        const auto& c = p.nu()[k];
        if (c.location == cplx(0.0)) {
            out.origin_power = p.N() * c.mass;
            continue;
        }
        double r = std::min(0.5, 0.5 * std::abs(c.location));
        for (std::size_t j = 0; j < p.nu().size(); ++j)
            if (j != k)
                r = std::min(r, 0.5 * std::abs(c.location - p.nu()[j].location));
        out.patches.push_back({c.location, r});
        out.power.push_back(p.N() * c.mass);
    }
    return out;
}

} // namespace detail

namespace detail {

/// log of the largest weight on a coarse polar sample covering the charges and the Gaussian bulk.
inline double log_weight_peak(const PerturbedPotential& p) {
    double far = 0.0;
    for (const auto& c : p.nu())
        far = std::max(far, std::abs(c.location));
    const double reach = far + 4.0 / std::sqrt(p.N() * p.alpha());
    double best = -1e300;
    for (int i = 0; i <= 64; ++i)
        for (int j = 0; j < 64; ++j) {
            const ExtendedReal v = p.value(std::polar(reach * i / 64, 2.0 * pi * (j + 0.5) / 64));
            if (v.is_finite())
                best = std::max(best, -p.N() * v.value());
        }
    return best;
}

/// log of the largest weight on the rim of a patch, where the cutoff changes.
inline double log_weight_on_rim(const PerturbedPotential& p, const ChargePatch& pa) {
    double best = -1e300;
    for (double f : {0.25, 0.625, 1.0})
        for (int j = 0; j < 64; ++j) {
            const ExtendedReal v = p.value(pa.center + std::polar(f * pa.radius, 2.0 * pi * j / 64));
            if (v.is_finite())
                best = std::max(best, -p.N() * v.value());
        }
    return best;
}

} // namespace detail

/// Angular node count chosen by build_grid when none is given. The cutoff around a
/// charge needs about 8 nodes across the patch, or 24 when the weight there is not
/// negligible against its peak.
inline int default_angular(const PerturbedPotential& p, int degree = 0) {
    int M = 2 * (degree + static_cast<int>(std::ceil(0.5 * p.N() * p.nu().total_mass()))) + 32;
    const auto layout = detail::patch_layout(p);
    const double peak = layout.patches.empty() ? 0.0 : detail::log_weight_peak(p);
    for (const auto& pa : layout.patches) {
        const double per_radius = detail::log_weight_on_rim(p, pa) - peak > std::log(1e-8) ? 48.0 : 16.0;
        M = std::max(M, static_cast<int>(std::ceil(per_radius * pi * std::abs(pa.center) / pa.radius)) + 32);
    }
    return std::max(64, (M + 7) / 8 * 8);
}

/// Width of the Gaussian partition cauchy_transform uses at z.
inline double cauchy_width(const PerturbedPotential& p, cplx z, double width) {
    double sigma = width;
    for (const auto& c : p.nu())
        sigma = std::min(sigma, std::abs(z - c.location) / 6.0);
    return sigma;
}

/// Angular node count at which the global grid resolves the partition at every
/// sample: node spacing at radius |z| + 6 sigma no larger than sigma / 2.
inline int cauchy_angular(const PerturbedPotential& p, const std::vector<cplx>& samples, int degree = 0,
                          double width = 0.1) {
    int M = default_angular(p, degree);
    for (const auto& z : samples) {
        const double s = cauchy_width(p, z, width);
        if (s > 0.0)
            M = std::max(M, static_cast<int>(std::ceil(4.0 * pi * (std::abs(z) + 6.0 * s) / s)));
    }
    return (M + 7) / 8 * 8;
}

/// Polar tensor grid for the weight of p: Gauss-Legendre panels in the radius,
/// trapezoid in the angle, geometric grading at a charge on the origin, and a
/// partition of unity handing a disk around every other charge to a local polar rule.
/// degree is the total polynomial degree the grid must integrate (2 n_max for
/// orthogonality up to n_max).
template <class Real = long double>
QuadGrid<Real> build_grid(const PerturbedPotential& p, double eps_tail = 1e-12, QuadOrders orders = {},
                          int degree = 0) {
    if (!(eps_tail > 0.0) || orders.radial_panels < 0 || orders.angular < 0 || degree < 0)
        throw Error(ErrorCode::InvalidArgument, "invalid quadrature orders");

    const double Na = p.N() * p.alpha();
    const double scale = 1.0 / std::sqrt(Na);
    const double RT = truncation_radius(p, eps_tail, degree);

    // charge patches and origin grading
    const auto layout = detail::patch_layout(p);
    const double origin_power = layout.origin_power;
    const std::vector<ChargePatch>& patches = layout.patches;

    const int M = orders.angular > 0 ? orders.angular : default_angular(p, degree);

    // radial breakpoints
    std::vector<long double> br{0.0L};
    const int panels = orders.radial_panels > 0 ? orders.radial_panels
                                                : std::max(4, static_cast<int>(std::ceil(RT / std::min(0.5, 0.75 * scale))));
    for (int i = 1; i <= panels; ++i)
        br.push_back(static_cast<long double>(RT) * i / panels);
    for (const auto& pa : patches)
        for (double f : {-1.0, -0.625, -0.25, 0.0, 0.25, 0.625, 1.0})
            if (const double b = std::abs(pa.center) + f * pa.radius; b > 0.0 && b < RT)
                br.push_back(b);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](long double a, long double b) { return b - a < 1e-12L; }), br.end());

    std::vector<long double> rx, rw;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        if (i == 0 && origin_power >= 0.0)
            detail::graded_panels(br[1], detail::grading_levels(origin_power), rx, rw);
        else
            detail::gauss_panel(br[i], br[i + 1], rx, rw);
    }

    auto patch_weight = [&](cplxl z) {
        long double s = 0.0L;
        for (const auto& pa : patches)
            s += detail::smooth_cutoff(std::abs(z - cplxl(pa.center)), 0.25L * pa.radius, pa.radius);
        return s;
    };

    QuadGrid<Real> g;
    g.potential = p;
    g.truncation_radius = RT;
    g.radial_nodes = static_cast<int>(rx.size());
    g.angular = M;
    g.eps_tail = eps_tail;
    g.patches = patches;
    g.tail_bound = std::exp(-weight_upper_bound(p).L) * 2.0 * pi / Na * std::exp(-0.5 * Na * RT * RT);

    std::vector<cplxl> zs;
    std::vector<long double> ws;
    const long double dth = 2.0L * static_cast<long double>(pi) / M;
    for (std::size_t i = 0; i < rx.size(); ++i)
        for (int j = 0; j < M; ++j) {
            const cplxl z = std::polar(rx[i], dth * j);
            const long double wt = rw[i] * rx[i] * dth * (1.0L - patch_weight(z));
            if (wt > 0.0L) {
                zs.push_back(z);
                ws.push_back(wt);
            }
        }

    for (std::size_t k = 0; k < patches.size(); ++k) {
        const auto& pa = patches[k];
        std::vector<long double> sx, sw;
        detail::graded_panels(pa.radius, detail::grading_levels(layout.power[k]), sx, sw);
        int Ml = 2 * degree + static_cast<int>(std::ceil(4.0 * Na * std::abs(pa.center) * pa.radius)) + 64;
        Ml = (Ml + 7) / 8 * 8;
        const long double dl = 2.0L * static_cast<long double>(pi) / Ml;
        for (std::size_t i = 0; i < sx.size(); ++i)
            for (int j = 0; j < Ml; ++j) {
                const cplxl z = cplxl(pa.center) + std::polar(sx[i], dl * j);
                const long double chi = detail::smooth_cutoff(sx[i], 0.25L * pa.radius, pa.radius);
                // other patches are at least one radius away, so only this one overlaps
                const long double wt = sw[i] * sx[i] * dl * chi;
                if (wt > 0.0L) {
                    zs.push_back(z);
                    ws.push_back(wt);
                }
            }
    }

    // weights, then drop nodes whose share of every moment |z|^j, j <= degree, is below 1e-40
    std::vector<long double> lam(zs.size());
    std::vector<double> loglam(zs.size()), logr(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
        lam[i] = ws[i] * p.weight_ld(zs[i]);
        loglam[i] = lam[i] > 0.0L ? static_cast<double>(std::log(lam[i])) : -1e300;
        logr[i] = std::log(std::max(1e-300, static_cast<double>(std::abs(zs[i]))));
    }
    std::vector<double> logm(degree + 1);
    for (int j = 0; j <= degree; ++j) {
        double top = -1e300;
        for (std::size_t i = 0; i < zs.size(); ++i)
            top = std::max(top, loglam[i] + j * logr[i]);
        double acc = 0.0;
        for (std::size_t i = 0; i < zs.size(); ++i)
            acc += std::exp(loglam[i] + j * logr[i] - top);
        logm[j] = top + std::log(acc);
    }
    constexpr double log_cut = -92.1; // log 1e-40
    for (std::size_t i = 0; i < zs.size(); ++i) {
        double share = -1e300;
        for (int j = 0; j <= degree; ++j)
            share = std::max(share, loglam[i] + j * logr[i] - logm[j]);
        if (share <= log_cut)
            continue;
        g.z.emplace_back(static_cast<Real>(zs[i].real()), static_cast<Real>(zs[i].imag()));
        g.w.push_back(static_cast<Real>(ws[i]));
        g.lam.push_back(static_cast<Real>(lam[i]));
    }
    return g;
}

template <class Real, class F, class G>
std::complex<Real> inner_product(const QuadGrid<Real>& grid, F&& f, G&& g) {
    std::vector<std::complex<Real>> t(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        t[i] = grid.lam[i] * f(grid.z[i]) * std::conj(g(grid.z[i]));
    return pairwise_sum(t);
}

/// Inner product of two fields already sampled on the nodes.
template <class Real>
std::complex<Real> inner_product(const QuadGrid<Real>& grid, const std::vector<std::complex<Real>>& f,
                                 const std::vector<std::complex<Real>>& g) {
    std::vector<std::complex<Real>> t(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        t[i] = grid.lam[i] * f[i] * std::conj(g[i]);
    return pairwise_sum(t);
}

template <class Real>
Real absolute_moment(const QuadGrid<Real>& grid, int k) {
    std::vector<Real> t(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        t[i] = grid.lam[i] * std::pow(std::abs(grid.z[i]), static_cast<Real>(k));
    return pairwise_sum(t);
}

/// Oracle for the weight without charges: int |z|^k e^{-N alpha |z|^2} dm = pi Gamma(k/2 + 1) / (N alpha)^{k/2+1}.
inline double gaussian_absolute_moment(double Na, double k) {
    return pi * std::tgamma(0.5 * k + 1.0) / std::pow(Na, 0.5 * k + 1.0);
}

/// The Cauchy transform bound min over R of (M/R + 2 pi R K), attained at R = sqrt(M / (2 pi K)).
inline double cauchy_bound(double total_mass, double sup_density) {
    if (total_mass <= 0.0 || sup_density <= 0.0)
        return 0.0;
    return 2.0 * std::sqrt(2.0 * pi * sup_density * total_mass);
}

struct CauchyTransformEstimate {
    cplx value;
    double bound;
    double tail_error;
};

struct CauchyOptions {
    /// Width of the Gaussian partition around z; the local rule runs to 6 widths.
    double width = 0.1;
    int local_panels = 3;
    int local_angular = 0;
};

/// int f(w) / (z - w) dlambda(w), dlambda = e^{-NV} dm.
/// Near z the plane is split by chi(w) = exp(-|w - z|^2 / sigma^2): the chi part is
/// integrated in polar coordinates centred at z, where s ds cancels the 1/|z - w|
/// singularity, and the (1 - chi) part on the global grid, where it is smooth.
/// Both pieces are smooth in z, so finite differences of the result are meaningful.
/// node_values holds f on the grid nodes; f itself is needed by the local rule.
template <class Real, class F>
CauchyTransformEstimate cauchy_transform(const QuadGrid<Real>& grid, const std::vector<std::complex<Real>>& node_values,
                                         F&& f, cplx z0, CauchyOptions opt = {}) {
    using C = std::complex<Real>;
    const C z(static_cast<Real>(z0.real()), static_cast<Real>(z0.imag()));
    const PerturbedPotential& p = grid.potential;

    const double sigma = cauchy_width(p, z0, opt.width);

    // nearest node distance decides whether the local rule is needed
    double nearest = 1e300;
    for (const auto& x : grid.z)
        nearest = std::min(nearest, static_cast<double>(std::abs(x - z)));
    const bool local = sigma > 0.0 && nearest < 7.0 * sigma;
    const Real inv_s2 = local ? static_cast<Real>(1.0 / (sigma * sigma)) : Real(0);

    std::vector<C> t(grid.size());
    std::vector<Real> absf(grid.size());
    Real sup_density = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const C fv = node_values[i];
        const C d = z - grid.z[i];
        const Real r2 = std::norm(d);
        absf[i] = grid.lam[i] * std::abs(fv);
        if (grid.w[i] > 0)
            sup_density = std::max(sup_density, absf[i] / grid.w[i]);
        if (!local) {
            t[i] = grid.lam[i] * fv / d;
            continue;
        }
        const Real x = r2 * inv_s2;
        // (1 - e^{-x}) / (z - w) = conj(d) (1 - e^{-x}) / |d|^2, finite as d -> 0
        const Real damp = x < Real(1e-4) ? inv_s2 * (Real(1) - x / 2 + x * x / 6) : -std::expm1(-x) / r2;
        t[i] = grid.lam[i] * fv * std::conj(d) * damp;
    }
    C value = pairwise_sum(t);

    if (local) {
        std::vector<long double> sx, sw;
        const long double smax = 6.0L * sigma;
        for (int k = 0; k < opt.local_panels; ++k)
            detail::gauss_panel(smax * k / opt.local_panels, smax * (k + 1) / opt.local_panels, sx, sw);
        int Ml = opt.local_angular;
        if (Ml == 0) {
            Ml = grid.angular / 2 + static_cast<int>(std::ceil(12.0 * p.N() * p.alpha() * (std::abs(z0) + smax) * smax)) + 32;
            Ml = (Ml + 7) / 8 * 8;
        }
        std::vector<C> lt;
        lt.reserve(sx.size() * Ml);
        const Real dth = static_cast<Real>(2.0L * static_cast<long double>(pi) / Ml);
        for (std::size_t i = 0; i < sx.size(); ++i) {
            const Real s = static_cast<Real>(sx[i]);
            const Real gw = static_cast<Real>(sw[i]) * std::exp(-s * s * inv_s2) * dth;
            for (int j = 0; j < Ml; ++j) {
                const C e = std::polar(Real(1), dth * j);
                const C w = z + s * e;
                const Real wt = static_cast<Real>(p.weight_ld(cplxl(static_cast<long double>(w.real()),
                                                                    static_cast<long double>(w.imag()))));
                // f w chi / (z - w) s ds dtheta with z - w = -s e
                lt.push_back(-gw * wt * f(w) * std::conj(e));
            }
        }
        value += pairwise_sum(lt);
    }

    const double mass = static_cast<double>(pairwise_sum(absf));
    CauchyTransformEstimate est;
    est.value = cplx(static_cast<double>(value.real()), static_cast<double>(value.imag()));
    est.bound = cauchy_bound(mass, static_cast<double>(sup_density));
    double sup_f_tail = 0.0;
    for (int j = 0; j < 64; ++j) {
        const C w = std::polar(static_cast<Real>(grid.truncation_radius), static_cast<Real>(2.0 * pi * j / 64));
        sup_f_tail = std::max(sup_f_tail, static_cast<double>(std::abs(f(w))));
    }
    const double gap = std::max(1e-300, std::abs(std::abs(z0) - grid.truncation_radius));
    est.tail_error = grid.tail_bound * sup_f_tail / gap;
    return est;
}

template <class Real, class F>
CauchyTransformEstimate cauchy_transform(const QuadGrid<Real>& grid, F&& f, cplx z0, CauchyOptions opt = {}) {
    std::vector<std::complex<Real>> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        vals[i] = f(grid.z[i]);
    return cauchy_transform(grid, vals, f, z0, opt);
}

} // namespace qdom
