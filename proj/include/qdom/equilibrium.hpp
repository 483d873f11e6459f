#pragma once

#include "qdom/core.hpp"
#include "qdom/measures.hpp"

#include <array>
#include <cmath>
#include <variant>
#include <vector>

namespace qdom {

struct Cavity {
    cplx center;
    double radius;
};

/// Closed disk B(0,R) with open cavity disks removed.
struct DiskWithCavities {
    double R;
    std::vector<Cavity> cavities;
};

/// Support is the bounded complement of f({|zeta| > 1}) with
/// f(zeta) = rho zeta + u + v / (zeta - A).
struct ExteriorMap {
    double rho;
    cplx u;
    cplx v;
    cplx A;

    cplx f(cplx zeta) const { return rho * zeta + u + v / (zeta - A); }
    cplx df(cplx zeta) const { return rho - v / sqr(zeta - A); }

    /// Both solutions of f(zeta) = z, i.e. roots of
    /// rho zeta^2 + (u - z - A rho) zeta + A (z - u) + v = 0.
    std::array<cplx, 2> preimages(cplx z) const {
        const cplx b = u - z - A * rho;
        const cplx c = A * (z - u) + v;
        const cplx disc = std::sqrt(b * b - 4.0 * rho * c);
        // pick the numerically stable pairing
        const cplx q = -0.5 * (b + (std::real(std::conj(b) * disc) >= 0.0 ? disc : -disc));
        if (q == cplx(0.0))
            return {cplx(0.0), cplx(0.0)};
        return {q / rho, c / q};
    }
};

using SupportGeometry = std::variant<DiskWithCavities, ExteriorMap>;

inline double outer_radius(const PerturbedPotential& p) {
    return std::sqrt((1.0 + p.nu().total_mass()) / (2.0 * p.alpha()));
}

inline double cavity_radius(double alpha, double beta) { return std::sqrt(beta / (2.0 * alpha)); }

/// g(x) = 2 t^4 x^3 - (t^4 + (1 + 2 beta) t^2 / alpha) x^2 + 1 / (4 alpha^2), x = |A|^2.
struct CubicProblem {
    double t;
    double alpha;
    double beta;

    double c3() const { return 2.0 * std::pow(t, 4); }
    double c2() const { return -(std::pow(t, 4) + (1.0 + 2.0 * beta) * t * t / alpha); }
    double c0() const { return 1.0 / (4.0 * alpha * alpha); }

    double g(double x) const { return (c3() * x + c2()) * x * x + c0(); }
    double dg(double x) const { return (3.0 * c3() * x + 2.0 * c2()) * x; }

    /// Positive critical point of g; g decreases on (0, x_crit).
    double x_crit() const { return -2.0 * c2() / (3.0 * c3()); }

    /// R - r < t < R + r, the regime where g(1) < 0 and the root in (0,1) is unique.
    bool in_unique_root_regime() const {
        const double R = std::sqrt((1.0 + beta) / (2.0 * alpha));
        const double r = cavity_radius(alpha, beta);
        return t > R - r && t < R + r;
    }
};

/// Root of g in (0, min(1, x_crit)) by bisection followed by one Newton step.
inline double solve_cubic(const CubicProblem& cp) {
    double lo = 0.0;
    double hi = std::min(1.0, cp.x_crit());
    if (!(cp.g(hi) < 0.0))
        throw Error(ErrorCode::NoRoot, "cubic has no sign change on the univalent branch");
    while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        (cp.g(mid) > 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    const double d = cp.dg(x);
    if (d != 0.0) {
        const double xn = x - cp.g(x) / d;
        if (xn > 0.0 && xn < 1.0 && std::abs(cp.g(xn)) <= std::abs(cp.g(x)))
            x = xn;
    }
    return x;
}

inline ExteriorMap solve_exterior_map(double alpha, double beta, cplx a) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "alpha and beta must be positive");
    const double t = std::abs(a);
    if (t == 0.0)
        throw Error(ErrorCode::InvalidArgument, "charge at the origin never leaves the disk");
    const double R = std::sqrt((1.0 + beta) / (2.0 * alpha));
    const double r = cavity_radius(alpha, beta);
    if (!(t + r > R))
        throw Error(ErrorCode::NoRoot, "cavity is contained in the disk");

    const CubicProblem cp{t, alpha, beta};
    const double x = solve_cubic(cp);
    const double K = std::sqrt(x);
    const cplx phase = a / t;
    const double ih = 1.0 / (2.0 * alpha);
    ExteriorMap m;
    m.A = K * phase;
    m.rho = (K * K * t * t + ih) / (2.0 * K * t);
    const double s = (1.0 - K * K) * (K * K * t * t - ih) / (2.0 * K * t);
    m.v = s * phase * phase;
    m.u = m.v / m.A;
    return m;
}

/// Absolute residuals of the four equations that determine the map.
inline std::array<double, 4> system_residuals(const ExteriorMap& m, double alpha, double beta, cplx a) {
    const double one_minus = 1.0 - std::norm(m.A);
    const cplx cA = std::conj(m.A);
    std::array<double, 4> r{};
    r[0] = std::abs(m.rho * m.rho - std::norm(m.v) / sqr(one_minus) - 1.0 / (2.0 * alpha));
    r[1] = std::abs(std::conj(m.v) / cA - std::conj(m.u));
    r[2] = std::abs(m.u + m.rho / cA + m.v * cA / one_minus - a);
    r[3] = std::abs(std::conj(m.v) / (cA * cA) * (m.rho - m.v * cA * cA / sqr(one_minus)) + beta / (2.0 * alpha));
    return r;
}

inline constexpr double containment_margin = 1e-9;

inline SupportGeometry classify_support(const PerturbedPotential& p) {
    const double R = outer_radius(p);
    const auto& nu = p.nu();
    std::vector<Cavity> cav;
    bool contained = true;
    for (const auto& c : nu) {
        const double r = cavity_radius(p.alpha(), c.mass);
        const double reach = std::abs(c.location) + r;
        if (std::abs(reach - R) <= containment_margin)
            throw Error(ErrorCode::Unsupported, "cavity tangent to the outer circle");
        if (reach > R)
            contained = false;
        cav.push_back({c.location, r});
    }
    for (std::size_t i = 0; i < cav.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(cav[i].center - cav[j].center) < cav[i].radius + cav[j].radius + containment_margin)
                throw Error(ErrorCode::Unsupported, "cavities overlap or touch");
    if (contained)
        return DiskWithCavities{R, std::move(cav)};
    if (nu.size() != 1)
        throw Error(ErrorCode::Unsupported, "several charges with a cavity leaving the disk");
    return solve_exterior_map(p.alpha(), nu[0].mass, nu[0].location);
}

inline double robin_constant(const SupportGeometry& geom, const PerturbedPotential& p) {
    const auto* d = std::get_if<DiskWithCavities>(&geom);
    if (!d)
        throw Error(ErrorCode::NotImplemented, "no closed form for the exterior-map support");
    const double R2 = d->R * d->R;
    return p.alpha() * R2 * (std::log(1.0 / R2) + 1.0);
}

inline double support_area(const SupportGeometry& geom) {
    if (const auto* d = std::get_if<DiskWithCavities>(&geom)) {
        double a = d->R * d->R;
        for (const auto& c : d->cavities)
            a -= c.radius * c.radius;
        return pi * a;
    }
    const auto& m = std::get<ExteriorMap>(geom);
    return pi * (m.rho * m.rho - std::norm(m.v) / sqr(1.0 - std::norm(m.A)));
}

inline bool in_support(const SupportGeometry& geom, cplx z) {
    if (const auto* d = std::get_if<DiskWithCavities>(&geom)) {
        if (std::abs(z) > d->R)
            return false;
        for (const auto& c : d->cavities)
            if (std::abs(z - c.center) < c.radius)
                return false;
        return true;
    }
    const auto roots = std::get<ExteriorMap>(geom).preimages(z);
    return std::abs(roots[0]) <= 1.0 && std::abs(roots[1]) <= 1.0;
}

/// Logarithmic potential of Lebesgue measure on the support.
/// The exterior-map case uses the boundary form of Green's identity,
///   -int_S log|w - z| dm(w) = -(1/4) oint (2 log|w - z| - 1) Im(conj(w - z) dw),
/// discretized by the trapezoid rule on the unit circle.
class SupportPotential {
public:
    explicit SupportPotential(SupportGeometry geom, int boundary_nodes = 8192) : geom_(std::move(geom)) {
        if (const auto* m = std::get_if<ExteriorMap>(&geom_)) {
            w_.resize(boundary_nodes);
            dw_.resize(boundary_nodes);
            for (int i = 0; i < boundary_nodes; ++i) {
                const cplx zeta = std::polar(1.0, 2.0 * pi * i / boundary_nodes);
                w_[i] = m->f(zeta);
                dw_[i] = m->df(zeta) * cplx(0.0, 1.0) * zeta * (2.0 * pi / boundary_nodes);
            }
        }
    }

    const SupportGeometry& geometry() const { return geom_; }

    double operator()(cplx z) const {
        if (const auto* d = std::get_if<DiskWithCavities>(&geom_)) {
            double u = log_potential_disk({0.0, d->R}, z);
            for (const auto& c : d->cavities)
                u -= log_potential_disk({c.center, c.radius}, z);
            return u;
        }
        std::vector<double> terms(w_.size());
        for (std::size_t i = 0; i < w_.size(); ++i) {
            const cplx d = w_[i] - z;
            const double r2 = std::norm(d);
            const double lg = r2 > 0.0 ? std::log(r2) : 0.0;
            terms[i] = (lg - 1.0) * std::imag(std::conj(d) * dw_[i]);
        }
        return -0.25 * pairwise_sum(terms);
    }

private:
    SupportGeometry geom_;
    std::vector<cplx> w_;
    std::vector<cplx> dw_;
};

/// U^sigma + V with sigma the equilibrium density 2 alpha / pi on the support.
inline ExtendedReal effective_potential(const SupportPotential& us, const PerturbedPotential& p, cplx z) {
    return ExtendedReal(2.0 * p.alpha() / pi * us(z)) + p.value(z);
}

inline ExtendedReal effective_potential(const SupportGeometry& geom, const PerturbedPotential& p, cplx z) {
    return effective_potential(SupportPotential(geom), p, z);
}

struct GridSpec {
    int per_side = 200;
    double margin = 0.5;
    double tol_on = -1.0; // negative selects the default per geometry
    double tol_off = 1e-8;
};

struct EquilibriumReport {
    double max_dev_on = 0.0;
    double min_margin_off = 0.0;
    double F = 0.0;
    double mass_error = 0.0; // |(2 alpha / pi) area - 1|
    std::size_t n_on = 0;
    std::size_t n_off = 0;
    double tol_on = 0.0;
    double tol_off = 0.0;
    bool pass = false;
};

/// Axis-aligned box containing the support.
inline std::array<double, 4> support_bbox(const SupportGeometry& geom) {
    if (const auto* d = std::get_if<DiskWithCavities>(&geom))
        return {-d->R, d->R, -d->R, d->R};
    const auto& m = std::get<ExteriorMap>(geom);
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int i = 0; i < 2048; ++i) {
        const cplx w = m.f(std::polar(1.0, 2.0 * pi * i / 2048));
        x0 = std::min(x0, w.real());
        x1 = std::max(x1, w.real());
        y0 = std::min(y0, w.imag());
        y1 = std::max(y1, w.imag());
    }
    return {x0, x1, y0, y1};
}

/// Samples U^sigma + V - F on a square grid covering the support plus a margin.
/// For the exterior map F is the mean over the support samples.
inline EquilibriumReport verify_equilibrium(const SupportGeometry& geom, const PerturbedPotential& p,
                                            const GridSpec& spec = {}) {
    const bool closed = std::holds_alternative<DiskWithCavities>(geom);
    EquilibriumReport rep;
    rep.tol_on = spec.tol_on > 0.0 ? spec.tol_on : (closed ? 1e-8 : 1e-4);
    rep.tol_off = spec.tol_off;

    const SupportPotential us(geom);
    const auto box = support_bbox(geom);
    const double cx = 0.5 * (box[0] + box[1]), cy = 0.5 * (box[2] + box[3]);
    const double half = 0.5 * std::max(box[1] - box[0], box[3] - box[2]) + spec.margin;

    std::vector<double> on, off;
    const int n = spec.per_side;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx z(cx - half + 2.0 * half * (i + 0.5) / n, cy - half + 2.0 * half * (j + 0.5) / n);
            const ExtendedReal e = effective_potential(us, p, z);
            if (e.is_infinite())
                continue;
            (in_support(geom, z) ? on : off).push_back(e.value());
        }
    rep.n_on = on.size();
    rep.n_off = off.size();
    rep.F = closed ? robin_constant(geom, p) : pairwise_sum(on) / static_cast<double>(on.size());
    for (double e : on)
        rep.max_dev_on = std::max(rep.max_dev_on, std::abs(e - rep.F));
    rep.min_margin_off = std::numeric_limits<double>::infinity();
    for (double e : off)
        rep.min_margin_off = std::min(rep.min_margin_off, e - rep.F);
    // a uniformly inflated disk still has constant potential, so the mass is checked too
    rep.mass_error = std::abs(2.0 * p.alpha() / pi * support_area(geom) - 1.0);
    rep.pass = rep.n_on > 0 && rep.max_dev_on < rep.tol_on && rep.min_margin_off >= -rep.tol_off &&
               rep.mass_error < rep.tol_on;
    return rep;
}

} // namespace qdom
