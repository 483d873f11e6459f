#pragma once

#include "qdom/core.hpp"
#include "qdom/equilibrium.hpp"
#include "qdom/measures.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <vector>

namespace qdom {

struct FeketeConfig {
    int n = 0;
    std::vector<cplx> points;
    double energy = 0.0;
    double gradient_norm = 0.0; // max_i |dE/dx_i + i dE/dy_i|
    int iterations = 0;
    std::uint64_t seed = 0;
};

/// E = (1/2) sum_{i != j} log 1/|z_i - z_j| + n sum_i Q(z_i), Q = (gamma/2) V.
/// Coincident points or a point on a charge give +infinity.
inline ExtendedReal fekete_energy(const std::vector<cplx>& z, const PerturbedPotential& p) {
    const PerturbedPotential q = p.rescaled();
    const std::size_t n = z.size();
    std::vector<double> terms;
    terms.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d2 = std::norm(z[i] - z[j]);
            if (d2 == 0.0)
                return ExtendedReal::infinity();
            terms.push_back(-0.5 * std::log(d2));
        }
    for (const auto& x : z) {
        const ExtendedReal v = q.value(x);
        if (v.is_infinite())
            return ExtendedReal::infinity();
        terms.push_back(static_cast<double>(n) * v.value());
    }
    return ExtendedReal(pairwise_sum(terms));
}

/// Real gradient packed as complex numbers: entry i is dE/dx_i + i dE/dy_i = 2 dE/d(conj z_i).
inline std::vector<cplx> fekete_gradient(const std::vector<cplx>& z, const PerturbedPotential& p) {
    const PerturbedPotential q = p.rescaled();
    const std::size_t n = z.size();
    std::vector<cplx> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx s(0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const cplx d = std::conj(z[i] - z[j]);
            if (d == cplx(0.0))
                throw Error(ErrorCode::CoincidentPoints, "coincident Fekete points");
            s += 1.0 / d;
        }
        for (const auto& c : q.nu())
            if (z[i] == c.location)
                throw Error(ErrorCode::CoincidentPoints, "point on a charge");
        g[i] = 2.0 * (-0.5 * s + static_cast<double>(n) * q.dbar(z[i]));
    }
    return g;
}

/// E(z + dz) - E(z) accumulated from per-term changes, so it stays accurate when
/// the change is far below the rounding level of E itself.
inline ExtendedReal fekete_energy_change(const std::vector<cplx>& z, const std::vector<cplx>& dz,
                                         const PerturbedPotential& p) {
    const PerturbedPotential q = p.rescaled();
    const std::size_t n = z.size();
    std::vector<double> terms;
    terms.reserve(n * (n + 1) / 2 + n * (q.nu().size() + 1));
    // log |d| - log |d + e| = -(1/2) log1p((2 Re(conj(d) e) + |e|^2) / |d|^2)
    auto log_ratio = [](cplx d, cplx e) {
        const double rel = (2.0 * std::real(std::conj(d) * e) + std::norm(e)) / std::norm(d);
        return rel <= -1.0 ? std::numeric_limits<double>::infinity() : -0.5 * std::log1p(rel);
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double t = log_ratio(z[i] - z[j], dz[i] - dz[j]);
            if (std::isinf(t))
                return ExtendedReal::infinity();
            terms.push_back(t);
        }
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        terms.push_back(nn * q.alpha() * (2.0 * std::real(std::conj(z[i]) * dz[i]) + std::norm(dz[i])));
        for (const auto& c : q.nu()) {
            const double t = log_ratio(z[i] - c.location, dz[i]);
            if (std::isinf(t))
                return ExtendedReal::infinity();
            terms.push_back(nn * c.mass * t);
        }
    }
    return ExtendedReal(pairwise_sum(terms));
}

struct FeketeOptions {
    double gradient_tol = 1e-8;
    int max_iterations = 50000;
    double armijo = 1e-4;
    int seeds = 5;
};

/// Barzilai-Borwein gradient descent with Armijo backtracking from one random start in B(0, R).
inline FeketeConfig fekete_descent(int n, const PerturbedPotential& p, std::uint64_t seed, FeketeOptions opt = {}) {
    if (n < 1)
        throw Error(ErrorCode::InvalidArgument, "need at least one point");
    const double R = outer_radius(p.rescaled());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<cplx> z(n);
    for (auto& x : z)
        x = std::polar(R * std::sqrt(U(rng)), 2.0 * pi * U(rng));

    auto max_norm = [](const std::vector<cplx>& g) {
        double m = 0.0;
        for (const auto& x : g)
            m = std::max(m, std::abs(x));
        return m;
    };

    std::vector<cplx> g = fekete_gradient(z, p);
    double step = 1.0 / (n * (1.0 + p.rescaled().alpha()));
    std::vector<cplx> dz(n), gn;
    int it = 0;
    for (; it < opt.max_iterations && max_norm(g) >= opt.gradient_tol; ++it) {
        double g2 = 0.0;
        for (const auto& x : g)
            g2 += std::norm(x);
        double t = step;
        bool accepted = false;
        for (int back = 0; back < 60; ++back, t *= 0.5) {
            for (int i = 0; i < n; ++i)
                dz[i] = -t * g[i];
            const ExtendedReal dE = fekete_energy_change(z, dz, p);
            if (!dE.is_infinite() && dE.value() < 0.0 && dE.value() <= -opt.armijo * t * g2) {
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
        for (int i = 0; i < n; ++i)
            z[i] += dz[i];
        gn = fekete_gradient(z, p);
        // BB1 step s.s / s.y on the real vectors
        double ss = 0.0, sy = 0.0;
        for (int i = 0; i < n; ++i) {
            ss += std::norm(dz[i]);
            sy += std::real(std::conj(dz[i]) * (gn[i] - g[i]));
        }
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-14, 1e6) : 2.0 * t;
        g.swap(gn);
    }
    FeketeConfig cfg;
    cfg.n = n;
    cfg.points = z;
    cfg.energy = fekete_energy(z, p).value();
    cfg.gradient_norm = max_norm(g);
    cfg.iterations = it;
    cfg.seed = seed;
    if (cfg.gradient_norm >= opt.gradient_tol)
        throw Error(ErrorCode::IterationCap, "Fekete descent stopped before reaching the gradient tolerance");
    return cfg;
}

/// Multi-start minimisation; seeds seed, seed+1, ... run concurrently and the lowest energy wins.
inline FeketeConfig fekete_minimize(int n, const PerturbedPotential& p, std::uint64_t seed = 1,
                                    FeketeOptions opt = {}) {
    std::vector<std::future<FeketeConfig>> runs;
    for (int s = 0; s < opt.seeds; ++s)
        runs.push_back(std::async(std::launch::async, fekete_descent, n, p, seed + s, opt));
    FeketeConfig best;
    bool have = false;
    std::exception_ptr first_error;
    for (auto& r : runs) {
        try {
            FeketeConfig c = r.get();
            if (!have || c.energy < best.energy) {
                best = std::move(c);
                have = true;
            }
        } catch (...) {
            if (!first_error)
                first_error = std::current_exception();
        }
    }
    if (!have)
        std::rethrow_exception(first_error);
    return best;
}

/// Area of B(0, rho) intersected with B(c, r).
inline double disk_overlap_area(double rho, cplx c, double r) {
    const double d = std::abs(c);
    if (rho <= 0.0 || r <= 0.0 || d >= rho + r)
        return 0.0;
    if (d <= std::abs(rho - r))
        return pi * sqr(std::min(rho, r));
    const double a1 = std::acos(std::clamp((d * d + rho * rho - r * r) / (2.0 * d * rho), -1.0, 1.0));
    const double a2 = std::acos(std::clamp((d * d + r * r - rho * rho) / (2.0 * d * r), -1.0, 1.0));
    const double k = std::sqrt(std::max(0.0, (-d + rho + r) * (d + rho - r) * (d - rho + r) * (d + rho + r)));
    return rho * rho * a1 + r * r * a2 - 0.5 * k;
}

/// Area of {|z| < rho} inside the support.
inline double support_area_within(const SupportGeometry& geom, double rho) {
    if (const auto* d = std::get_if<DiskWithCavities>(&geom)) {
        double a = pi * sqr(std::min(rho, d->R));
        for (const auto& c : d->cavities)
            a -= disk_overlap_area(rho, c.center, c.radius);
        return a;
    }
    // midpoint rule on the indicator; the boundary is a smooth curve
    const int nr = 800, nt = 2048;
    double a = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = rho * (i + 0.5) / nr;
        int hit = 0;
        for (int j = 0; j < nt; ++j)
            hit += in_support(geom, std::polar(r, 2.0 * pi * (j + 0.5) / nt));
        a += r * hit;
    }
    return a * (rho / nr) * (2.0 * pi / nt);
}

struct RingCell {
    double r0, r1;
    double observed; // fraction of points
    double expected; // equilibrium mass
};

struct DiscrepancyReport {
    std::vector<RingCell> rings;
    double max_discrepancy = 0.0;
    double fraction_in_support = 0.0;
    double fraction_in_cavities = 0.0; // disk geometry only
    double fraction_outside = 0.0;     // beyond the outermost ring
};

/// Counting measure of the points against the equilibrium measure, uniform with
/// density 2 alpha_Q / pi on the support, over concentric rings covering the support.
inline DiscrepancyReport fekete_discrepancy(const std::vector<cplx>& z, const PerturbedPotential& p,
                                            const SupportGeometry& geom, int rings = 10) {
    const double density = 2.0 * p.rescaled().alpha() / pi;
    double outer = 0.0;
    if (const auto* d = std::get_if<DiskWithCavities>(&geom)) {
        outer = d->R;
    } else {
        const auto& m = std::get<ExteriorMap>(geom);
        for (int i = 0; i < 4096; ++i)
            outer = std::max(outer, std::abs(m.f(std::polar(1.0, 2.0 * pi * i / 4096))));
    }
    DiscrepancyReport rep;
    const double n = static_cast<double>(z.size());
    double prev_area = 0.0;
    for (int k = 0; k < rings; ++k) {
        RingCell c;
        c.r0 = outer * k / rings;
        c.r1 = outer * (k + 1) / rings;
        const double area = support_area_within(geom, c.r1);
        c.expected = density * (area - prev_area);
        prev_area = area;
        int count = 0;
        for (const auto& x : z)
            count += std::abs(x) >= c.r0 && std::abs(x) < c.r1;
        c.observed = count / n;
        rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(c.observed - c.expected));
        rep.rings.push_back(c);
    }
    int inside = 0, cav = 0, out = 0;
    for (const auto& x : z) {
        inside += in_support(geom, x);
        out += std::abs(x) >= outer;
        if (const auto* d = std::get_if<DiskWithCavities>(&geom))
            for (const auto& c : d->cavities)
                cav += std::abs(x - c.center) < c.radius;
    }
    rep.fraction_in_support = inside / n;
    rep.fraction_in_cavities = cav / n;
    rep.fraction_outside = out / n;
    return rep;
}

} // namespace qdom
