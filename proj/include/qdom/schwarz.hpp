#pragma once

#include "qdom/core.hpp"
#include "qdom/equilibrium.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qdom {

struct BoundaryCurve {
    ExteriorMap map;
    std::vector<cplx> points;
    double area = 0.0;
    double min_abs_derivative = 0.0;
};

namespace detail {

inline double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

inline bool segments_cross(cplx p1, cplx p2, cplx q1, cplx q2) {
    const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
    const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

} // namespace detail

inline double shoelace_area(const std::vector<cplx>& pts) {
    double a = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        a += detail::cross(pts[i], pts[(i + 1) % pts.size()]);
    return 0.5 * a;
}

/// Samples f(e^{i theta}) counterclockwise and rejects maps that fold the circle.
inline BoundaryCurve boundary_curve(const ExteriorMap& m, int n_samples) {
    if (n_samples < 8)
        throw Error(ErrorCode::InvalidArgument, "need at least 8 boundary samples");
    BoundaryCurve bc;
    bc.map = m;
    bc.min_abs_derivative = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
        const cplx zeta = std::polar(1.0, 2.0 * pi * i / n_samples);
        bc.points.push_back(m.f(zeta));
        bc.min_abs_derivative = std::min(bc.min_abs_derivative, std::abs(m.df(zeta)));
    }
    if (bc.min_abs_derivative <= 1e-12 * m.rho)
        throw Error(ErrorCode::SelfIntersection, "map derivative vanishes on the unit circle");
    const auto& p = bc.points;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1)
                continue;
            if (detail::segments_cross(p[i], p[i + 1], p[j], p[(j + 1) % n]))
                throw Error(ErrorCode::SelfIntersection, "sampled boundary crosses itself");
        }
    bc.area = shoelace_area(p);
    if (bc.area <= 0.0)
        throw Error(ErrorCode::SelfIntersection, "boundary is not positively oriented");
    return bc;
}

/// Schwarz function evaluated on a preimage: rho / zeta + conj(u) + conj(v) zeta / (1 - conj(A) zeta).
inline cplx schwarz_on_preimage(const ExteriorMap& m, cplx zeta) {
    return m.rho / zeta + std::conj(m.u) + std::conj(m.v) * zeta / (1.0 - std::conj(m.A) * zeta);
}

struct SchwarzBranches {
    std::array<cplx, 2> zeta;
    std::array<cplx, 2> S;
};

inline SchwarzBranches schwarz_branches(const ExteriorMap& m, cplx z) {
    SchwarzBranches b;
    b.zeta = m.preimages(z);
    for (int i = 0; i < 2; ++i)
        b.S[i] = b.zeta[i] == cplx(0.0) ? cplx(std::numeric_limits<double>::infinity()) : schwarz_on_preimage(m, b.zeta[i]);
    return b;
}

/// Reorders b so its preimages pair up with the previous ones by nearest distance.
inline SchwarzBranches label_by_continuity(const SchwarzBranches& prev, SchwarzBranches b) {
    const double keep = std::abs(b.zeta[0] - prev.zeta[0]) + std::abs(b.zeta[1] - prev.zeta[1]);
    const double swap = std::abs(b.zeta[1] - prev.zeta[0]) + std::abs(b.zeta[0] - prev.zeta[1]);
    if (swap < keep) {
        std::swap(b.zeta[0], b.zeta[1]);
        std::swap(b.S[0], b.S[1]);
    }
    return b;
}

/// (u - z - A rho)^2 - 4 rho (A (z - u) + v), the discriminant of the preimage quadratic.
inline cplx preimage_discriminant(const ExteriorMap& m, cplx z) {
    const cplx b = m.u - z - m.A * m.rho;
    return b * b - 4.0 * m.rho * (m.A * (z - m.u) + m.v);
}

/// Squared jump (S_1 - S_2)^2; single valued, zero at the branch points.
inline cplx jump_squared(const ExteriorMap& m, cplx z) {
    const auto b = schwarz_branches(m, z);
    return sqr(b.S[0] - b.S[1]);
}

/// Zeros of the discriminant whose double preimage lies in the closed unit disk.
inline std::vector<cplx> branch_points(const ExteriorMap& m) {
    if (std::abs(m.v) <= 1e-14 * m.rho)
        throw Error(ErrorCode::DegenerateMap, "v = 0 leaves no branch points");
    // z^2 - (2 (u - A rho) + 4 rho A) z + (u - A rho)^2 + 4 rho A u - 4 rho v
    const cplx w = m.u - m.A * m.rho;
    const cplx b = -(2.0 * w + 4.0 * m.rho * m.A);
    const cplx c = w * w + 4.0 * m.rho * m.A * m.u - 4.0 * m.rho * m.v;
    const cplx d = std::sqrt(b * b - 4.0 * c);
    const cplx q = -0.5 * (b + (std::real(std::conj(b) * d) >= 0.0 ? d : -d));
    std::vector<cplx> out;
    for (cplx z : {q, c / q}) {
        // one Newton step on the exact discriminant
        const cplx D = preimage_discriminant(m, z);
        const cplx dD = 2.0 * z + b;
        if (dD != cplx(0.0))
            z -= D / dD;
        const cplx zeta = -(m.u - z - m.A * m.rho) / (2.0 * m.rho);
        if (std::abs(zeta) <= 1.0 + 1e-12)
            out.push_back(z);
    }
    return out;
}

enum class TrajectoryEnd { BranchPoint, Node, Boundary, Length };

inline const char* to_string(TrajectoryEnd e) {
    switch (e) {
    case TrajectoryEnd::BranchPoint: return "branch_point";
    case TrajectoryEnd::Node: return "node";
    case TrajectoryEnd::Boundary: return "boundary";
    case TrajectoryEnd::Length: return "length";
    }
    return "unknown";
}

struct Trajectory {
    std::vector<cplx> points;
    int start_branch = 0;
    int end_branch = -1;
    TrajectoryEnd end = TrajectoryEnd::Length;
    bool connecting = false;
    bool attractor = false;
    double raw_mass = 0.0;
    double max_residual = 0.0;
};

struct TrajectoryOptions {
    double max_step = 1e-3;
    double min_step = 1e-12;
    double tol = 1e-3;
    double offset = 1e-6;
    double max_length = 0.0; // zero picks four support diameters
};

/// |Re[dS dz]| / (|dS| |dz|) at the midpoint of a segment.
inline double segment_residual(const ExteriorMap& m, cplx a, cplx b) {
    const cplx dz = b - a;
    const cplx ds = std::sqrt(jump_squared(m, 0.5 * (a + b)));
    const double den = std::abs(ds) * std::abs(dz);
    return den > 0.0 ? std::abs(std::real(ds * dz)) / den : 0.0;
}

/// Local directions at a branch point: D(z) ~ c2 (z - b) gives 3 phi + arg c2 = pi mod 2 pi.
inline std::array<double, 3> critical_directions(const ExteriorMap& m, cplx b) {
    const double h = 1e-6 * (1.0 + std::abs(b));
    const cplx c2 = jump_squared(m, b + h) / h;
    std::array<double, 3> phi{};
    for (int j = 0; j < 3; ++j)
        phi[j] = (pi - std::arg(c2)) / 3.0 + 2.0 * pi * j / 3.0;
    return phi;
}

namespace detail {

/// Unit vector X with Re[dS X] = 0 closest to the previous heading.
inline std::optional<cplx> heading(const ExteriorMap& m, cplx z, cplx prev) {
    const cplx ds = std::sqrt(jump_squared(m, z));
    const double a = std::abs(ds);
    if (!(a > 0.0) || !std::isfinite(a))
        return std::nullopt;
    cplx x = cplx(0.0, 1.0) * std::conj(ds) / a;
    if (std::real(x * std::conj(prev)) < 0.0)
        x = -x;
    return x;
}

inline bool same_path(const Trajectory& a, const Trajectory& b, double tol) {
    if (a.points.size() < 3 || b.points.size() < 3)
        return false;
    const cplx mid = a.points[a.points.size() / 2];
    double best = 1e300;
    for (const auto& p : b.points)
        best = std::min(best, std::abs(p - mid));
    const bool ends = (std::abs(a.points.front() - b.points.back()) < tol && std::abs(a.points.back() - b.points.front()) < tol) ||
                      (std::abs(a.points.front() - b.points.front()) < tol && std::abs(a.points.back() - b.points.back()) < tol);
    return ends && best < tol;
}

} // namespace detail

/// Integrates Re[dS dz] = 0 from each branch point along its three local
/// directions with RK4, halving the step whenever a segment's residual
/// exceeds tol. Stops at another branch point, at a zero of dS, on leaving
/// the support, or after max_length.
inline std::vector<Trajectory> critical_trajectories(const ExteriorMap& m, TrajectoryOptions opt = {}) {
    const auto bps = branch_points(m);
    if (bps.empty())
        throw Error(ErrorCode::InvalidArgument, "no branch points inside the support");
    const SupportGeometry geom = m;
    const auto box = support_bbox(geom);
    const double diam = std::hypot(box[1] - box[0], box[3] - box[2]);
    const double max_len = opt.max_length > 0.0 ? opt.max_length : 4.0 * diam;

    std::vector<Trajectory> out;
    for (std::size_t bi = 0; bi < bps.size(); ++bi) {
        const cplx b = bps[bi];
        for (double phi : critical_directions(m, b)) {
            Trajectory tr;
            tr.start_branch = static_cast<int>(bi);
            cplx X = std::polar(1.0, phi);
            cplx z = b + opt.offset * X;
            tr.points = {b, z};
            double h = opt.offset;
            double len = 0.0;
            bool done = false;
            while (!done) {
                auto step = [&](double hh) -> std::optional<cplx> {
                    const auto k1 = detail::heading(m, z, X);
                    if (!k1)
                        return std::nullopt;
                    const auto k2 = detail::heading(m, z + 0.5 * hh * *k1, *k1);
                    if (!k2)
                        return std::nullopt;
                    const auto k3 = detail::heading(m, z + 0.5 * hh * *k2, *k2);
                    if (!k3)
                        return std::nullopt;
                    const auto k4 = detail::heading(m, z + hh * *k3, *k3);
                    if (!k4)
                        return std::nullopt;
                    cplx d = *k1 + 2.0 * *k2 + 2.0 * *k3 + *k4;
                    d /= std::abs(d);
                    return z + hh * d;
                };
                std::optional<cplx> next;
                double r = 0.0;
                for (;;) {
                    next = step(h);
                    if (next) {
                        r = segment_residual(m, z, *next);
                        if (r < opt.tol)
                            break;
                    }
                    h *= 0.5;
                    if (h < opt.min_step)
                        throw Error(ErrorCode::StiffRegion, "step underflow along a critical trajectory");
                }
                const cplx dz = *next - z;
                X = dz / std::abs(dz);
                tr.max_residual = std::max(tr.max_residual, r);
                len += std::abs(dz);

                if (!in_support(geom, *next)) {
                    // pull the exit point back onto the boundary
                    cplx lo = z, hi = *next;
                    for (int it = 0; it < 60; ++it) {
                        const cplx mid = 0.5 * (lo + hi);
                        (in_support(geom, mid) ? lo : hi) = mid;
                    }
                    tr.points.push_back(lo);
                    tr.end = TrajectoryEnd::Boundary;
                    break;
                }
                z = *next;
                tr.points.push_back(z);

                for (std::size_t bj = 0; bj < bps.size(); ++bj) {
                    if (bj == bi && len < 10.0 * opt.max_step)
                        continue;
                    const double d_now = std::abs(z - bps[bj]);
                    const double d_before = std::abs(z - dz - bps[bj]);
                    // arrived, or just passed the closest approach
                    if (d_now < 2.0 * std::max(h, 1e-9) || (d_now < 10.0 * opt.max_step && d_now > d_before)) {
                        tr.points.push_back(bps[bj]);
                        tr.end = TrajectoryEnd::BranchPoint;
                        tr.end_branch = static_cast<int>(bj);
                        done = true;
                        break;
                    }
                }
                if (done)
                    break;
                if (std::abs(std::sqrt(jump_squared(m, z))) < opt.tol * 1e-3) {
                    tr.end = TrajectoryEnd::Node;
                    break;
                }
                if (len > max_len) {
                    tr.end = TrajectoryEnd::Length;
                    break;
                }
                if (r < 0.1 * opt.tol)
                    h = std::min(opt.max_step, 2.0 * h);
                // never step past a branch point
                for (const auto& bp : bps)
                    if (std::abs(z - bp) > 4.0 * opt.offset)
                        h = std::min(h, std::max(0.25 * std::abs(z - bp), opt.offset));
            }
            tr.connecting = tr.end == TrajectoryEnd::BranchPoint && tr.end_branch != tr.start_branch;
            bool dup = false;
            for (const auto& o : out)
                dup = dup || detail::same_path(o, tr, 10.0 * opt.max_step);
            if (!dup)
                out.push_back(std::move(tr));
        }
    }
    return out;
}

struct DensitySample {
    cplx point;
    double weight;
};

/// Per-segment weights (1/2 pi) Im[dS dz] along a trajectory, with dS followed
/// continuously, oriented to be nonnegative and normalized to total mass 1.
/// raw_mass receives the total before normalization.
inline std::vector<DensitySample> effective_zero_density(const Trajectory& tr, const ExteriorMap& m,
                                                         double* raw_mass = nullptr) {
    std::vector<DensitySample> out;
    cplx prev_ds = 0.0;
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i + 1 < tr.points.size(); ++i) {
        const cplx a = tr.points[i], b = tr.points[i + 1];
        const cplx mid = 0.5 * (a + b);
        cplx ds = std::sqrt(jump_squared(m, mid));
        if (prev_ds != cplx(0.0) && std::real(ds * std::conj(prev_ds)) < 0.0)
            ds = -ds;
        if (ds != cplx(0.0))
            prev_ds = ds;
        const double w = std::imag(ds * (b - a)) / (2.0 * pi);
        (w >= 0.0 ? pos : neg) += std::abs(w);
        out.push_back({mid, w});
    }
    const double total = pos - neg;
    const double sgn = total >= 0.0 ? 1.0 : -1.0;
    const double wrong = total >= 0.0 ? neg : pos;
    if (wrong > 1e-9 * (pos + neg))
        throw Error(ErrorCode::SignFlip, "density changes sign along the trajectory");
    const double mass = std::abs(total);
    if (!(mass > 0.0))
        throw Error(ErrorCode::SignFlip, "trajectory carries no mass");
    for (auto& s : out)
        s.weight = sgn * s.weight / mass;
    if (raw_mass)
        *raw_mass = mass;
    return out;
}

/// Fills raw_mass on every connecting trajectory and marks as attractor those whose
/// rescaled mass 2 alpha * raw is within 5% of 1 (the mass of the equilibrium measure).
inline void tag_attractors(std::vector<Trajectory>& trs, const ExteriorMap& m, double alpha) {
    for (auto& t : trs) {
        if (!t.connecting)
            continue;
        try {
            effective_zero_density(t, m, &t.raw_mass);
            t.attractor = std::abs(2.0 * alpha * t.raw_mass - 1.0) < 0.05;
        } catch (const Error&) {
            t.attractor = false;
        }
    }
}

/// Distance from z to a polyline.
inline double distance_to_polyline(const std::vector<cplx>& pts, cplx z) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const cplx a = pts[i], d = pts[i + 1] - pts[i];
        const double L2 = std::norm(d);
        double t = L2 > 0.0 ? std::real((z - a) * std::conj(d)) / L2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::abs(z - (a + t * d)));
    }
    return best;
}

struct PotentialComparison {
    std::vector<cplx> points;
    std::vector<double> error;
    double sup = 0.0;
    double mean = 0.0;
};

/// |-(1/n) log|P_n(z)| - U^mu(z)| over a set of exterior points, where mu is
/// the equilibrium measure (density 2 alpha / pi on the support of V).
template <class PotentialFn>
PotentialComparison external_potential_compare(PotentialFn&& poly_potential, const SupportPotential& us,
                                               double alpha, const std::vector<cplx>& zs) {
    PotentialComparison out;
    out.points = zs;
    double acc = 0.0;
    for (const auto& z : zs) {
        const double e = std::abs(poly_potential(z) - 2.0 * alpha / pi * us(z));
        out.error.push_back(e);
        out.sup = std::max(out.sup, e);
        acc += e;
    }
    out.mean = zs.empty() ? 0.0 : acc / zs.size();
    return out;
}

} // namespace qdom
