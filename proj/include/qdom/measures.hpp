#pragma once

#include "qdom/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qdom {

struct PointCharge {
    cplx location;
    double mass;
};

/// Finite positive combination of point masses, sum of mass_k * delta_{location_k}.
class PointChargeMeasure {
public:
    PointChargeMeasure() = default;

    explicit PointChargeMeasure(std::vector<PointCharge> charges) : charges_(std::move(charges)) {
        for (std::size_t i = 0; i < charges_.size(); ++i) {
            if (!(charges_[i].mass > 0.0) || !std::isfinite(charges_[i].mass))
                throw Error(ErrorCode::InvalidArgument, "point charge mass must be positive");
            for (std::size_t j = 0; j < i; ++j)
                if (charges_[i].location == charges_[j].location)
                    throw Error(ErrorCode::InvalidArgument, "point charge locations must be distinct");
        }
    }

    std::size_t size() const { return charges_.size(); }
    bool empty() const { return charges_.empty(); }
    const PointCharge& operator[](std::size_t i) const { return charges_[i]; }
    auto begin() const { return charges_.begin(); }
    auto end() const { return charges_.end(); }
    const std::vector<PointCharge>& charges() const { return charges_; }

    double total_mass() const {
        double m = 0.0;
        for (const auto& c : charges_)
            m += c.mass;
        return m;
    }

    /// Same charges, locations multiplied by `factor` (a rotation when |factor| = 1).
    PointChargeMeasure transformed(cplx factor) const {
        auto out = charges_;
        for (auto& c : out)
            c.location *= factor;
        return PointChargeMeasure(std::move(out));
    }

    PointChargeMeasure scaled_masses(double factor) const {
        auto out = charges_;
        for (auto& c : out)
            c.mass *= factor;
        return PointChargeMeasure(std::move(out));
    }

private:
    std::vector<PointCharge> charges_;
};

/// Lebesgue measure restricted to the disk B(center, radius).
struct DiskMeasure {
    cplx center;
    double radius;

    double total_mass() const { return pi * radius * radius; }
};

/// sum_k beta_k log(1/|z - a_k|); +infinity exactly at the charge locations.
inline ExtendedReal log_potential_point(const PointChargeMeasure& nu, cplx z) {
    double acc = 0.0;
    for (const auto& c : nu) {
        const double d = std::abs(z - c.location);
        if (d == 0.0)
            return ExtendedReal::infinity();
        acc -= c.mass * std::log(d);
    }
    return acc;
}

/// Logarithmic potential of the uniform (unit density) measure on a disk.
inline double log_potential_disk(const DiskMeasure& d, cplx z) {
    const double r2 = d.radius * d.radius;
    const double dist2 = std::norm(z - d.center);
    if (dist2 <= r2)
        return 0.5 * r2 * pi * (std::log(1.0 / r2) + 1.0 - dist2 / r2);
    return -0.5 * r2 * pi * std::log(dist2);
}

/// V(z) = alpha |z|^2 + U^nu(z), with scale N used by the weight e^{-N V}.
/// gamma is the ratio N/n of the scaling limit; Q = (gamma/2) V.
class PerturbedPotential {
public:
    PerturbedPotential(double alpha, PointChargeMeasure nu, double N = 1.0, double gamma = 2.0)
        : alpha_(alpha), N_(N), gamma_(gamma), nu_(std::move(nu)) {
        if (!(alpha > 0.0) || !(N > 0.0) || !(gamma > 0.0))
            throw Error(ErrorCode::InvalidArgument, "alpha, N and gamma must be positive");
    }

    double alpha() const { return alpha_; }
    double N() const { return N_; }
    double gamma() const { return gamma_; }
    const PointChargeMeasure& nu() const { return nu_; }

    ExtendedReal value(cplx z) const { return ExtendedReal(alpha_ * std::norm(z)) + log_potential_point(nu_, z); }

    /// e^{-N V(z)}; exactly 0 at the charge locations.
    double weight(cplx z) const {
        const ExtendedReal v = value(z);
        return v.is_infinite() ? 0.0 : std::exp(-N_ * v.value());
    }

    /// Extended-precision weight for quadrature construction.
    long double weight_ld(cplxl z) const {
        long double v = static_cast<long double>(alpha_) * std::norm(z);
        for (const auto& c : nu_) {
            const long double d = std::abs(z - cplxl(c.location));
            if (d == 0.0L)
                return 0.0L;
            v -= static_cast<long double>(c.mass) * std::log(d);
        }
        return std::exp(-static_cast<long double>(N_) * v);
    }

    /// dV/d(conj z) = alpha z - (1/2) sum beta_k / (conj z - conj a_k).
    cplx dbar(cplx z) const {
        cplx g = alpha_ * z;
        for (const auto& c : nu_)
            g -= 0.5 * c.mass / std::conj(z - c.location);
        return g;
    }

    /// The rescaled potential Q = (gamma/2) V, carried as a potential of the
    /// same family. Its N is 2N/gamma so both describe the same weight.
    PerturbedPotential rescaled() const {
        const double s = 0.5 * gamma_;
        return PerturbedPotential(alpha_ * s, nu_.scaled_masses(s), N_ / s, 2.0);
    }

    PerturbedPotential with_N(double N) const { return PerturbedPotential(alpha_, nu_, N, gamma_); }

private:
    double alpha_;
    double N_;
    double gamma_;
    PointChargeMeasure nu_;
};

inline ExtendedReal potential_value(const PerturbedPotential& p, cplx z) { return p.value(z); }

/// Gaussian majorant of the weight: e^{-N V(z)} <= e^{-L} e^{-N alpha |z|^2 / 2}.
struct WeightBound {
    double L;
    double N_alpha;

    double operator()(cplx z) const { return std::exp(-L - 0.5 * N_alpha * std::norm(z)); }
};

namespace detail {

inline double half_gaussian_exponent(const PerturbedPotential& p, cplx z) {
    const ExtendedReal u = log_potential_point(p.nu(), z);
    if (u.is_infinite())
        return std::numeric_limits<double>::infinity();
    return p.N() * (0.5 * p.alpha() * std::norm(z) + u.value());
}

} // namespace detail

/// L = min over the plane of N [alpha |z|^2 / 2 + U^nu(z)], found by a coarse
/// grid scan followed by a shrinking compass search from the best cell.
inline WeightBound weight_upper_bound(const PerturbedPotential& p) {
    const double Na = p.N() * p.alpha();
    if (p.nu().empty())
        return {0.0, Na};

    double extent = 0.0;
    for (const auto& c : p.nu())
        extent = std::max(extent, std::abs(c.location));
    extent += 2.0 * std::sqrt((1.0 + p.nu().total_mass()) / p.alpha()) + 1.0;

    constexpr int cells = 200;
    cplx best = 0.0;
    double best_val = detail::half_gaussian_exponent(p, best);
    for (int i = -cells; i <= cells; ++i)
        for (int j = -cells; j <= cells; ++j) {
            const cplx z(extent * i / cells, extent * j / cells);
            const double f = detail::half_gaussian_exponent(p, z);
            if (f < best_val) {
                best_val = f;
                best = z;
            }
        }

    double step = extent / cells;
    const cplx dirs[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {0.7071067811865476, 0.7071067811865476},
                         {-0.7071067811865476, 0.7071067811865476}, {0.7071067811865476, -0.7071067811865476},
                         {-0.7071067811865476, -0.7071067811865476}};
    while (step > 1e-13 * (1.0 + std::abs(best))) {
        bool moved = false;
        for (const cplx d : dirs) {
            const cplx z = best + step * d;
            const double f = detail::half_gaussian_exponent(p, z);
            if (f < best_val) {
                best_val = f;
                best = z;
                moved = true;
            }
        }
        if (!moved)
            step *= 0.5;
    }
    // the search returns a value at or slightly above the true minimum
    return {best_val - 1e-9 * (1.0 + std::abs(best_val)), Na};
}

} // namespace qdom
