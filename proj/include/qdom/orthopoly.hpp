#pragma once

#include "qdom/core.hpp"
#include "qdom/equilibrium.hpp"
#include "qdom/measures.hpp"
#include "qdom/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

namespace qdom {

/// Monic orthogonal polynomials P_0..P_n for the grid measure, held through the
/// recurrence P_{k+1} = z P_k - sum_{j<=k} c(j,k) P_j produced by Arnoldi.
template <class Real>
class OrthoPolySet {
public:
    using Complex = std::complex<Real>;

    OrthoPolySet(PerturbedPotential p, int n_max, std::vector<Complex> hess, std::vector<Real> norms)
        : p_(std::move(p)), n_(n_max), hess_(std::move(hess)), h_(std::move(norms)) {
        using std::sqrt;
        rec_.resize(static_cast<std::size_t>(n_) * n_);
        for (int k = 0; k < n_; ++k)
            for (int j = 0; j <= k; ++j)
                rec_[idx(j, k)] = H(j, k) * sqrt(h_[k] / h_[j]);
    }

    int n_max() const { return n_; }
    const PerturbedPotential& potential() const { return p_; }
    const std::vector<Real>& norms() const { return h_; }
    Real norm(int k) const { return h_.at(k); }

    /// Arnoldi matrix of multiplication by z in the orthonormal basis, (n_max+1) x n_max.
    Complex H(int j, int k) const { return hess_[static_cast<std::size_t>(j) * n_ + k]; }

    /// Coefficient c(j,k) of the monic recurrence.
    Complex recurrence(int j, int k) const { return rec_[idx(j, k)]; }

    /// P_0(z)..P_n(z).
    std::vector<Complex> eval_all(int n, Complex z) const {
        check_degree(n);
        std::vector<Complex> P(n + 1);
        P[0] = Real(1);
        for (int k = 0; k < n; ++k) {
            Complex acc = z * P[k];
            for (int j = 0; j <= k; ++j)
                acc -= rec_[idx(j, k)] * P[j];
            P[k + 1] = acc;
        }
        return P;
    }

    Complex eval(int n, Complex z) const { return eval_all(n, z)[n]; }

    std::pair<Complex, Complex> eval_with_derivative(int n, Complex z) const {
        check_degree(n);
        std::vector<Complex> P(n + 1), D(n + 1);
        P[0] = Real(1);
        D[0] = Real(0);
        for (int k = 0; k < n; ++k) {
            Complex acc = z * P[k], dacc = P[k] + z * D[k];
            for (int j = 0; j <= k; ++j) {
                acc -= rec_[idx(j, k)] * P[j];
                dacc -= rec_[idx(j, k)] * D[j];
            }
            P[k + 1] = acc;
            D[k + 1] = dacc;
        }
        return {P[n], D[n]};
    }

    /// P_k / sqrt(h_k).
    Complex orthonormal(int k, Complex z) const {
        using std::sqrt;
        return eval(k, z) / sqrt(h_[k]);
    }

    /// Ascending coefficients of P_k; the leading one is exactly 1.
    std::vector<Complex> monic_coefficients(int k) const {
        check_degree(k);
        std::vector<std::vector<Complex>> c(k + 1);
        c[0] = {Complex(1)};
        for (int m = 0; m < k; ++m) {
            std::vector<Complex> next(m + 2, Complex(0));
            for (int i = 0; i <= m; ++i)
                next[i + 1] += c[m][i];
            for (int j = 0; j <= m; ++j)
                for (int i = 0; i <= j; ++i)
                    next[i] -= rec_[idx(j, m)] * c[j][i];
            next[m + 1] = Complex(1);
            c[m + 1] = std::move(next);
        }
        return c[k];
    }

private:
    std::size_t idx(int j, int k) const { return static_cast<std::size_t>(j) * n_ + k; }
    void check_degree(int n) const {
        if (n < 0 || n > n_)
            throw Error(ErrorCode::InvalidArgument, "degree beyond the constructed set");
    }

    PerturbedPotential p_;
    int n_;
    std::vector<Complex> hess_;
    std::vector<Real> h_;
    std::vector<Complex> rec_;
};

/// max over j != k of |<P_j, P_k>| / sqrt(h_j h_k) on the grid, with P_k evaluated by the recurrence.
template <class Real, class GridReal>
double gram_residual(const OrthoPolySet<Real>& ops, const QuadGrid<GridReal>& grid, int n) {
    using C = std::complex<Real>;
    using std::sqrt;
    const std::size_t M = grid.size();
    std::vector<std::vector<C>> u(n + 1, std::vector<C>(M));
    for (std::size_t i = 0; i < M; ++i) {
        const C z(static_cast<Real>(grid.z[i].real()), static_cast<Real>(grid.z[i].imag()));
        const auto P = ops.eval_all(n, z);
        const Real sl = sqrt(static_cast<Real>(grid.lam[i]));
        for (int k = 0; k <= n; ++k)
            u[k][i] = sl * P[k] / sqrt(ops.norm(k));
    }
    double worst = 0.0;
    std::vector<C> t(M);
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j < k; ++j) {
            for (std::size_t i = 0; i < M; ++i)
                t[i] = u[j][i] * std::conj(u[k][i]);
            worst = std::max(worst, static_cast<double>(std::abs(pairwise_sum(t))));
        }
    return worst;
}

struct OrthoOptions {
    double gram_tol = 1e-8;
    bool check = true;
};

/// Arnoldi on the quadrature nodes: the vectors sqrt(lam_i) q_k(z_i) are kept
/// orthonormal (two passes of modified Gram-Schmidt), z q_k is expanded in them,
/// and the norms come from h_k = h_0 prod H(j+1,j)^2. Entries under the
/// orthogonalization noise floor are set to zero.
template <class Real, class GridReal>
OrthoPolySet<Real> build_orthopolys(const PerturbedPotential& p, const QuadGrid<GridReal>& grid, int n_max,
                                    OrthoOptions opt = {}) {
    using C = std::complex<Real>;
    using std::sqrt;
    if (n_max < 0)
        throw Error(ErrorCode::InvalidArgument, "negative degree");
    const std::size_t M = grid.size();
    if (M <= static_cast<std::size_t>(n_max))
        throw Error(ErrorCode::InvalidArgument, "grid has fewer nodes than the degree");

    std::vector<C> zn(M);
    std::vector<Real> sl(M);
    for (std::size_t i = 0; i < M; ++i) {
        zn[i] = C(static_cast<Real>(grid.z[i].real()), static_cast<Real>(grid.z[i].imag()));
        sl[i] = sqrt(static_cast<Real>(grid.lam[i]));
    }

    const Real h0 = pairwise_sum(std::vector<Real>(grid.lam.begin(), grid.lam.end()));
    std::vector<std::vector<C>> V;
    V.reserve(n_max + 1);
    V.emplace_back(M);
    for (std::size_t i = 0; i < M; ++i)
        V[0][i] = sl[i] / sqrt(h0);

    const int cols = std::max(n_max, 1);
    std::vector<C> hess(static_cast<std::size_t>(n_max + 1) * cols, C(0));
    auto Hr = [&](int j, int k) -> C& { return hess[static_cast<std::size_t>(j) * cols + k]; };
    const Real floor = 16 * sqrt(static_cast<Real>(M)) * std::numeric_limits<Real>::epsilon();

    std::vector<C> w(M), t(M);
    std::vector<Real> tr(M);
    for (int k = 0; k < n_max; ++k) {
        for (std::size_t i = 0; i < M; ++i)
            w[i] = zn[i] * V[k][i];
        for (std::size_t i = 0; i < M; ++i)
            tr[i] = std::norm(w[i]);
        const Real col = sqrt(pairwise_sum(tr));
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j <= k; ++j) {
                for (std::size_t i = 0; i < M; ++i)
                    t[i] = w[i] * std::conj(V[j][i]);
                const C c = pairwise_sum(t);
                Hr(j, k) += c;
                for (std::size_t i = 0; i < M; ++i)
                    w[i] -= c * V[j][i];
            }
        for (int j = 0; j <= k; ++j)
            if (std::abs(Hr(j, k)) <= floor * col)
                Hr(j, k) = C(0);
        for (std::size_t i = 0; i < M; ++i)
            tr[i] = std::norm(w[i]);
        const Real beta = sqrt(pairwise_sum(tr));
        if (!(beta > 0))
            throw Error(ErrorCode::LossOfOrthogonality, "Krylov space exhausted on the grid");
        Hr(k + 1, k) = beta;
        V.emplace_back(M);
        for (std::size_t i = 0; i < M; ++i)
            V[k + 1][i] = w[i] / beta;
    }
    V.clear();
    V.shrink_to_fit();

    std::vector<Real> h(n_max + 1);
    h[0] = h0;
    for (int k = 0; k < n_max; ++k)
        h[k + 1] = h[k] * std::norm(Hr(k + 1, k));

    if (n_max == 0)
        hess.assign(1, C(0));
    OrthoPolySet<Real> ops(p, n_max, std::move(hess), std::move(h));
    if (opt.check) {
        const double g = gram_residual(ops, grid, n_max);
        if (!(g < opt.gram_tol))
            throw Error(ErrorCode::LossOfOrthogonality,
                        "Gram residual " + std::to_string(g) + " above " + std::to_string(opt.gram_tol));
    }
    return ops;
}

/// Runs in double first and repeats in long double when the Gram residual is too large.
template <class GridReal>
OrthoPolySet<long double> build_orthopolys_auto(const PerturbedPotential& p, const QuadGrid<GridReal>& grid,
                                                int n_max, OrthoOptions opt = {}) {
    try {
        const auto d = build_orthopolys<double>(p, grid, n_max, opt);
        std::vector<std::complex<long double>> hess;
        const int cols = std::max(n_max, 1);
        for (int j = 0; j <= n_max; ++j)
            for (int k = 0; k < cols; ++k)
                hess.emplace_back(n_max == 0 ? std::complex<long double>(0) : std::complex<long double>(d.H(j, k)));
        std::vector<long double> h(d.norms().begin(), d.norms().end());
        if (n_max == 0)
            hess.assign(1, 0);
        return OrthoPolySet<long double>(p, n_max, std::move(hess), std::move(h));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::LossOfOrthogonality)
            throw;
    }
    return build_orthopolys<long double>(p, grid, n_max, opt);
}

/// sqrt(int |P_k - z^k|^2 dlam / h_k) with cross terms dropped; zero for monomials.
template <class Real, class GridReal>
double off_monomial_mass(const OrthoPolySet<Real>& ops, const QuadGrid<GridReal>& grid, int k) {
    const auto c = ops.monic_coefficients(k);
    long double acc = 0.0L;
    for (int j = 0; j < k; ++j)
        acc += std::norm(std::complex<long double>(c[j])) * static_cast<long double>(absolute_moment(grid, 2 * j));
    return static_cast<double>(std::sqrt(acc / static_cast<long double>(ops.norm(k))));
}

struct ZeroSet {
    int n = 0;
    std::vector<cplx> zeros;
    int iterations = 0;
    double max_residual = 0.0;
};

struct ZeroOptions {
    int max_iterations = 20000;
    double residual_tol = 1e-10;
    double init_radius = 0.0; // zero picks the outer radius of the potential
};

/// Working precision of the zero solver: long double or the set's own type if wider.
template <class Real>
using zero_work_t = std::conditional_t<(std::numeric_limits<Real>::digits > std::numeric_limits<long double>::digits),
                                       Real, long double>;

/// Aberth-Ehrlich iteration started on a circle, run in at least long double.
/// The stopping test is |P_n(z_j)| / prod_{k != j} |z_j - z_k| < residual_tol for every j.
template <class Real>
ZeroSet compute_zeros(const OrthoPolySet<Real>& ops, int n, ZeroOptions opt = {}) {
    using W = zero_work_t<Real>;
    using C = std::complex<W>;
    if (n < 0 || n > ops.n_max())
        throw Error(ErrorCode::InvalidArgument, "degree beyond the constructed set");
    ZeroSet out;
    out.n = n;
    if (n == 0)
        return out;

    std::vector<std::vector<C>> rec(n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j <= k; ++j) {
            const auto c = ops.recurrence(j, k);
            rec[k].emplace_back(static_cast<W>(c.real()), static_cast<W>(c.imag()));
        }
    auto pd = [&](C z) {
        std::vector<C> P(n + 1), D(n + 1);
        P[0] = W(1);
        D[0] = W(0);
        for (int k = 0; k < n; ++k) {
            C a = z * P[k], d = P[k] + z * D[k];
            for (int j = 0; j <= k; ++j) {
                a -= rec[k][j] * P[j];
                d -= rec[k][j] * D[j];
            }
            P[k + 1] = a;
            D[k + 1] = d;
        }
        return std::pair<C, C>{P[n], D[n]};
    };

    const W R = static_cast<W>(opt.init_radius > 0.0 ? opt.init_radius : outer_radius(ops.potential()));
    std::vector<C> z(n);
    for (int j = 0; j < n; ++j)
        z[j] = std::polar(R, W(2) * W(pi) * W(j) / W(n) + W(0.4));

    auto residuals = [&](std::vector<C>& P) {
        W worst = 0;
        for (int j = 0; j < n; ++j) {
            W prod = 1;
            for (int k = 0; k < n; ++k)
                if (k != j)
                    prod *= std::abs(z[j] - z[k]);
            worst = std::max(worst, W(std::abs(P[j]) / prod));
        }
        return worst;
    };

    std::vector<C> P(n), D(n);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        for (int j = 0; j < n; ++j)
            std::tie(P[j], D[j]) = pd(z[j]);
        const W res = residuals(P);
        out.iterations = it;
        out.max_residual = static_cast<double>(res);
        if (res < opt.residual_tol)
            break;
        if (it == opt.max_iterations)
            throw Error(ErrorCode::NonConvergence, "Aberth iteration hit its cap");
        for (int j = 0; j < n; ++j) {
            if (P[j] == C(0))
                continue;
            const C ratio = P[j] / D[j];
            C s = W(0);
            for (int k = 0; k < n; ++k)
                if (k != j)
                    s += W(1) / (z[j] - z[k]);
            z[j] -= ratio / (W(1) - ratio * s);
            std::tie(P[j], D[j]) = pd(z[j]);
        }
    }
    for (const auto& x : z)
        out.zeros.emplace_back(static_cast<double>(x.real()), static_cast<double>(x.imag()));
    return out;
}

/// Ascending coefficients of prod (z - z_j).
inline std::vector<cplx> coefficients_from_zeros(const std::vector<cplx>& zeros) {
    std::vector<cplx> c{1.0};
    for (const auto& r : zeros) {
        std::vector<cplx> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] -= r * c[i];
        }
        c = std::move(next);
    }
    return c;
}

/// (1/n) sum_{k<n} |P_k(z)|^2 / h_k e^{-NV(z)}.
template <class Real>
double one_point_function(const OrthoPolySet<Real>& ops, int n, cplx z) {
    if (n < 1 || n > ops.n_max())
        throw Error(ErrorCode::InvalidArgument, "degree out of range");
    const auto P = ops.eval_all(n - 1, std::complex<Real>(z.real(), z.imag()));
    long double acc = 0.0L;
    for (int k = 0; k < n; ++k)
        acc += std::norm(std::complex<long double>(P[k])) / static_cast<long double>(ops.norm(k));
    return static_cast<double>(acc * ops.potential().weight_ld(cplxl(z)) / n);
}

/// (1/n) sum log 1/|z - z_j|.
inline ExtendedReal zero_potential(const ZeroSet& zs, cplx z) {
    double acc = 0.0;
    for (const auto& r : zs.zeros) {
        const double d = std::abs(z - r);
        if (d == 0.0)
            return ExtendedReal::infinity();
        acc -= std::log(d);
    }
    return acc / zs.n;
}

/// -(1/n) log |P_n(z)| from the recurrence.
template <class Real>
ExtendedReal polynomial_potential(const OrthoPolySet<Real>& ops, int n, cplx z) {
    const auto v = ops.eval(n, std::complex<Real>(z.real(), z.imag()));
    if (v == std::complex<Real>(0))
        return ExtendedReal::infinity();
    return -std::log(static_cast<double>(std::abs(v))) / n;
}

struct RadiusBoundReport {
    double fraction_inside = 0.0;
    double max_modulus = 0.0;
    double radius = 0.0;
    bool support_in_disk = false;
};

/// Share of zeros in the closed disk of radius R + margin and whether the support lies in B(0, R).
inline RadiusBoundReport radius_bound_check(const PerturbedPotential& p, const ZeroSet& zs, double margin) {
    RadiusBoundReport rep;
    rep.radius = outer_radius(p);
    std::size_t inside = 0;
    for (const auto& z : zs.zeros) {
        rep.max_modulus = std::max(rep.max_modulus, std::abs(z));
        if (std::abs(z) <= rep.radius + margin)
            ++inside;
    }
    rep.fraction_inside = zs.zeros.empty() ? 1.0 : static_cast<double>(inside) / zs.zeros.size();
    const SupportGeometry g = classify_support(p);
    const auto box = support_bbox(g);
    double reach = 0.0;
    if (const auto* m = std::get_if<ExteriorMap>(&g)) {
        for (int i = 0; i < 4096; ++i)
            reach = std::max(reach, std::abs(m->f(std::polar(1.0, 2.0 * pi * i / 4096))));
    } else {
        reach = box[1];
    }
    rep.support_in_disk = reach <= rep.radius * (1.0 + 1e-12);
    return rep;
}

} // namespace qdom
