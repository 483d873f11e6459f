#pragma once

#include "qdom/dbar.hpp"
#include "qdom/equilibrium.hpp"
#include "qdom/fekete.hpp"
#include "qdom/orthopoly.hpp"
#include "qdom/quadrature.hpp"
#include "qdom/schwarz.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/float128.hpp>
#include <json.hpp>

#include <chrono>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace qdom {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    nlohmann::json detail;
    double seconds = 0.0;
};

/// Reference configurations: a charge inside the disk (cavity) and one whose
/// cavity leaves the disk (exterior conformal map).
inline PerturbedPotential cavity_config(double N = 1.0) {
    return PerturbedPotential(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}), N);
}
inline PerturbedPotential exterior_config(double N = 1.0) {
    return PerturbedPotential(0.5, PointChargeMeasure({{cplx(2.0, 0.0), 0.5}}), N);
}

namespace checks {

/// Effective potential constant on random cavity-case supports and above F outside.
inline CheckResult closed_form_geometry(int cases = 100, std::uint64_t seed = 11, double inflate = 1.0) {
    CheckResult r{1, "closed-form geometry"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int passed = 0, tried = 0;
    double worst_on = 0.0, worst_off = 1e300;
    while (tried < cases) {
        const double alpha = 0.25 + 1.75 * U(rng);
        const int k = 1 + (U(rng) < 0.3);
        std::vector<PointCharge> cs;
        for (int i = 0; i < k; ++i)
            cs.push_back({std::polar(1.5 * U(rng), 2.0 * pi * U(rng)), 0.05 + 0.6 * U(rng)});
        PerturbedPotential p(alpha, PointChargeMeasure(cs));
        SupportGeometry geom;
        try {
            geom = classify_support(p);
        } catch (const Error&) {
            continue;
        }
        auto* d = std::get_if<DiskWithCavities>(&geom);
        if (!d)
            continue;
        // keep every cavity a visible distance from the rim and from each other
        bool spaced = true;
        for (const auto& c : d->cavities)
            spaced = spaced && std::abs(c.center) + c.radius < d->R - 0.05;
        for (std::size_t i = 0; i < d->cavities.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                spaced = spaced && std::abs(d->cavities[i].center - d->cavities[j].center) >
                                       d->cavities[i].radius + d->cavities[j].radius + 0.05;
        if (!spaced)
            continue;
        d->R *= inflate;
        ++tried;
        const auto rep = verify_equilibrium(geom, p);
        passed += rep.pass;
        worst_on = std::max(worst_on, rep.max_dev_on);
        worst_off = std::min(worst_off, rep.min_margin_off);
    }
    r.pass = passed == cases;
    r.detail = {{"cases", cases}, {"passed", passed}, {"max_dev_on", worst_on}, {"min_margin_off", worst_off}};
    return r;
}

/// The four map equations, a single sign change of the cubic and the support area.
inline CheckResult conformal_map_system(int cases = 100, std::uint64_t seed = 12) {
    CheckResult r{2, "conformal-map system"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_res = 0.0, worst_area = 0.0;
    int sign_ok = 0;
    for (int i = 0; i < cases; ++i) {
        const double alpha = 0.25 + 1.75 * U(rng);
        const double beta = 0.1 + 1.4 * U(rng);
        const double R = std::sqrt((1.0 + beta) / (2.0 * alpha));
        const double rc = cavity_radius(alpha, beta);
        const double t = (R - rc) + (2.0 * rc) * (0.02 + 0.96 * U(rng));
        const cplx a = std::polar(t, 2.0 * pi * U(rng));
        const ExteriorMap m = solve_exterior_map(alpha, beta, a);
        for (double e : system_residuals(m, alpha, beta, a))
            worst_res = std::max(worst_res, std::abs(e));
        worst_area = std::max(worst_area, std::abs(support_area(SupportGeometry(m)) - pi / (2.0 * alpha)));
        const CubicProblem cp{t, alpha, beta};
        int changes = 0;
        double prev = cp.g(0.0);
        for (int j = 1; j <= 100000; ++j) {
            const double v = cp.g(j / 100000.0);
            changes += (v > 0.0) != (prev > 0.0);
            prev = v;
        }
        sign_ok += changes == 1;
    }
    r.pass = worst_res < 1e-10 && worst_area < 1e-10 && sign_ok == cases;
    r.detail = {{"cases", cases}, {"max_residual", worst_res}, {"max_area_error", worst_area}, {"single_sign_change", sign_ok}};
    return r;
}

/// Sampled equilibrium conditions for the exterior-map worked example.
inline CheckResult numerical_equilibrium(double inflate = 1.0) {
    CheckResult r{3, "numerical equilibrium (exterior map)"};
    const auto p = exterior_config();
    SupportGeometry geom = classify_support(p);
    std::get<ExteriorMap>(geom).rho *= inflate;
    GridSpec spec;
    spec.per_side = 200;
    spec.tol_on = 1e-4;
    const auto rep = verify_equilibrium(geom, p, spec);
    r.pass = rep.pass;
    r.detail = {{"max_dev_on", rep.max_dev_on}, {"min_margin_off", rep.min_margin_off}, {"mass_error", rep.mass_error}, {"F", rep.F},
                {"n_on", rep.n_on}, {"n_off", rep.n_off}};
    return r;
}

/// Radial weights: monomials with norms pi Gamma(k + c + 1) / (N alpha)^{k + c + 1}, c = N beta / 2.
inline CheckResult radial_oracle(int kmax = 25) {
    CheckResult r{4, "radial orthogonal polynomials"};
    double worst_off = 0.0, worst_rel = 0.0;
    for (double beta : {0.0, 0.5})
        for (double N : {1.0, 20.0}) {
            std::vector<PointCharge> cs;
            if (beta > 0.0)
                cs.push_back({cplx(0.0), beta});
            const PerturbedPotential p(0.5, PointChargeMeasure(cs), N);
            const auto g = build_grid<long double>(p, 1e-16, {}, 2 * kmax);
            const auto ops = build_orthopolys<long double>(p, g, kmax);
            const double Na = N * 0.5, c = 0.5 * N * beta;
            for (int k = 0; k <= kmax; ++k) {
                worst_off = std::max(worst_off, off_monomial_mass(ops, g, k));
                const long double logh = std::log(pi) + boost::math::lgamma(k + c + 1.0L) - (k + c + 1.0L) * std::log(Na);
                worst_rel = std::max(worst_rel, static_cast<double>(std::abs(ops.norm(k) / std::exp(logh) - 1.0L)));
            }
        }
    r.pass = worst_off < 1e-10 && worst_rel < 1e-8;
    r.detail = {{"max_off_monomial", worst_off}, {"max_norm_rel_error", worst_rel}};
    return r;
}

/// Normalized Gram matrix of the computed polynomials on a generic single charge.
inline CheckResult gram_residual_check(int n = 40) {
    CheckResult r{5, "Gram residual"};
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.6, 0.4), 0.5}}), n);
    const auto g = build_grid<long double>(p, 1e-16, {}, 2 * n);
    const auto ops = build_orthopolys<long double>(p, g, n);
    const double res = gram_residual(ops, g, n);
    r.pass = res < 1e-8;
    r.detail = {{"n", n}, {"max_offdiag", res}};
    return r;
}

/// Decay of int conj(P_n)/(z - w) dlambda - h_n / z^{n+1} for |z| in [1e2, 1e3].
inline CheckResult cauchy_asymptotics() {
    CheckResult r{6, "Cauchy transform asymptotics"};
    const auto p = cavity_config();
    const int nmax = 5;
    const auto g = build_grid<long double>(p, 1e-16, {}, 2 * nmax + 2);
    const auto ops = build_orthopolys<long double>(p, g, nmax);
    std::vector<double> radii{1e2, 1.78e2, 3.16e2, 5.62e2, 1e3};
    bool ok = true;
    for (int n : {2, 5}) {
        const DbarMatrix<long double> Y(ops, g, n);
        std::vector<double> y;
        for (double rad : radii)
            y.push_back(static_cast<double>(std::abs(Y.cauchy_minus_leading(n, std::polar(rad, 0.7)))));
        const double s = loglog_slope(radii, y);
        ok = ok && s <= -(n + 2) + 0.2;
        r.detail["slope_n" + std::to_string(n)] = s;
    }
    r.pass = ok;
    return r;
}

/// Finite-difference dbar residual order and the asymptotic normalization.
inline CheckResult dbar_problem() {
    CheckResult r{7, "dbar problem"};
    const auto p = cavity_config();
    const int nmax = 5;
    const cplx z0(0.5, 0.5);
    const auto g = build_grid<long double>(p, 1e-14, {0, cauchy_angular(p, {z0}, 2 * nmax + 2)}, 2 * nmax + 2);
    const auto ops = build_orthopolys<long double>(p, g, nmax);
    const double R = outer_radius(p);
    std::vector<double> radii;
    for (double m : {4.0, 8.0, 16.0, 32.0, 64.0})
        radii.push_back(m * R);
    bool ok = true;
    for (int k : {1, 3, 5}) {
        const DbarMatrix<long double> Y(ops, g, k);
        nlohmann::json d;
        try {
            const auto ord = dbar_order_check(Y, z0);
            d["order12"] = ord.order12;
            d["order22"] = ord.order22;
            ok = ok && ord.order12 >= 1.8 && ord.order22 >= 1.8;
        } catch (const Error& e) {
            d["error"] = e.what();
            ok = false;
        }
        const auto as = asymptotic_normalization(Y, radii);
        d["slopes"] = as.slopes;
        ok = ok && as.matches(0.2);
        r.detail["k" + std::to_string(k)] = d;
    }
    r.pass = ok;
    return r;
}

/// Orthogonality to lower powers and the unit normalization of the second row.
inline CheckResult uniqueness_relations(int kmax = 10) {
    CheckResult r{8, "uniqueness relations"};
    const auto p = cavity_config(2.0 * kmax);
    const auto g = build_grid<long double>(p, 1e-16, {}, 2 * kmax);
    const auto ops = build_orthopolys<long double>(p, g, kmax);
    double orth = 0.0, norm = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const auto u = uniqueness_crosscheck(ops, g, k);
        orth = std::max(orth, u.max_orthogonality);
        norm = std::max(norm, std::abs(u.normalization - 1.0));
    }
    r.pass = orth < 1e-8 && norm < 1e-8;
    r.detail = {{"max_orthogonality", orth}, {"max_normalization_error", norm}};
    return r;
}

/// Schwarz function on the boundary, branch points and trajectory residuals.
inline CheckResult schwarz_identity() {
    CheckResult r{9, "Schwarz identity"};
    const auto m = std::get<ExteriorMap>(classify_support(exterior_config()));
    double boundary = 0.0;
    for (int i = 0; i < 720; ++i) {
        const cplx z = m.f(std::polar(1.0, 2.0 * pi * i / 720));
        const auto b = schwarz_branches(m, z);
        boundary = std::max(boundary, std::min(std::abs(b.S[0] - std::conj(z)), std::abs(b.S[1] - std::conj(z))));
    }
    double disc = 0.0;
    const auto bps = branch_points(m);
    for (const auto& b : bps)
        disc = std::max(disc, std::abs(preimage_discriminant(m, b)));
    double traj = 0.0;
    int connecting = 0;
    for (const auto& t : critical_trajectories(m)) {
        traj = std::max(traj, t.max_residual);
        connecting += t.connecting;
    }
    r.pass = boundary < 1e-10 && !bps.empty() && disc < 1e-12 && traj < 1e-3;
    r.detail = {{"boundary_residual", boundary}, {"branch_points", bps.size()}, {"discriminant", disc},
                {"trajectory_residual", traj}, {"connecting", connecting}};
    return r;
}

/// Mean distance from zeros of P_{n,2n} to the nearest connecting trajectory.
inline CheckResult zero_attractor(std::vector<int> degrees = {10, 20, 30, 40, 50}) {
    using boost::multiprecision::float128;
    CheckResult r{10, "zero attractor"};
    const auto m = std::get<ExteriorMap>(classify_support(exterior_config()));
    auto trs = critical_trajectories(m);
    std::vector<const Trajectory*> conn;
    for (const auto& t : trs)
        if (t.connecting)
            conn.push_back(&t);
    if (conn.empty()) {
        r.detail["error"] = "no connecting trajectory";
        return r;
    }
    const double R = outer_radius(exterior_config());
    std::vector<double> mean;
    for (int n : degrees) {
        const auto p = exterior_config(2.0 * n);
        const auto g = build_grid<long double>(p, 1e-16, {}, 2 * n);
        const auto ops = build_orthopolys<float128>(p, g, n, {1e-8, false});
        const auto zs = compute_zeros(ops, n);
        double acc = 0.0;
        for (const auto& z : zs.zeros) {
            double d = 1e300;
            for (const auto* t : conn)
                d = std::min(d, distance_to_polyline(t->points, z));
            acc += d;
        }
        mean.push_back(acc / n);
    }
    bool mono = true;
    for (std::size_t i = 1; i < mean.size(); ++i)
        mono = mono && mean[i] < mean[i - 1];
    r.pass = mono && mean.back() < 0.05 * R;
    r.detail = {{"degrees", degrees}, {"mean_distance", mean}, {"limit", 0.05 * R}};
    return r;
}

/// -(1/n) log|P_{n,2n}| against the equilibrium potential on the annulus [1.5R, 3R].
inline CheckResult external_potential(std::vector<int> degrees = {15, 20, 25, 30}) {
    CheckResult r{11, "external potential"};
    bool ok = true;
    for (const auto& [name, make] : std::vector<std::pair<std::string, std::function<PerturbedPotential(double)>>>{
             {"cavity", cavity_config}, {"exterior", exterior_config}}) {
        std::vector<double> sup;
        for (int n : degrees) {
            const auto p = make(2.0 * n);
            const SupportPotential us(classify_support(p.rescaled()));
            const auto g = build_grid<long double>(p, 1e-14, {}, 2 * n);
            const auto ops = build_orthopolys_auto(p, g, n);
            const double R = outer_radius(p);
            std::vector<cplx> zs;
            for (int i = 0; i < 16; ++i)
                for (int j = 0; j < 64; ++j)
                    zs.push_back(std::polar(R * (1.5 + 1.5 * i / 15.0), 2.0 * pi * j / 64));
            const auto cmp = external_potential_compare(
                [&](cplx z) { return polynomial_potential(ops, n, z).value(); }, us, p.rescaled().alpha(), zs);
            sup.push_back(cmp.sup);
        }
        for (std::size_t i = 1; i < sup.size(); ++i)
            ok = ok && sup[i] < sup[i - 1];
        ok = ok && sup.back() < 0.05;
        r.detail[name] = sup;
    }
    r.detail["degrees"] = degrees;
    r.pass = ok;
    return r;
}

/// Gradient against finite differences, then the n-point minimizer in the cavity case.
inline CheckResult fekete_points(int n = 200, int seeds = 5) {
    CheckResult r{12, "Fekete points"};
    const auto p = cavity_config();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> G;
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<cplx> z(12);
        for (auto& x : z)
            x = 0.6 * cplx(G(rng), G(rng));
        const auto g = fekete_gradient(z, p);
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double h = 1e-6;
            auto f = [&](cplx dz) {
                auto y = z;
                y[i] += dz;
                return fekete_energy(y, p).value();
            };
            const cplx fd((f(h) - f(-h)) / (2 * h), (f(cplx(0, h)) - f(cplx(0, -h))) / (2 * h));
            worst = std::max(worst, std::abs(fd - g[i]) / std::abs(g[i]));
        }
    }
    FeketeOptions opt;
    opt.seeds = seeds;
    const auto cfg = fekete_minimize(n, p, 1, opt);
    const auto disc = fekete_discrepancy(cfg.points, p, classify_support(p.rescaled()));
    const double limit = 3.0 / std::sqrt(static_cast<double>(n));
    r.pass = worst < 1e-6 && disc.fraction_in_support >= 0.97 && disc.max_discrepancy < limit;
    r.detail = {{"gradient_rel_error", worst}, {"n", n}, {"energy", cfg.energy},
                {"fraction_in_support", disc.fraction_in_support}, {"max_discrepancy", disc.max_discrepancy},
                {"limit", limit}};
    return r;
}

} // namespace checks

inline CheckResult timed(const std::function<CheckResult()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = f();
    } catch (const Error& e) {
        r.detail["error"] = e.what();
        r.pass = false;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

struct SuiteOptions {
    bool quick = false;            // skips the slow high-degree runs
    bool corrupt_geometry = false; // negative control: inflate the supports by 2%
};

/// Every acceptance check in order; the quick suite keeps each run to a few seconds.
inline std::vector<std::function<CheckResult()>> acceptance_suite(SuiteOptions opt = {}) {
    const double inflate = opt.corrupt_geometry ? 1.02 : 1.0;
    std::vector<std::function<CheckResult()>> s;
    s.push_back([=] { return checks::closed_form_geometry(100, 11, inflate); });
    s.push_back([] { return checks::conformal_map_system(); });
    s.push_back([=] { return checks::numerical_equilibrium(inflate); });
    s.push_back([] { return checks::radial_oracle(); });
    s.push_back([=] { return checks::gram_residual_check(opt.quick ? 20 : 40); });
    s.push_back([] { return checks::cauchy_asymptotics(); });
    s.push_back([] { return checks::dbar_problem(); });
    s.push_back([] { return checks::uniqueness_relations(); });
    s.push_back([] { return checks::schwarz_identity(); });
    if (opt.quick)
        s.push_back([] { return checks::zero_attractor({10, 15, 20}); });
    else
        s.push_back([] { return checks::zero_attractor(); });
    if (opt.quick)
        s.push_back([] { return checks::external_potential({15, 20}); });
    else
        s.push_back([] { return checks::external_potential(); });
    s.push_back([=] { return opt.quick ? checks::fekete_points(60, 2) : checks::fekete_points(); });
    return s;
}

} // namespace qdom
