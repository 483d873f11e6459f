// Experiment runner: each subcommand reads one JSON config (flags override it)
// and writes its data files under --out.
#include "qdom/qdom.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using namespace qdom;
namespace fs = std::filesystem;
using boost::multiprecision::float128;

namespace {

enum Exit { ok = 0, bad_input = 1, invariant_failure = 2, unsupported = 3 };

struct Flags {
    std::string config;
    std::string out = "out";
    std::string quad;
    int degree = 0;
    double gamma = 0.0;
    std::int64_t seed = -1;
    bool quick = false;
    int k = 3;
    int n = 0;
    int seeds = 5;
    bool corrupt = false;
};

/// Stage name attached to errors raised inside a pipeline step.
struct StageError : Error {
    StageError(const std::string& stage, const Error& e) : Error(e.code(), stage + ": " + e.what()) {}
};

template <class F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

ExperimentConfig load_config(const Flags& fl) {
    ExperimentConfig c;
    if (!fl.config.empty()) {
        c = config_from_json(read_json_file(fl.config));
    } else {
        c.charges = {{cplx(2.0, 0.0), 0.5}};
    }
    if (fl.n > 0) {
        if (c.N)
            throw Error(ErrorCode::InvalidArgument, "--n conflicts with a fixed N in the config");
        c.n = fl.n;
    }
    if (fl.gamma > 0.0) {
        if (c.N)
            throw Error(ErrorCode::InvalidArgument, "--gamma conflicts with a fixed N in the config");
        c.gamma = fl.gamma;
    }
    if (fl.degree > 0)
        c.degree = fl.degree;
    if (fl.seed >= 0)
        c.seed = static_cast<std::uint64_t>(fl.seed);
    if (!fl.quad.empty()) {
        std::stringstream ss(fl.quad);
        std::string part;
        std::vector<std::string> v;
        while (std::getline(ss, part, ','))
            v.push_back(part);
        if (v.size() != 3)
            throw Error(ErrorCode::InvalidArgument, "--quad expects nr,nt,eps");
        try {
            c.quad.radial_panels = std::stoi(v[0]);
            c.quad.angular = std::stoi(v[1]);
            c.quad_eps = std::stod(v[2]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "--quad expects nr,nt,eps");
        }
    }
    c.validate();
    return c;
}

int degree_of(const ExperimentConfig& c) { return c.degree > 0 ? c.degree : (c.n ? *c.n : 10); }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Orthogonal polynomials up to degree n; quad precision above degree 30, where
/// long double no longer pins the zeros down.
struct PolyStage {
    QuadGrid<long double> grid;
    std::variant<OrthoPolySet<long double>, OrthoPolySet<float128>> ops;
};

PolyStage build_polys(const ExperimentConfig& c, int n) {
    const auto p = c.potential();
    auto g = build_grid<long double>(p, c.quad_eps, c.quad, 2 * n);
    if (n > 30) {
        auto ops = build_orthopolys<float128>(p, g, n, {1e-8, false});
        return {std::move(g), std::move(ops)};
    }
    auto ops = build_orthopolys<long double>(p, g, n);
    return {std::move(g), std::move(ops)};
}

ZeroSet zeros_of(const PolyStage& s, int n) {
    return std::visit([n](const auto& ops) { return compute_zeros(ops, n); }, s.ops);
}

double poly_potential(const PolyStage& s, int n, cplx z) {
    return std::visit(
        [&](const auto& ops) {
            const auto v = polynomial_potential(ops, n, z);
            return v.is_infinite() ? std::numeric_limits<double>::infinity() : v.value();
        },
        s.ops);
}

json support_files(const ExperimentConfig& c, const fs::path& out) {
    const auto p = c.potential();
    const auto geom = classify_support(p.rescaled());
    json g = geometry_json(geom);
    if (const auto* d = std::get_if<DiskWithCavities>(&geom))
        g["F"] = robin_constant(geom, p.rescaled());
    write_json(out / "geometry.json", g);
    std::vector<std::vector<double>> rows;
    const auto lines = support_outlines(geom);
    for (std::size_t i = 0; i < lines.size(); ++i)
        for (const auto& z : lines[i])
            rows.push_back({static_cast<double>(i), z.real(), z.imag()});
    write_text(out / "boundary.csv", csv({"curve", "re", "im"}, rows));
    write_text(out / "support.svg", support_svg(geom, p.rescaled()).str());
    return g;
}

json equilibrium_report(const ExperimentConfig& c, const fs::path& out, bool& pass) {
    const auto q = c.potential().rescaled();
    const auto geom = classify_support(q);
    GridSpec spec;
    if (std::holds_alternative<ExteriorMap>(geom))
        spec.tol_on = 1e-4;
    const auto rep = verify_equilibrium(geom, q, spec);
    pass = rep.pass;
    json j = {{"max_dev_on", rep.max_dev_on}, {"min_margin_off", rep.min_margin_off}, {"mass_error", rep.mass_error}, {"F", rep.F},
              {"tol_on", rep.tol_on},         {"tol_off", rep.tol_off},               {"pass", rep.pass}};
    write_json(out / "equilibrium.json", j);
    return j;
}

json norms_files(const ExperimentConfig& c, int n, const fs::path& out) {
    const auto p = c.potential();
    const auto g = build_grid<long double>(p, c.quad_eps, c.quad, 2 * n);
    const auto ops = build_orthopolys_auto(p, g, n);
    std::vector<std::vector<double>> rows;
    for (int k = 0; k <= n; ++k)
        rows.push_back({static_cast<double>(k), static_cast<double>(ops.norm(k))});
    write_text(out / "norms.csv", csv({"k", "h"}, rows));
    json j = {{"n", n}, {"nodes", g.size()}, {"gram_residual", gram_residual(ops, g, n)}};
    write_json(out / "orthopoly.json", j);
    return j;
}

json zeros_files(const ExperimentConfig& c, int n, const fs::path& out, std::vector<cplx>* zeros = nullptr) {
    const auto s = build_polys(c, n);
    const auto zs = zeros_of(s, n);
    write_text(out / "zeros.csv", points_csv(zs.zeros));
    const auto rb = radius_bound_check(c.potential(), zs, 1e-6);
    if (zeros)
        *zeros = zs.zeros;
    json j = {{"n", n},
              {"iterations", zs.iterations},
              {"max_residual", zs.max_residual},
              {"fraction_inside_radius", rb.fraction_inside},
              {"max_modulus", rb.max_modulus}};
    write_json(out / "zeros.json", j);
    return j;
}

ExteriorMap exterior_map_of(const ExperimentConfig& c) {
    const auto geom = classify_support(c.potential().rescaled());
    const auto* m = std::get_if<ExteriorMap>(&geom);
    if (!m)
        throw Error(ErrorCode::Unsupported, "critical trajectories need the exterior-map case");
    return *m;
}

json trajectory_files(const ExperimentConfig& c, const fs::path& out, std::vector<Trajectory>* keep = nullptr) {
    const auto m = exterior_map_of(c);
    auto trs = critical_trajectories(m);
    tag_attractors(trs, m, c.potential().rescaled().alpha());
    std::vector<std::vector<double>> rows;
    json list = json::array();
    for (std::size_t i = 0; i < trs.size(); ++i) {
        for (const auto& z : trs[i].points)
            rows.push_back({static_cast<double>(i), z.real(), z.imag()});
        list.push_back({{"id", i},
                        {"end", to_string(trs[i].end)},
                        {"connecting", trs[i].connecting},
                        {"attractor", trs[i].attractor},
                        {"raw_mass", trs[i].raw_mass},
                        {"max_residual", trs[i].max_residual}});
    }
    write_text(out / "trajectories.csv", csv({"id", "re", "im"}, rows));
    json bps = json::array();
    for (const auto& b : branch_points(m))
        bps.push_back(cplx_json(b));
    json j = {{"branch_points", bps}, {"trajectories", list}};
    write_json(out / "trajectories.json", j);
    if (keep)
        *keep = std::move(trs);
    return j;
}

json dbar_files(const ExperimentConfig& c, int k, const fs::path& out, bool& pass) {
    const auto p = c.potential();
    const auto geom = classify_support(p.rescaled());
    // 50 samples each in the support, the cavities and outside, away from charges
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const auto box = support_bbox(geom);
    const double span = std::max(box[1] - box[0], box[3] - box[2]);
    std::vector<cplx> inside, cavity, outside;
    auto far_from_charges = [&](cplx z) {
        for (const auto& q : p.nu())
            if (std::abs(z - q.location) < 0.3)
                return false;
        return true;
    };
    const auto* disk = std::get_if<DiskWithCavities>(&geom);
    for (int tries = 0; tries < 200000 && (inside.size() < 50 || outside.size() < 50 || cavity.size() < 50); ++tries) {
        const cplx z(0.5 * (box[0] + box[1]) + 0.75 * span * U(rng), 0.5 * (box[2] + box[3]) + 0.75 * span * U(rng));
        if (!far_from_charges(z))
            continue;
        bool in_cav = false;
        if (disk)
            for (const auto& cv : disk->cavities)
                in_cav = in_cav || std::abs(z - cv.center) < cv.radius;
        auto& bucket = in_support(geom, z) ? inside : (in_cav ? cavity : outside);
        if (bucket.size() < 50)
            bucket.push_back(z);
    }
    std::vector<cplx> all;
    for (auto* v : {&inside, &cavity, &outside})
        all.insert(all.end(), v->begin(), v->end());
    const cplx z0 = far_from_charges(cplx(0.5, 0.5)) ? cplx(0.5, 0.5) : inside.front();
    all.push_back(z0);
    const int nmax = std::max(k, degree_of(c));
    const auto g = build_grid<long double>(p, c.quad_eps, {c.quad.radial_panels, std::max(c.quad.angular, cauchy_angular(p, all, 2 * nmax + 2))},
                                           2 * nmax + 2);
    const auto ops = build_orthopolys<long double>(p, g, nmax);
    const DbarMatrix<long double> Y(ops, g, k);
    json j;
    j["k"] = k;
    j["nodes"] = g.size();
    pass = true;
    try {
        const auto ord = dbar_order_check(Y, z0);
        j["order_point"] = cplx_json(z0);
        j["order12"] = ord.order12;
        j["order22"] = ord.order22;
        j["residuals"] = ord.residuals;
        pass = ord.order12 >= 1.8 && ord.order22 >= 1.8;
    } catch (const Error& e) {
        j["order_error"] = e.what();
        pass = false;
    }
    const double h = 5e-3;
    for (const auto& [name, pts] : {std::pair{"support", &inside}, std::pair{"cavity", &cavity}, std::pair{"outside", &outside}}) {
        double worst = 0.0;
        for (const auto& z : *pts) {
            const auto r = dbar_residual(Y, z, h);
            for (double e : r)
                worst = std::max(worst, e);
        }
        j["max_residual_" + std::string(name)] = worst;
        j["samples_" + std::string(name)] = pts->size();
    }
    std::vector<double> radii;
    for (double m : {4.0, 8.0, 16.0, 32.0, 64.0})
        radii.push_back(m * outer_radius(p.rescaled()));
    const auto as = asymptotic_normalization(Y, radii);
    j["asymptotic_slopes"] = as.slopes;
    pass = pass && as.decays(0.2);
    const auto u = uniqueness_crosscheck(ops, g, k);
    j["max_orthogonality"] = u.max_orthogonality;
    j["normalization"] = u.normalization;
    j["pass"] = pass;
    write_json(out / "dbar.json", j);
    return j;
}

json fekete_files(const ExperimentConfig& c, int n, int seeds, const fs::path& out) {
    const auto p = c.potential();
    FeketeOptions opt;
    opt.seeds = seeds;
    const auto cfg = fekete_minimize(n, p, c.seed, opt);
    const auto geom = classify_support(p.rescaled());
    const auto d = fekete_discrepancy(cfg.points, p, geom);
    write_text(out / "fekete.csv", points_csv(cfg.points));
    std::vector<std::vector<double>> rows;
    for (const auto& r : d.rings)
        rows.push_back({r.r0, r.r1, r.observed, r.expected});
    write_text(out / "fekete_rings.csv", csv({"r0", "r1", "observed", "expected"}, rows));
    auto svg = support_svg(geom, p.rescaled());
    for (const auto& z : cfg.points)
        svg.dot(z, "black", 1.5);
    write_text(out / "fekete.svg", svg.str());
    json j = {{"n", n},
              {"seed", cfg.seed},
              {"energy", cfg.energy},
              {"iterations", cfg.iterations},
              {"gradient_norm", cfg.gradient_norm},
              {"fraction_in_support", d.fraction_in_support},
              {"fraction_in_cavities", d.fraction_in_cavities},
              {"fraction_outside", d.fraction_outside},
              {"max_discrepancy", d.max_discrepancy}};
    write_json(out / "fekete.json", j);
    return j;
}

/// Contour data for -(1/n) log|P_n| and the equilibrium potential on a square grid.
json compare_files(const ExperimentConfig& c, int n, const fs::path& out, const PolyStage* have = nullptr) {
    const auto p = c.potential();
    const auto q = p.rescaled();
    const SupportPotential us(classify_support(q));
    std::optional<PolyStage> own;
    if (!have) {
        own = build_polys(c, n);
        have = &*own;
    }
    const double R = outer_radius(q);
    std::vector<cplx> ring;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 64; ++j)
            ring.push_back(std::polar(R * (1.5 + 1.5 * i / 15.0), 2.0 * pi * j / 64));
    const auto cmp = external_potential_compare([&](cplx z) { return poly_potential(*have, n, z); }, us, q.alpha(), ring);
    const int side = 121;
    const double L = 3.0 * R;
    std::vector<std::vector<double>> poly_rows, eq_rows;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            const cplx z(-L + 2.0 * L * i / (side - 1), -L + 2.0 * L * j / (side - 1));
            poly_rows.push_back({z.real(), z.imag(), poly_potential(*have, n, z)});
            eq_rows.push_back({z.real(), z.imag(), 2.0 * q.alpha() / pi * us(z)});
        }
    write_text(out / "contour_polynomial.csv", csv({"re", "im", "value"}, poly_rows));
    write_text(out / "contour_equilibrium.csv", csv({"re", "im", "value"}, eq_rows));
    json j = {{"n", n}, {"annulus", {1.5 * R, 3.0 * R}}, {"sup_error", cmp.sup}, {"mean_error", cmp.mean}};
    write_json(out / "compare.json", j);
    return j;
}

int run_verify(const Flags& fl) {
    SuiteOptions opt;
    opt.quick = fl.quick;
    opt.corrupt_geometry = fl.corrupt;
    json report = json::array();
    bool pass = true;
    for (const auto& check : acceptance_suite(opt)) {
        const auto r = timed(check);
        pass = pass && r.pass;
        std::printf("%2d %-40s %s\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL");
        std::fflush(stdout);
        report.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"detail", r.detail}});
    }
    write_json(fs::path(fl.out) / "verify.json", {{"pass", pass}, {"checks", report}});
    return pass ? ok : invariant_failure;
}

int run_pipeline(const ExperimentConfig& c, const fs::path& out) {
    const int n = degree_of(c);
    const auto p = c.potential();
    json summary;
    summary["config"] = config_to_json(c);
    summary["support"] = stage("support", [&] { return support_files(c, out); });
    bool eq_pass = false, dbar_pass = false;
    summary["equilibrium"] = stage("equilibrium", [&] { return equilibrium_report(c, out, eq_pass); });
    const auto polys = stage("orthopoly", [&] { return build_polys(c, n); });
    std::vector<cplx> zeros;
    summary["zeros"] = stage("zeros", [&] {
        const auto zs = zeros_of(polys, n);
        zeros = zs.zeros;
        write_text(out / "zeros.csv", points_csv(zs.zeros));
        return json{{"n", n}, {"max_residual", zs.max_residual}, {"iterations", zs.iterations}};
    });
    std::vector<Trajectory> trs;
    const auto geom = classify_support(p.rescaled());
    if (std::holds_alternative<ExteriorMap>(geom)) {
        summary["trajectories"] = stage("trajectory", [&] { return trajectory_files(c, out, &trs); });
        double acc = 0.0;
        int conn = 0;
        for (const auto& t : trs)
            conn += t.connecting;
        if (conn > 0) {
            for (const auto& z : zeros) {
                double d = 1e300;
                for (const auto& t : trs)
                    if (t.connecting)
                        d = std::min(d, distance_to_polyline(t.points, z));
                acc += d;
            }
            summary["mean_zero_distance"] = acc / std::max<std::size_t>(1, zeros.size());
        }
    }
    auto svg = support_svg(geom, p.rescaled());
    for (const auto& t : trs)
        svg.polyline(t.points, t.connecting ? "#e6550d" : "#636363", t.connecting ? 1.5 : 0.8);
    for (const auto& z : zeros)
        svg.dot(z, "black", 2.0);
    write_text(out / "overlay.svg", svg.str());
    summary["compare"] = stage("compare", [&] { return compare_files(c, n, out, &polys); });
    ExperimentConfig dc = c;
    dc.degree = std::min(n, 6);
    summary["dbar"] = stage("dbar-check", [&] { return dbar_files(dc, std::min(n, 3), out, dbar_pass); });
    summary["pass"] = eq_pass && dbar_pass;
    write_json(out / "pipeline.json", summary);
    return eq_pass && dbar_pass ? ok : invariant_failure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibrium supports, planar orthogonal polynomials and Fekete points for a point-charge perturbed Gaussian weight"};
    app.require_subcommand(1);
    Flags fl;

    auto common = [&fl](CLI::App* s) {
        s->add_option("--config", fl.config, "JSON config file")->check(CLI::ExistingFile);
        s->add_option("--out", fl.out, "output directory");
        s->add_option("--quad", fl.quad, "quadrature radial panels, angular nodes, tail eps as nr,nt,eps");
        s->add_option("--degree", fl.degree, "polynomial degree");
        s->add_option("--gamma", fl.gamma, "ratio N/n");
        s->add_option("--seed", fl.seed, "random seed");
        s->add_option("--n", fl.n, "degree in the scaling N = gamma n, or Fekete point count");
        s->add_flag("--quick", fl.quick, "shortened runs");
    };
    std::vector<CLI::App*> subs;
    const std::pair<const char*, const char*> commands[] = {
        {"support", "equilibrium support, boundary and equilibrium check"},
        {"orthopoly", "orthogonal polynomial norms and recurrence"},
        {"zeros", "zeros of P_n"},
        {"dbar-check", "dbar equation residuals and normalization at infinity"},
        {"trajectory", "branch points and critical trajectories"},
        {"fekete", "weighted Fekete points and ring discrepancy"},
        {"compare", "zero counting potential against the equilibrium potential"},
        {"verify", "acceptance checks"},
        {"pipeline", "support, zeros, dbar check and comparison in one run"},
    };
    for (const auto& [name, about] : commands)
        subs.push_back(app.add_subcommand(name, about));
    for (auto* s : subs)
        common(s);
    app.get_subcommand("dbar-check")->add_option("--k", fl.k, "matrix index k")->check(CLI::PositiveNumber);
    app.get_subcommand("fekete")->add_option("--seeds", fl.seeds, "number of random starts")->check(CLI::PositiveNumber);
    app.get_subcommand("verify")->add_flag("--corrupt", fl.corrupt, "inflate the supports (negative control)");

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();
    const fs::path out(fl.out);
    try {
        if (cmd == "verify")
            return run_verify(fl);
        const ExperimentConfig c = load_config(fl);
        json j;
        bool pass = true;
        if (cmd == "support") {
            j = support_files(c, out);
            j["equilibrium"] = equilibrium_report(c, out, pass);
        } else if (cmd == "orthopoly") {
            j = norms_files(c, degree_of(c), out);
        } else if (cmd == "zeros") {
            j = zeros_files(c, degree_of(c), out);
        } else if (cmd == "dbar-check") {
            j = dbar_files(c, fl.k, out, pass);
        } else if (cmd == "trajectory") {
            j = trajectory_files(c, out);
        } else if (cmd == "fekete") {
            j = fekete_files(c, fl.n > 0 ? fl.n : (c.n ? *c.n : 200), fl.seeds, out);
        } else if (cmd == "compare") {
            j = compare_files(c, degree_of(c), out);
        } else if (cmd == "pipeline") {
            return run_pipeline(c, out);
        }
        std::cout << j.dump(2) << "\n";
        return pass ? ok : invariant_failure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::Unsupported ? unsupported : bad_input;
    }
}
