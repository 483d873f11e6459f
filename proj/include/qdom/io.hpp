#pragma once

#include "qdom/core.hpp"
#include "qdom/equilibrium.hpp"
#include "qdom/measures.hpp"
#include "qdom/quadrature.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qdom {

using json = nlohmann::json;

/// Potential and run options read from one JSON document.
/// Either N is fixed or the pair (n, gamma) is given, in which case N = gamma n.
struct ExperimentConfig {
    double alpha = 0.5;
    std::optional<double> N;
    std::optional<int> n;
    std::optional<double> gamma;
    std::vector<PointCharge> charges;
    std::uint64_t seed = 1;
    int degree = 0;
    QuadOrders quad{};
    double quad_eps = 1e-14;

    double scale_gamma() const { return gamma.value_or(2.0); }

    double weight_N() const {
        if (N)
            return *N;
        if (n)
            return scale_gamma() * *n;
        return 1.0;
    }

    PerturbedPotential potential() const {
        return PerturbedPotential(alpha, PointChargeMeasure(charges), weight_N(), scale_gamma());
    }

    void validate() const {
        if (!(alpha > 0.0))
            throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
        if (N && (n || gamma))
            throw Error(ErrorCode::InvalidArgument, "give either N or (n, gamma), not both");
        if (N && !(*N > 0.0))
            throw Error(ErrorCode::InvalidArgument, "N must be positive");
        if (n && *n < 1)
            throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
        if (gamma && !(*gamma > 0.0))
            throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
        if (degree < 0 || quad.radial_panels < 0 || quad.angular < 0 || !(quad_eps > 0.0))
            throw Error(ErrorCode::InvalidArgument, "degree and quadrature orders must be non-negative");
        (void)PointChargeMeasure(charges);
    }
};

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        c.alpha = j.value("alpha", 0.5);
        if (j.contains("N"))
            c.N = j.at("N").get<double>();
        if (j.contains("n"))
            c.n = j.at("n").get<int>();
        if (j.contains("gamma"))
            c.gamma = j.at("gamma").get<double>();
        if (j.contains("charges"))
            for (const auto& q : j.at("charges"))
                c.charges.push_back({cplx(q.value("re", 0.0), q.value("im", 0.0)), q.at("beta").get<double>()});
        c.seed = j.value("seed", std::uint64_t{1});
        c.degree = j.value("degree", 0);
        if (j.contains("quad")) {
            const auto& q = j.at("quad");
            c.quad.radial_panels = q.value("radial_panels", 0);
            c.quad.angular = q.value("angular", 0);
            c.quad_eps = q.value("eps", 1e-14);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["alpha"] = c.alpha;
    if (c.N)
        j["N"] = *c.N;
    if (c.n)
        j["n"] = *c.n;
    if (c.gamma)
        j["gamma"] = *c.gamma;
    j["charges"] = json::array();
    for (const auto& q : c.charges)
        j["charges"].push_back({{"re", q.location.real()}, {"im", q.location.imag()}, {"beta", q.mass}});
    j["seed"] = c.seed;
    j["degree"] = c.degree;
    j["quad"] = {{"radial_panels", c.quad.radial_panels}, {"angular", c.quad.angular}, {"eps", c.quad_eps}};
    return j;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json geometry_json(const SupportGeometry& geom) {
    json j;
    if (const auto* d = std::get_if<DiskWithCavities>(&geom)) {
        j["type"] = "disk_with_cavities";
        j["R"] = d->R;
        j["cavities"] = json::array();
        for (const auto& c : d->cavities)
            j["cavities"].push_back({{"center", cplx_json(c.center)}, {"radius", c.radius}});
    } else {
        const auto& m = std::get<ExteriorMap>(geom);
        j["type"] = "exterior_map";
        j["rho"] = m.rho;
        j["u"] = cplx_json(m.u);
        j["v"] = cplx_json(m.v);
        j["A"] = cplx_json(m.A);
    }
    j["area"] = support_area(geom);
    return j;
}

/// Fixed-format number so repeated runs give byte-identical files.
inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// CSV with a header line; each row is a list of numbers.
inline std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            os << (i ? "," : "") << num(r[i]);
        os << '\n';
    }
    return os.str();
}

inline std::string points_csv(const std::vector<cplx>& z) {
    std::vector<std::vector<double>> rows;
    for (const auto& x : z)
        rows.push_back({x.real(), x.imag()});
    return csv({"re", "im"}, rows);
}

/// Minimal SVG canvas in plot coordinates (y up).
class SvgCanvas {
public:
    SvgCanvas(double x0, double x1, double y0, double y1, int width = 600)
        : x0_(x0), y1_(y1), s_(width / (x1 - x0)), w_(width), h_(static_cast<int>(std::ceil((y1 - y0) * s_))) {}

    void polygon(const std::vector<cplx>& pts, const std::string& fill, const std::string& stroke = "none") {
        body_ << "<polygon points=\"" << path(pts) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void polyline(const std::vector<cplx>& pts, const std::string& stroke, double width = 1.0) {
        body_ << "<polyline points=\"" << path(pts) << "\" fill=\"none\" stroke=\"" << stroke
              << "\" stroke-width=\"" << num(width) << "\"/>\n";
    }
    void circle(cplx c, double r, const std::string& fill, const std::string& stroke = "none") {
        const cplx p = map(c);
        body_ << "<circle cx=\"" << num(p.real()) << "\" cy=\"" << num(p.imag()) << "\" r=\"" << num(r * s_)
              << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void dot(cplx c, const std::string& fill, double px = 2.0) {
        const cplx p = map(c);
        body_ << "<circle cx=\"" << num(p.real()) << "\" cy=\"" << num(p.imag()) << "\" r=\"" << num(px)
              << "\" fill=\"" << fill << "\"/>\n";
    }

    std::string str() const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\">\n"
           << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    cplx map(cplx z) const { return {(z.real() - x0_) * s_, (y1_ - z.imag()) * s_}; }
    std::string path(const std::vector<cplx>& pts) const {
        std::ostringstream os;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const cplx p = map(pts[i]);
            os << (i ? " " : "") << num(p.real()) << "," << num(p.imag());
        }
        return os.str();
    }

    double x0_, y1_, s_;
    int w_, h_;
    std::ostringstream body_;
};

/// Boundary points of the support, outer curve first.
inline std::vector<std::vector<cplx>> support_outlines(const SupportGeometry& geom, int samples = 720) {
    std::vector<std::vector<cplx>> out;
    auto circle = [samples](cplx c, double r) {
        std::vector<cplx> v;
        for (int i = 0; i < samples; ++i)
            v.push_back(c + std::polar(r, 2.0 * pi * i / samples));
        return v;
    };
    if (const auto* d = std::get_if<DiskWithCavities>(&geom)) {
        out.push_back(circle(0.0, d->R));
        for (const auto& c : d->cavities)
            out.push_back(circle(c.center, c.radius));
    } else {
        const auto& m = std::get<ExteriorMap>(geom);
        std::vector<cplx> v;
        for (int i = 0; i < samples; ++i)
            v.push_back(m.f(std::polar(1.0, 2.0 * pi * i / samples)));
        out.push_back(v);
    }
    return out;
}

/// Shaded support with cavities cut out, plus the charges.
inline SvgCanvas support_svg(const SupportGeometry& geom, const PerturbedPotential& p) {
    auto box = support_bbox(geom);
    const double pad = 0.1 * std::max(box[1] - box[0], box[3] - box[2]);
    for (const auto& c : p.nu()) {
        box[0] = std::min(box[0], c.location.real());
        box[1] = std::max(box[1], c.location.real());
        box[2] = std::min(box[2], c.location.imag());
        box[3] = std::max(box[3], c.location.imag());
    }
    SvgCanvas svg(box[0] - pad, box[1] + pad, box[2] - pad, box[3] + pad);
    const auto lines = support_outlines(geom);
    svg.polygon(lines[0], "#9ecae1", "#08519c");
    for (std::size_t i = 1; i < lines.size(); ++i)
        svg.polygon(lines[i], "white", "#08519c");
    for (const auto& c : p.nu())
        svg.dot(c.location, "#cb181d", 3.0);
    return svg;
}

/// Binary grid cache: magic, version, sizeof(Real), node count, the scalar grid
/// fields, then z, w, lambda per node. Charge patches are not stored.
inline constexpr char grid_magic[8] = {'Q', 'D', 'O', 'M', 'G', 'R', 'I', 'D'};
inline constexpr std::uint32_t grid_version = 2;

template <class Real>
void save_grid(const QuadGrid<Real>& g, const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    const std::uint32_t rsize = sizeof(Real);
    const std::uint64_t count = g.size();
    out.write(grid_magic, sizeof grid_magic);
    out.write(reinterpret_cast<const char*>(&grid_version), sizeof grid_version);
    out.write(reinterpret_cast<const char*>(&rsize), sizeof rsize);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    const double scalars[3] = {g.truncation_radius, g.tail_bound, g.eps_tail};
    const std::int32_t counts[2] = {g.radial_nodes, g.angular};
    out.write(reinterpret_cast<const char*>(scalars), sizeof scalars);
    out.write(reinterpret_cast<const char*>(counts), sizeof counts);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Real v[4] = {g.z[i].real(), g.z[i].imag(), g.w[i], g.lam[i]};
        out.write(reinterpret_cast<const char*>(v), sizeof v);
    }
}

template <class Real>
QuadGrid<Real> load_grid(const std::filesystem::path& path, const PerturbedPotential& p) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    char magic[8];
    std::uint32_t version = 0, rsize = 0;
    std::uint64_t count = 0;
    QuadGrid<Real> g;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&rsize), sizeof rsize);
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    double scalars[3] = {};
    std::int32_t counts[2] = {};
    in.read(reinterpret_cast<char*>(scalars), sizeof scalars);
    in.read(reinterpret_cast<char*>(counts), sizeof counts);
    g.truncation_radius = scalars[0];
    g.tail_bound = scalars[1];
    g.eps_tail = scalars[2];
    g.radial_nodes = counts[0];
    g.angular = counts[1];
    if (!in || std::memcmp(magic, grid_magic, sizeof magic) != 0)
        throw Error(ErrorCode::Io, path.string() + " is not a grid cache");
    if (version != grid_version || rsize != sizeof(Real))
        throw Error(ErrorCode::Io, path.string() + " has an incompatible version or precision");
    g.potential = p;
    g.z.resize(count);
    g.w.resize(count);
    g.lam.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Real v[4];
        in.read(reinterpret_cast<char*>(v), sizeof v);
        g.z[i] = {v[0], v[1]};
        g.w[i] = v[2];
        g.lam[i] = v[3];
    }
    if (!in)
        throw Error(ErrorCode::Io, path.string() + " is truncated");
    return g;
}

} // namespace qdom
