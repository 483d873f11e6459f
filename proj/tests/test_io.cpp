#include "qdom/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace qdom;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "qdom_io_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(Config, RoundTrip) {
    ExperimentConfig c;
    c.alpha = 0.7;
    c.n = 12;
    c.gamma = 1.5;
    c.charges = {{cplx(0.2, -0.1), 0.3}, {cplx(-1.0, 0.5), 0.2}};
    c.seed = 99;
    c.degree = 7;
    c.quad = {5, 64};
    const auto d = config_from_json(config_to_json(c));
    EXPECT_EQ(d.alpha, c.alpha);
    EXPECT_EQ(d.n, c.n);
    EXPECT_EQ(d.gamma, c.gamma);
    EXPECT_FALSE(d.N);
    ASSERT_EQ(d.charges.size(), 2u);
    EXPECT_EQ(d.charges[1].location, c.charges[1].location);
    EXPECT_EQ(d.charges[1].mass, c.charges[1].mass);
    EXPECT_EQ(d.seed, 99u);
    EXPECT_EQ(d.quad.angular, 64);
    EXPECT_DOUBLE_EQ(d.weight_N(), 18.0);
}

TEST(Config, RejectsConflictingScales) {
    EXPECT_THROW(config_from_json(json{{"alpha", 0.5}, {"N", 4.0}, {"n", 2}}), Error);
    EXPECT_THROW(config_from_json(json{{"alpha", -1.0}}), Error);
    EXPECT_THROW(config_from_json(json{{"alpha", 0.5}, {"charges", json::array({{{"re", 0.0}, {"im", 0.0}, {"beta", -1.0}}})}}),
                 Error);
}

TEST(Config, DefaultsGiveUnitScale) {
    const auto c = config_from_json(json{{"alpha", 0.5}});
    EXPECT_DOUBLE_EQ(c.weight_N(), 1.0);
    EXPECT_DOUBLE_EQ(c.scale_gamma(), 2.0);
}

TEST(Text, NumbersRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23})
        EXPECT_EQ(std::stod(num(x)), x);
    EXPECT_EQ(csv({"a", "b"}, {{1.0, 2.0}}), "a,b\n1,2\n");
}

TEST(Text, GeometryJsonNamesTheCase) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.0), 0.5}}));
    const auto j = geometry_json(classify_support(p));
    EXPECT_EQ(j["type"], "disk_with_cavities");
    EXPECT_EQ(support_outlines(classify_support(p)).size(), 2u);
}

TEST(Svg, ProducesAClosedDocument) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(2.0, 0.0), 0.5}}));
    const auto s = support_svg(classify_support(p), p).str();
    EXPECT_NE(s.find("<svg"), std::string::npos);
    EXPECT_NE(s.find("</svg>"), std::string::npos);
}

TEST(GridCache, RoundTripIsExact) {
    const PerturbedPotential p(0.5, PointChargeMeasure({{cplx(0.3, 0.2), 0.4}}), 3.0);
    const auto g = build_grid<long double>(p, 1e-10, {}, 4);
    const auto path = scratch("grid.bin");
    save_grid(g, path);
    const auto h = load_grid<long double>(path, p);
    ASSERT_EQ(h.size(), g.size());
    EXPECT_EQ(h.angular, g.angular);
    EXPECT_EQ(h.truncation_radius, g.truncation_radius);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(h.z[i], g.z[i]);
        EXPECT_EQ(h.lam[i], g.lam[i]);
    }
}

TEST(GridCache, RejectsWrongPrecisionAndGarbage) {
    const PerturbedPotential p(0.5, PointChargeMeasure{});
    const auto path = scratch("grid_ld.bin");
    save_grid(build_grid<long double>(p, 1e-8), path);
    EXPECT_THROW(load_grid<double>(path, p), Error);
    const auto junk = scratch("junk.bin");
    write_text(junk, "not a grid");
    EXPECT_THROW(load_grid<long double>(junk, p), Error);
    EXPECT_THROW(load_grid<long double>(scratch("missing.bin"), p), Error);
}
