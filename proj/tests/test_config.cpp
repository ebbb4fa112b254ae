#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stargraph/config.hpp"
#include "stargraph/errors.hpp"
#include "stargraph/io.hpp"
#include "stargraph/runner.hpp"

using namespace stargraph;
using nlohmann::json;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("stargraph_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}
}  // namespace

TEST_CASE("preset fig1 expands to the two-arm constant-field scenario") {
    RunConfig cfg = config_from_json(json{{"preset", "fig1"}});
    CHECK(cfg.scenario == "fig1");
    REQUIRE(cfg.graph.arms() == 2);
    CHECK(cfg.potential.V0 == doctest::Approx(16.7875));
    CHECK(cfg.potential.d == 1.0);
    CHECK(!cfg.potential.modulation.has_value());
    REQUIRE(cfg.drives.field.size() == 2);
    CHECK(cfg.drives.field[0].kind == FieldLaw::Kind::Constant);
    CHECK(cfg.drives.field[0].f == doctest::Approx(0.2));
    CHECK(cfg.drives.field[1].f == doctest::Approx(-0.2));
    CHECK(cfg.packet.x0 == 78.0);
    CHECK(cfg.packet.sigma == 6.0);
    CHECK(cfg.packet.arm == 0);
    // resolved sampling: T_B/200 = (2 pi / 0.2)/200
    CHECK(cfg.numerics.dt_sample == doctest::Approx(2.0 * kPi / 0.2 / 200.0));
}

TEST_CASE("preset fig6 blocks the second arm") {
    RunConfig cfg = config_from_json(json{{"preset", "fig6"}});
    REQUIRE(cfg.graph.arms() == 3);
    CHECK(cfg.drives.field[0].f == doctest::Approx(kPi / 10));
    CHECK(cfg.drives.field[1].f == doctest::Approx(-kPi / 10));
    CHECK(cfg.drives.field[1].phi == doctest::Approx(kPi / 2));
    CHECK(cfg.drives.field[2].phi == 0.0);
    CHECK(cfg.drives.field[0].omega == doctest::Approx(0.2));
    CHECK(cfg.run.t_end == 94.25);
    CHECK(!cfg.sweep.has_value());

    RunConfig fig7 = config_from_json(json{{"preset", "fig7"}});
    REQUIRE(fig7.sweep.has_value());
    CHECK(fig7.sweep->grid_points == 33);
    CHECK(fig7.sweep->t_final == 94.25);
}

TEST_CASE("field-by-field override of a preset") {
    RunConfig cfg = config_from_json(
        json{{"preset", "fig4"}, {"numerics", {{"k_max", 5.0}}}, {"run", {{"t_end", 7.0}}}});
    CHECK(cfg.numerics.k_max == 5.0);
    CHECK(cfg.run.t_end == 7.0);
    CHECK(cfg.packet.x0 == 22.0);  // untouched preset values survive
}

TEST_CASE("missing graph is reported by name") {
    try {
        config_from_json(json::object());
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("graph") != std::string::npos);
    }
}

TEST_CASE("empty config file behaves like an empty object") {
    const auto dir = temp_dir("empty");
    const auto path = dir / "empty.json";
    std::ofstream(path) << "";
    try {
        load_config(path.string());
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("graph") != std::string::npos);
    }
}

TEST_CASE("schema violations carry field paths") {
    CHECK_THROWS_AS(config_from_json(json{{"preset", "nosuch"}}), UnknownPresetError);
    try {
        config_from_json(json{{"preset", "fig1"}, {"graph", {{"arm_lengths", {1.0, -2.0}}}}});
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("arm_lengths[1]") != std::string::npos);
    }
    try {
        config_from_json(json{{"preset", "fig1"}, {"numerics", {{"bogus_key", 1}}}});
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    CHECK_THROWS_AS(
        config_from_json(json{{"preset", "fig4"}, {"packet", {{"arm", 9}}}}),
        SchemaError);
}

TEST_CASE("config json round-trip is the identity on semantic fields") {
    RunConfig cfg = config_from_json(json{{"preset", "fig6"}});
    const auto j1 = config_to_json(cfg);
    RunConfig cfg2 = config_from_json(j1);
    const auto j2 = config_to_json(cfg2);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("csv formatting round-trips doubles") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    const double v = 0.29735763271532445;
    CHECK(std::stod(format_double(v)) == v);
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("pipeline determinism: manifest rerun reproduces bytes") {
    // small line scenario kept cheap on purpose
    json base = {
        {"scenario", "mini"},
        {"graph", {{"arm_lengths", {8.0, 4.0 + std::sqrt(2.0)}}}},
        {"potential", {{"V0", 16.7875}, {"d", 1.0}}},
        {"drives",
         {{{"type", "sinusoidal"}, {"f", kPi / 10}, {"omega", 0.2}, {"phi", 0.0}},
          {{"type", "sinusoidal"}, {"f", -kPi / 10}, {"omega", 0.2}, {"phi", 0.0}}}},
        {"packet", {{"arm", 1}, {"x0", 4.0}, {"sigma", 1.0}, {"q", 0.0}}},
        {"numerics", {{"k_max", 6.0}}},
        {"run", {{"t_end", 3.0}, {"density_stride", 5}}},
        {"threads", 2},
    };
    const auto dir1 = temp_dir("det1");
    const auto dir2 = temp_dir("det2");
    cmd_evolve(config_from_json(base), dir1);

    // rerun straight from the manifest
    RunConfig from_manifest = load_config((dir1 / "manifest.json").string());
    cmd_evolve(from_manifest, dir2);

    for (const char* name :
         {"norms.csv", "spectrum.csv", "density_arm1.csv", "density_arm2.csv",
          "width.csv"}) {
        CAPTURE(name);
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    }

    // thread-count invariance of every numeric output
    json threads1 = base;
    threads1["threads"] = 1;
    const auto dir3 = temp_dir("det3");
    cmd_evolve(config_from_json(threads1), dir3);
    CHECK(slurp(dir1 / "norms.csv") == slurp(dir3 / "norms.csv"));
    CHECK(slurp(dir1 / "density_arm1.csv") == slurp(dir3 / "density_arm1.csv"));
}
