#include "stargraph/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stargraph/errors.hpp"

namespace stargraph {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

ordered_json star_graph_base() {
    ordered_json j;
    j["graph"]["arm_lengths"] = {40.0, 40.0 + std::sqrt(2.0), 40.0 + std::sqrt(3.0)};
    j["potential"] = {{"V0", 16.7875}, {"d", 1.0}};
    j["packet"] = {{"arm", 1}, {"x0", 22.0}, {"sigma", 6.0}, {"q", 0.0}};
    j["numerics"] = {{"k_max", 8.0 * kPi}};
    j["run"] = {{"t_end", 94.25}, {"density_stride", 10}};
    return j;
}

ordered_json line_graph_base() {
    ordered_json j;
    j["graph"]["arm_lengths"] = {100.0, 10.0 + std::sqrt(2.0)};
    j["potential"] = {{"V0", 16.7875}, {"d", 1.0}};
    j["packet"] = {{"arm", 1}, {"x0", 78.0}, {"sigma", 6.0}, {"q", 0.0}};
    j["numerics"] = {{"k_max", 8.0 * kPi}};
    j["run"] = {{"t_end", 94.25}, {"density_stride", 10}};
    return j;
}

ordered_json sinusoidal(double f, double omega, double phi) {
    return {{"type", "sinusoidal"}, {"f", f}, {"omega", omega}, {"phi", phi}};
}

void merge_into(ordered_json& base, const json& over) {
    if (!over.is_object()) return;
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge_into(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

// ---- validation helpers -------------------------------------------------

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw SchemaError(path + ": " + what);
}

const json& require(const json& j, const std::string& path, const char* key) {
    if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing");
    return j.at(key);
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double positive(const json& j, const std::string& path) {
    const double v = as_number(j, path);
    if (!(v > 0.0)) fail(path, "must be > 0");
    return v;
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

void check_keys(const json& j, const std::string& path, std::set<std::string> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

}  // namespace

ordered_json preset_json(const std::string& name) {
    const double f_bloch = 0.2;
    const double f_sin = kPi / 10.0;
    const double omega = 0.2;
    if (name == "fig1") {
        ordered_json j = line_graph_base();
        j["scenario"] = "fig1";
        j["drives"] = {{{"type", "constant"}, {"f", f_bloch}},
                       {{"type", "constant"}, {"f", -f_bloch}}};
        return j;
    }
    if (name == "fig2") {
        ordered_json j = line_graph_base();
        j["scenario"] = "fig2";
        j["potential"]["modulation"] = {{"a", 0.85}, {"omega", omega}, {"phi", 0.0}};
        j["drives"] = {{{"type", "constant"}, {"f", f_bloch}},
                       {{"type", "constant"}, {"f", -f_bloch}}};
        return j;
    }
    if (name == "fig3") {
        ordered_json j = line_graph_base();
        j["scenario"] = "fig3";
        j["drives"] = {sinusoidal(f_sin, omega, 0.0), sinusoidal(-f_sin, omega, 0.0)};
        return j;
    }
    if (name == "fig4" || name == "fig6" || name == "fig7") {
        ordered_json j = star_graph_base();
        j["scenario"] = name;
        const double phi2 = (name == "fig4") ? 0.0 : kPi / 2.0;
        j["drives"] = {sinusoidal(f_sin, omega, 0.0), sinusoidal(-f_sin, omega, phi2),
                       sinusoidal(-f_sin, omega, 0.0)};
        if (name == "fig7") j["sweep"] = {{"grid_points", 33}, {"t_final", 94.25}};
        return j;
    }
    throw UnknownPresetError("unknown preset '" + name + "'");
}

RunConfig config_from_json(const json& input) {
    json j = input;
    if (j.is_null()) j = json::object();
    if (!j.is_object()) throw SchemaError("top level: expected an object");
    if (j.contains("config")) j = j.at("config");  // run manifest

    ordered_json merged;
    if (j.contains("preset")) {
        if (!j.at("preset").is_string()) fail("preset", "expected a string");
        merged = preset_json(j.at("preset").get<std::string>());
        json over = j;
        over.erase("preset");
        merge_into(merged, over);
    } else {
        merged = j;
    }
    const json& c = merged;

    check_keys(c, "config",
               {"scenario", "graph", "potential", "drives", "packet", "numerics", "run",
                "sweep", "threads"});

    RunConfig cfg;
    cfg.scenario = c.contains("scenario") ? c.at("scenario").get<std::string>() : "custom";

    const json& graph = require(c, "config", "graph");
    check_keys(graph, "graph", {"arm_lengths"});
    const json& lengths = require(graph, "graph", "arm_lengths");
    if (!lengths.is_array() || lengths.empty())
        fail("graph.arm_lengths", "expected a non-empty array");
    for (std::size_t i = 0; i < lengths.size(); ++i)
        cfg.graph.arm_lengths.push_back(
            positive(lengths[i], "graph.arm_lengths[" + std::to_string(i) + "]"));

    const json& pot = require(c, "config", "potential");
    check_keys(pot, "potential", {"V0", "d", "modulation"});
    cfg.potential.V0 = as_number(require(pot, "potential", "V0"), "potential.V0");
    cfg.potential.d = positive(require(pot, "potential", "d"), "potential.d");
    if (pot.contains("modulation") && !pot.at("modulation").is_null()) {
        const json& mod = pot.at("modulation");
        check_keys(mod, "potential.modulation", {"a", "omega", "phi"});
        LatticePotential::Modulation m;
        m.a = as_number(require(mod, "potential.modulation", "a"), "potential.modulation.a");
        if (m.a < 0.0 || m.a > 1.0) fail("potential.modulation.a", "must lie in [0,1]");
        m.omega = positive(require(mod, "potential.modulation", "omega"),
                           "potential.modulation.omega");
        m.phi = mod.contains("phi") ? as_number(mod.at("phi"), "potential.modulation.phi")
                                    : 0.0;
        cfg.potential.modulation = m;
    }

    const json& drives = require(c, "config", "drives");
    if (!drives.is_array() || drives.size() != cfg.graph.arms())
        fail("drives", "expected one field law per arm (" +
                           std::to_string(cfg.graph.arms()) + ")");
    for (std::size_t a = 0; a < drives.size(); ++a) {
        const std::string path = "drives[" + std::to_string(a) + "]";
        const json& d = drives[a];
        check_keys(d, path, {"type", "f", "omega", "phi"});
        const json& type = require(d, path, "type");
        FieldLaw law;
        if (type == "constant") {
            law.kind = FieldLaw::Kind::Constant;
            law.f = as_number(require(d, path, "f"), path + ".f");
        } else if (type == "sinusoidal") {
            law.kind = FieldLaw::Kind::Sinusoidal;
            law.f = as_number(require(d, path, "f"), path + ".f");
            law.omega = positive(require(d, path, "omega"), path + ".omega");
            law.phi =
                d.contains("phi") ? as_number(d.at("phi"), path + ".phi") : 0.0;
        } else {
            fail(path + ".type", "expected 'constant' or 'sinusoidal'");
        }
        cfg.drives.field.push_back(law);
    }
    cfg.drives.validate(cfg.graph.arms());

    const json& packet = require(c, "config", "packet");
    check_keys(packet, "packet", {"arm", "x0", "sigma", "q"});
    const int arm1 = as_int(require(packet, "packet", "arm"), "packet.arm");
    if (arm1 < 1 || static_cast<std::size_t>(arm1) > cfg.graph.arms())
        fail("packet.arm", "must name an arm between 1 and " +
                               std::to_string(cfg.graph.arms()));
    cfg.packet.arm = static_cast<std::size_t>(arm1 - 1);
    cfg.packet.x0 = as_number(require(packet, "packet", "x0"), "packet.x0");
    cfg.packet.sigma = positive(require(packet, "packet", "sigma"), "packet.sigma");
    cfg.packet.q = packet.contains("q") ? as_number(packet.at("q"), "packet.q") : 0.0;

    const json& num = require(c, "config", "numerics");
    check_keys(num, "numerics",
               {"k_max", "rtol", "atol", "dt_sample", "norm_budget", "grid_points_per_arm",
                "kernel", "verify_couplings", "strict_oracle",
                "quad_points_per_wavelength"});
    cfg.numerics.k_max = positive(require(num, "numerics", "k_max"), "numerics.k_max");
    if (num.contains("rtol")) cfg.numerics.rtol = positive(num.at("rtol"), "numerics.rtol");
    if (num.contains("atol")) {
        cfg.numerics.atol = as_number(num.at("atol"), "numerics.atol");
        if (cfg.numerics.atol < 0.0) fail("numerics.atol", "must be >= 0");
    }
    if (num.contains("dt_sample")) {
        cfg.numerics.dt_sample = as_number(num.at("dt_sample"), "numerics.dt_sample");
        if (cfg.numerics.dt_sample < 0.0) fail("numerics.dt_sample", "must be >= 0");
    }
    if (num.contains("norm_budget"))
        cfg.numerics.norm_budget = positive(num.at("norm_budget"), "numerics.norm_budget");
    if (num.contains("grid_points_per_arm")) {
        cfg.numerics.grid_points_per_arm =
            as_int(num.at("grid_points_per_arm"), "numerics.grid_points_per_arm");
        if (cfg.numerics.grid_points_per_arm < 0)
            fail("numerics.grid_points_per_arm", "must be >= 0");
    }
    if (num.contains("kernel")) {
        if (!num.at("kernel").is_string()) fail("numerics.kernel", "expected a string");
        cfg.numerics.kernel = num.at("kernel").get<std::string>();
    }
    if (num.contains("verify_couplings")) {
        if (!num.at("verify_couplings").is_boolean())
            fail("numerics.verify_couplings", "expected a boolean");
        cfg.numerics.verify_couplings = num.at("verify_couplings").get<bool>();
    }
    if (num.contains("strict_oracle")) {
        if (!num.at("strict_oracle").is_boolean())
            fail("numerics.strict_oracle", "expected a boolean");
        cfg.numerics.strict_oracle = num.at("strict_oracle").get<bool>();
    }
    if (num.contains("quad_points_per_wavelength")) {
        cfg.numerics.quad_points_per_wavelength =
            as_int(num.at("quad_points_per_wavelength"), "numerics.quad_points_per_wavelength");
        if (cfg.numerics.quad_points_per_wavelength < 8)
            fail("numerics.quad_points_per_wavelength", "must be >= 8");
    }

    const json& run = require(c, "config", "run");
    check_keys(run, "run", {"t_end", "density_stride"});
    cfg.run.t_end = positive(require(run, "run", "t_end"), "run.t_end");
    if (run.contains("density_stride")) {
        cfg.run.density_stride = as_int(run.at("density_stride"), "run.density_stride");
        if (cfg.run.density_stride < 0) fail("run.density_stride", "must be >= 0");
    }

    if (c.contains("sweep") && !c.at("sweep").is_null()) {
        const json& sw = c.at("sweep");
        check_keys(sw, "sweep", {"grid_points", "t_final"});
        RunConfig::Sweep sweep;
        if (sw.contains("grid_points")) {
            sweep.grid_points = as_int(sw.at("grid_points"), "sweep.grid_points");
            if (sweep.grid_points < 2) fail("sweep.grid_points", "must be >= 2");
        }
        if (sw.contains("t_final"))
            sweep.t_final = positive(sw.at("t_final"), "sweep.t_final");
        cfg.sweep = sweep;
    }

    if (c.contains("threads")) {
        const int t = as_int(c.at("threads"), "threads");
        if (t < 0) fail("threads", "must be >= 0");
        cfg.threads = static_cast<unsigned>(t);
    }

    // resolved sampling interval: T_B/200 from the strongest field
    if (cfg.numerics.dt_sample == 0.0) {
        const double f_ref = cfg.drives.f_ref();
        if (f_ref > 0.0) {
            const double t_b = 2.0 * kPi / (cfg.potential.d * f_ref);
            cfg.numerics.dt_sample = t_b / 200.0;
        } else {
            cfg.numerics.dt_sample = cfg.run.t_end / 200.0;
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config", "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json j;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        j = json::object();
    } else {
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw SchemaError(std::string("JSON parse failure: ") + e.what());
        }
    }
    return config_from_json(j);
}

ordered_json config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["scenario"] = cfg.scenario;
    j["graph"]["arm_lengths"] = cfg.graph.arm_lengths;
    j["potential"]["V0"] = cfg.potential.V0;
    j["potential"]["d"] = cfg.potential.d;
    if (cfg.potential.modulation) {
        j["potential"]["modulation"] = {{"a", cfg.potential.modulation->a},
                                        {"omega", cfg.potential.modulation->omega},
                                        {"phi", cfg.potential.modulation->phi}};
    }
    j["drives"] = ordered_json::array();
    for (const auto& law : cfg.drives.field) {
        if (law.kind == FieldLaw::Kind::Constant)
            j["drives"].push_back({{"type", "constant"}, {"f", law.f}});
        else
            j["drives"].push_back(sinusoidal(law.f, law.omega, law.phi));
    }
    j["packet"] = {{"arm", static_cast<int>(cfg.packet.arm) + 1},
                   {"x0", cfg.packet.x0},
                   {"sigma", cfg.packet.sigma},
                   {"q", cfg.packet.q}};
    j["numerics"] = {{"k_max", cfg.numerics.k_max},
                     {"rtol", cfg.numerics.rtol},
                     {"atol", cfg.numerics.atol},
                     {"dt_sample", cfg.numerics.dt_sample},
                     {"norm_budget", cfg.numerics.norm_budget},
                     {"grid_points_per_arm", cfg.numerics.grid_points_per_arm},
                     {"kernel", cfg.numerics.kernel},
                     {"verify_couplings", cfg.numerics.verify_couplings},
                     {"strict_oracle", cfg.numerics.strict_oracle},
                     {"quad_points_per_wavelength", cfg.numerics.quad_points_per_wavelength}};
    j["run"] = {{"t_end", cfg.run.t_end}, {"density_stride", cfg.run.density_stride}};
    if (cfg.sweep)
        j["sweep"] = {{"grid_points", cfg.sweep->grid_points},
                      {"t_final", cfg.sweep->t_final}};
    j["threads"] = cfg.threads;
    return j;
}

}  // namespace stargraph
