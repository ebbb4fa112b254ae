#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "stargraph/couplings.hpp"
#include "stargraph/propagator.hpp"
#include "stargraph/spectrum.hpp"

namespace stargraph {

struct RunConfig {
    std::string scenario;  // preset tag or "custom"
    StarGraph graph;
    LatticePotential potential;
    DriveSpec drives;

    struct Packet {
        std::size_t arm = 0;  // 0-based internally (JSON uses 1-based)
        double x0 = 0.0;
        double sigma = 1.0;
        double q = 0.0;
    } packet;

    struct Numerics {
        double k_max = 0.0;
        double rtol = 1e-9;
        double atol = 1e-12;
        double dt_sample = 0.0;  // resolved at load: T_B/200 when 0
        double norm_budget = 1e-6;
        int grid_points_per_arm = 0;  // 0 = 8 per shortest wavelength
        std::string kernel = "auto";
        bool verify_couplings = false;
        bool strict_oracle = false;
        int quad_points_per_wavelength = 8;
    } numerics;

    struct Run {
        double t_end = 0.0;
        int density_stride = 10;
    } run;

    struct Sweep {
        int grid_points = 33;
        double t_final = 94.25;
    };
    std::optional<Sweep> sweep;

    unsigned threads = 0;  // 0 = hardware concurrency
};

// Known presets: fig1, fig2, fig3, fig4, fig6, fig7.
nlohmann::ordered_json preset_json(const std::string& name);

// Parse + validate + preset expansion. Accepts either a config object or a
// run manifest (object with a "config" member). Unknown keys are schema
// errors.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Fully explicit form (resolved sampling interval, 1-based packet arm).
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

}  // namespace stargraph
