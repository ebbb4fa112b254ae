#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "stargraph/errors.hpp"
#include "stargraph/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir = "out";
    std::string kernel;
    int threads = -1;
    bool strict_oracle = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run config (or a run manifest)");
    cmd->add_option("--preset", args.preset,
                    "scenario preset: fig1|fig2|fig3|fig4|fig6|fig7");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
    cmd->add_option("--kernel", args.kernel, "kernel table: auto|scalar|avx2");
    cmd->add_flag("--strict-oracle", args.strict_oracle,
                  "fail on any analytic/quadrature mismatch instead of patching");
}

stargraph::RunConfig build_config(const CommonArgs& args) {
    nlohmann::json j = nlohmann::json::object();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in)
            throw stargraph::IoError("config", "cannot open config file " + args.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
            try {
                j = nlohmann::json::parse(text);
            } catch (const nlohmann::json::exception& e) {
                throw stargraph::SchemaError(std::string("JSON parse failure: ") + e.what());
            }
        }
    }
    if (!args.preset.empty()) {
        if (j.contains("config")) j = j.at("config");
        j["preset"] = args.preset;
    }
    stargraph::RunConfig cfg = stargraph::config_from_json(j);
    if (args.threads >= 0) cfg.threads = static_cast<unsigned>(args.threads);
    if (!args.kernel.empty()) cfg.numerics.kernel = args.kernel;
    if (args.strict_oracle) cfg.numerics.strict_oracle = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driven wave-packet dynamics on metric star graphs"};
    app.require_subcommand(1);

    CommonArgs spectrum_args, verify_args, evolve_args, sweep_args;
    CLI::App* spectrum =
        app.add_subcommand("spectrum", "solve the graph eigenbasis, write spectrum.csv");
    add_common(spectrum, spectrum_args);
    CLI::App* verify = app.add_subcommand(
        "verify", "check coupling matrices against quadrature, write coupling_verification.csv");
    add_common(verify, verify_args);
    CLI::App* evolve = app.add_subcommand(
        "evolve", "run the full pipeline, write norms/density/width/bloch CSVs");
    add_common(evolve, evolve_args);
    CLI::App* sweep =
        app.add_subcommand("sweep", "phase sweep over the second arm, write sweep.csv");
    add_common(sweep, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return static_cast<int>(stargraph::ExitCode::Config);
    }

    try {
        if (spectrum->parsed()) {
            stargraph::cmd_spectrum(build_config(spectrum_args), spectrum_args.out_dir);
        } else if (verify->parsed()) {
            stargraph::RunConfig cfg = build_config(verify_args);
            stargraph::cmd_verify(cfg, verify_args.out_dir);
        } else if (evolve->parsed()) {
            stargraph::cmd_evolve(build_config(evolve_args), evolve_args.out_dir);
        } else if (sweep->parsed()) {
            stargraph::cmd_sweep(build_config(sweep_args), sweep_args.out_dir);
        }
    } catch (const stargraph::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
