#include "stargraph/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>

#include "stargraph/errors.hpp"
#include "stargraph/io.hpp"
#include "stargraph/kernels.hpp"

namespace stargraph {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct Pipeline {
    RunConfig cfg;
    const kernels::Table* table = nullptr;
    std::unique_ptr<ThreadPool> pool;
    SpectralBasis basis;
    BasisBuildReport basis_report;
    CouplingSet couplings;
    std::optional<VerificationSummary> verification;
    std::uint64_t verification_digest = 0;
    bool verification_csv = false;
    Clock::time_point started = Clock::now();

    unsigned threads() const { return pool->size(); }
};

Pipeline prepare(const RunConfig& cfg_in, bool with_couplings) {
    Pipeline p;
    p.cfg = cfg_in;
    p.table = &kernels::resolve(p.cfg.numerics.kernel);
    // pin the resolved table so manifest reruns reproduce rounding exactly
    p.cfg.numerics.kernel = p.table->name;
    kernels::select(p.table->name);
    const unsigned threads =
        p.cfg.threads ? p.cfg.threads : ThreadPool::hardware_threads();
    p.cfg.threads = threads;
    p.pool = std::make_unique<ThreadPool>(threads);
    p.basis = build_basis(p.cfg.graph, p.cfg.numerics.k_max, {}, p.pool.get(),
                          &p.basis_report);
    if (with_couplings)
        p.couplings = assemble_couplings(p.basis, p.cfg.potential, p.pool.get());
    return p;
}

std::uint64_t write_spectrum_csv(const Pipeline& p, const fs::path& out_dir,
                                 std::size_t* bytes) {
    CsvFile csv("n,k,B,secular_residual");
    for (std::size_t n = 0; n < p.basis.size(); ++n) {
        csv.begin_row();
        csv.add(static_cast<std::uint64_t>(n));
        csv.add(p.basis.k[n]);
        csv.add(p.basis.B[n]);
        csv.add(p.basis.secular_residual[n]);
        csv.end_row();
    }
    if (bytes) *bytes = csv.bytes();
    return csv.write(out_dir / "spectrum.csv");
}

ordered_json manifest_base(const Pipeline& p, const char* command) {
    ordered_json m;
    m["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    m["command"] = command;
    m["config"] = config_to_json(p.cfg);
    m["kernel"] = p.table->name;
    m["threads"] = p.cfg.threads;
    m["spectrum"] = {
        {"modes", p.basis_report.root_count},
        {"weyl_estimate", p.basis_report.weyl_estimate},
        {"worst_secular_residual", p.basis_report.worst_residual},
        {"min_sin_guard", p.basis_report.min_sin_guard},
        {"min_pole_gap", p.basis_report.min_pole_gap},
        {"normalization_corrections", p.basis_report.normalization_corrections},
        {"worst_normalization_delta", p.basis_report.worst_normalization_delta},
    };
    if (p.verification) {
        m["couplings"] = {
            {"verified", true},
            {"entries", p.verification->entries},
            {"failures", p.verification->failures},
            {"max_rel_err", p.verification->max_rel_err},
            {"max_abs_err_near_zero", p.verification->max_abs_err},
            {"sum_g_defect", p.verification->sum_g_defect},
        };
        if (p.verification_csv) {
            char digest[20];
            std::snprintf(digest, sizeof(digest), "%016llx",
                          static_cast<unsigned long long>(p.verification_digest));
            m["couplings"]["digest"] = digest;
        } else {
            m["couplings"]["digest"] = nullptr;
        }
    } else {
        m["couplings"] = {{"verified", false}, {"digest", nullptr}};
    }
    return m;
}

void add_file_entry(ordered_json& m, const std::string& name, std::uint64_t digest,
                    std::size_t bytes) {
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(digest));
    m["files"][name] = {{"fnv1a64", hex}, {"bytes", bytes}};
}

void finish_manifest(ordered_json& m, const Pipeline& p, const fs::path& out_dir) {
    const double wall =
        std::chrono::duration<double>(Clock::now() - p.started).count();
    m["wall_clock_s"] = wall;
    atomic_write(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::uint64_t run_verification(Pipeline& p, const fs::path& out_dir, bool write_csv,
                               std::size_t* bytes) {
    std::vector<VerificationRow> rows;
    p.verification = verify_couplings(p.basis, p.cfg.potential, p.couplings,
                                      p.cfg.numerics.strict_oracle,
                                      write_csv ? &rows : nullptr, p.pool.get());
    if (!write_csv) return 0;
    CsvFile csv("matrix,arm,n,m,analytic,quadrature,rel_err");
    const char* names[] = {"IV", "X", "G"};
    for (const auto& r : rows) {
        csv.begin_row();
        csv.add(std::string(names[r.matrix == 'V' ? 0 : (r.matrix == 'X' ? 1 : 2)]));
        csv.add(static_cast<std::uint64_t>(r.arm));
        csv.add(static_cast<std::uint64_t>(r.n));
        csv.add(static_cast<std::uint64_t>(r.m));
        csv.add(r.analytic);
        csv.add(r.quadrature);
        csv.add(r.rel_err);
        csv.end_row();
    }
    if (bytes) *bytes = csv.bytes();
    p.verification_digest = csv.write(out_dir / "coupling_verification.csv");
    p.verification_csv = true;
    return p.verification_digest;
}

// signed line profile for 2-arm graphs: arm 1 mirrored onto negative x
void line_profile(const std::vector<std::vector<double>>& grids,
                  const std::vector<std::vector<double>>& frame, std::vector<double>* x,
                  std::vector<double>* rho) {
    const auto& x1 = grids[0];
    const auto& x2 = grids[1];
    const auto& r1 = frame[0];
    const auto& r2 = frame[1];
    x->clear();
    rho->clear();
    for (std::size_t i = r1.size(); i-- > 1;) {
        x->push_back(-x1[i]);
        rho->push_back(r1[i]);
    }
    for (std::size_t i = 0; i < r2.size(); ++i) {
        x->push_back(x2[i]);
        rho->push_back(r2[i]);
    }
}

}  // namespace

void cmd_spectrum(const RunConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Pipeline p = prepare(cfg, false);
    std::size_t bytes = 0;
    const std::uint64_t digest = write_spectrum_csv(p, out_dir, &bytes);
    ordered_json m = manifest_base(p, "spectrum");
    add_file_entry(m, "spectrum.csv", digest, bytes);
    finish_manifest(m, p, out_dir);
}

void cmd_verify(const RunConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Pipeline p = prepare(cfg, true);
    std::size_t bytes = 0;
    run_verification(p, out_dir, true, &bytes);
    ordered_json m = manifest_base(p, "verify");
    add_file_entry(m, "coupling_verification.csv", p.verification_digest, bytes);
    {
        const std::string checks = formula_cross_checks(p.basis, p.cfg.potential);
        atomic_write(out_dir / "formula_cross_checks.json", checks);
        add_file_entry(m, "formula_cross_checks.json", fnv1a64(checks), checks.size());
    }
    finish_manifest(m, p, out_dir);
}

void cmd_evolve(const RunConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Pipeline p = prepare(cfg, true);
    ordered_json m;
    {
        std::size_t vbytes = 0;
        if (p.cfg.numerics.verify_couplings) run_verification(p, out_dir, true, &vbytes);
        m = manifest_base(p, "evolve");
        if (p.verification_csv)
            add_file_entry(m, "coupling_verification.csv", p.verification_digest, vbytes);
    }

    InitReport init_report;
    WaveState state = init_gaussian(p.basis, p.cfg.packet.arm, p.cfg.packet.x0,
                                    p.cfg.packet.sigma, p.cfg.packet.q, &init_report);
    m["packet"] = {{"mass_on_arm", init_report.mass_on_arm},
                   {"truncation_loss", init_report.truncation_loss}};

    EvolveOptions opt;
    opt.rtol = p.cfg.numerics.rtol;
    opt.atol = p.cfg.numerics.atol;
    opt.norm_budget = p.cfg.numerics.norm_budget;
    opt.dt_sample = p.cfg.numerics.dt_sample;
    opt.density_stride = p.cfg.run.density_stride;
    opt.points_per_arm = p.cfg.numerics.grid_points_per_arm;
    opt.table = p.table;
    opt.pool = p.pool.get();
    TrajectoryRecord rec = evolve(state, p.cfg.run.t_end, p.cfg.drives, p.cfg.potential,
                                  p.couplings, p.basis, opt);

    m["evolution"] = {{"steps_accepted", rec.stats.steps_accepted},
                      {"steps_rejected", rec.stats.steps_rejected},
                      {"rhs_evaluations", rec.stats.rhs_evaluations},
                      {"final_norm_defect", rec.stats.final_norm_defect}};

    {
        std::size_t bytes = 0;
        const std::uint64_t digest = write_spectrum_csv(p, out_dir, &bytes);
        add_file_entry(m, "spectrum.csv", digest, bytes);
    }

    const std::size_t arms = p.cfg.graph.arms();
    {
        std::string header = "t";
        for (std::size_t a = 1; a <= arms; ++a) header += ",P_" + std::to_string(a);
        header += ",total";
        CsvFile csv(header);
        for (std::size_t s = 0; s < rec.t.size(); ++s) {
            csv.begin_row();
            csv.add(rec.t[s]);
            for (std::size_t a = 0; a < arms; ++a) csv.add(rec.partial_norms[s][a]);
            csv.add(rec.total_norm[s]);
            csv.end_row();
        }
        add_file_entry(m, "norms.csv", csv.write(out_dir / "norms.csv"), csv.bytes());
    }

    for (std::size_t a = 0; a < arms; ++a) {
        CsvFile csv("t,x,density");
        for (std::size_t f = 0; f < rec.density.size(); ++f) {
            const double t = rec.t[rec.frame_sample[f]];
            const auto& rho = rec.density[f][a];
            for (std::size_t pnt = 0; pnt < rho.size(); ++pnt) {
                csv.begin_row();
                csv.add(t);
                csv.add(rec.grid_x[a][pnt]);
                csv.add(rho[pnt]);
                csv.end_row();
            }
        }
        const std::string name = "density_arm" + std::to_string(a + 1) + ".csv";
        add_file_entry(m, name, csv.write(out_dir / name), csv.bytes());
    }

    if (arms == 2 && !rec.density.empty()) {
        // packet-arm drive parameters feed the width prediction
        const FieldLaw& law = p.cfg.drives.field[p.cfg.packet.arm];
        const bool sinus = law.kind == FieldLaw::Kind::Sinusoidal;
        CsvFile csv("t,center,sigma_fit,sigma_predicted,residual");
        std::size_t fitted = 0, skipped = 0;
        std::vector<double> lx, lrho;
        for (std::size_t f = 0; f < rec.density.size(); ++f) {
            const double t = rec.t[rec.frame_sample[f]];
            line_profile(rec.grid_x, rec.density[f], &lx, &lrho);
            try {
                const WidthFit fit = fit_gaussian_width(lx, lrho, p.cfg.potential.d);
                const double pred =
                    sinus ? predicted_width(t, std::abs(law.f), law.omega, law.phi,
                                            p.cfg.packet.sigma)
                          : std::numeric_limits<double>::quiet_NaN();
                csv.begin_row();
                csv.add(t);
                csv.add(fit.center);
                csv.add(fit.sigma);
                csv.add(pred);
                csv.add(fit.residual);
                csv.end_row();
                ++fitted;
            } catch (const NumericError&) {
                ++skipped;
            }
        }
        add_file_entry(m, "width.csv", csv.write(out_dir / "width.csv"), csv.bytes());
        m["analysis"]["width_rows"] = fitted;
        m["analysis"]["width_skipped"] = skipped;
    }

    if (arms >= 3) {
        // conditional per-arm centers <x>_j; empty where P_j ~ 0
        std::string header = "t";
        for (std::size_t a = 1; a <= arms; ++a) header += ",x_" + std::to_string(a);
        CsvFile csv(header);
        for (std::size_t s = 0; s < rec.t.size(); ++s) {
            csv.begin_row();
            csv.add(rec.t[s]);
            for (std::size_t a = 0; a < arms; ++a) {
                const double v = rec.center_per_arm[s][a];
                csv.add(std::isnan(v) ? std::string() : format_double(v));
            }
            csv.end_row();
        }
        add_file_entry(m, "centers.csv", csv.write(out_dir / "centers.csv"), csv.bytes());
    }

    {
        // saturation: trailing-10% variation of each partial norm under 0.02
        const std::size_t tail = std::max<std::size_t>(2, rec.t.size() / 10);
        ordered_json sat = ordered_json::array();
        for (std::size_t a = 0; a < arms; ++a) {
            double lo = 1.0, hi = 0.0;
            for (std::size_t s = rec.t.size() - tail; s < rec.t.size(); ++s) {
                lo = std::min(lo, rec.partial_norms[s][a]);
                hi = std::max(hi, rec.partial_norms[s][a]);
            }
            sat.push_back({{"arm", a + 1},
                           {"trailing_variation", hi - lo},
                           {"saturated", hi - lo < 0.02}});
        }
        m["analysis"]["saturation"] = sat;
    }

    if (arms == 2 && rec.center_signed.size() >= 16) {
        try {
            const BlochObservables bo = bloch_observables(
                rec.center_signed, p.cfg.numerics.dt_sample, p.cfg.drives.f_ref());
            CsvFile csv("T_B_measured,Lambda,Delta");
            csv.begin_row();
            csv.add(bo.T_B);
            csv.add(bo.Lambda);
            csv.add(bo.Delta);
            csv.end_row();
            add_file_entry(m, "bloch.csv", csv.write(out_dir / "bloch.csv"), csv.bytes());
            m["analysis"]["bloch"] = {
                {"T_B_measured", bo.T_B}, {"Lambda", bo.Lambda}, {"Delta", bo.Delta}};
        } catch (const NoOscillationError& e) {
            m["analysis"]["bloch"] = nullptr;
            m["analysis"]["bloch_note"] = e.what();
        }
    }

    finish_manifest(m, p, out_dir);
}

SweepResult cmd_sweep(const RunConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Pipeline p = prepare(cfg, true);
    const RunConfig::Sweep sweep =
        p.cfg.sweep ? *p.cfg.sweep : RunConfig::Sweep{33, p.cfg.run.t_end};
    if (p.cfg.graph.arms() < 2)
        throw ConfigError("runner", "phase sweep needs at least two arms");

    InitReport init_report;
    const WaveState initial =
        init_gaussian(p.basis, p.cfg.packet.arm, p.cfg.packet.x0, p.cfg.packet.sigma,
                      p.cfg.packet.q, &init_report);

    SweepResult result;
    result.t_final = sweep.t_final;
    const int npts = sweep.grid_points;
    result.phi2.resize(npts);
    result.partial.assign(npts, {});
    std::vector<std::string> errors(npts);
    const std::size_t arms = p.cfg.graph.arms();

    auto point_work = [&](std::size_t g) {
        const double phi2 = 2.0 * M_PI * static_cast<double>(g) / npts;
        result.phi2[g] = phi2;
        RunConfig local = p.cfg;
        local.drives.field[1].phi = phi2;
        WaveState st = initial;
        EvolveOptions opt;
        opt.rtol = local.numerics.rtol;
        opt.atol = local.numerics.atol;
        opt.norm_budget = local.numerics.norm_budget;
        opt.dt_sample = 0.0;  // endpoint only
        opt.density_stride = 0;
        opt.table = p.table;
        opt.pool = nullptr;  // grid points run in parallel instead
        try {
            evolve(st, sweep.t_final, local.drives, local.potential, p.couplings, p.basis,
                   opt);
            result.partial[g] = partial_norms(st, p.couplings, p.table);
        } catch (const Error& e) {
            errors[g] = e.what();
            result.partial[g].assign(arms, std::numeric_limits<double>::quiet_NaN());
        }
    };
    p.pool->run_blocks(static_cast<std::size_t>(npts), point_work);

    // argmax of the transmission separation P_last - max(others)
    double best = -2.0;
    std::size_t best_g = 0;
    for (int g = 0; g < npts; ++g) {
        const auto& P = result.partial[g];
        if (P.empty() || std::isnan(P[0])) continue;
        double others = 0.0;
        for (std::size_t a = 0; a + 1 < arms; ++a) others = std::max(others, P[a]);
        const double sep = P[arms - 1] - others;
        if (sep > best) {
            best = sep;
            best_g = static_cast<std::size_t>(g);
        }
    }
    result.argmax_separation = best_g;

    ordered_json m = manifest_base(p, "sweep");
    m["packet"] = {{"mass_on_arm", init_report.mass_on_arm},
                   {"truncation_loss", init_report.truncation_loss}};
    {
        std::string header = "phi2";
        for (std::size_t a = 1; a <= arms; ++a) header += ",P_" + std::to_string(a);
        CsvFile csv(header);
        for (int g = 0; g < npts; ++g) {
            csv.begin_row();
            csv.add(result.phi2[g]);
            for (std::size_t a = 0; a < arms; ++a) csv.add(result.partial[g][a]);
            csv.end_row();
        }
        add_file_entry(m, "sweep.csv", csv.write(out_dir / "sweep.csv"), csv.bytes());
    }
    m["sweep"] = {{"grid_points", npts},
                  {"t_final", sweep.t_final},
                  {"argmax_separation_index", result.argmax_separation},
                  {"argmax_separation_phi2", result.phi2[result.argmax_separation]}};
    ordered_json errs = ordered_json::array();
    for (int g = 0; g < npts; ++g)
        if (!errors[g].empty())
            errs.push_back({{"index", g}, {"phi2", result.phi2[g]}, {"error", errors[g]}});
    m["sweep"]["point_errors"] = errs;
    finish_manifest(m, p, out_dir);
    return result;
}

}  // namespace stargraph
