#include "stargraph/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "stargraph/errors.hpp"
#include "stargraph/quadrature.hpp"

namespace stargraph {
namespace {

// Dormand-Prince 5(4)
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5;
constexpr double kA3[] = {3.0 / 40, 9.0 / 40};
constexpr double kA4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double kA5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr double kA6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                          -5103.0 / 18656};
constexpr double kB5[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                          11.0 / 84};
constexpr double kE[] = {71.0 / 57600,      0.0,        -71.0 / 16695, 71.0 / 1920,
                         -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

constexpr std::size_t kRowBlock = 128;

// Fixed-block fused matvec: the block decomposition (not the thread count)
// fixes the summation grouping, so results are bit-identical for any
// --threads value.
class SymCombiner {
  public:
    SymCombiner(const CouplingSet& cs, const kernels::Table& kt, ThreadPool* pool)
        : n_(cs.modes()), kt_(kt), pool_(pool) {
        mats_.push_back(cs.IV_unit.data());
        for (const auto& x : cs.X) mats_.push_back(x.data());
        coeffs_.resize(mats_.size(), 0.0);
        nblocks_ = (n_ + kRowBlock - 1) / kRowBlock;
        scatter_.resize(nblocks_ * 2 * n_);
    }

    std::size_t nmat() const { return mats_.size(); }
    double* coeffs() { return coeffs_.data(); }

    void apply(const double* x_re, const double* x_im, double* y_re, double* y_im) {
        std::memset(scatter_.data(), 0, scatter_.size() * sizeof(double));
        auto work = [&](std::size_t b) {
            const std::size_t r0 = b * kRowBlock;
            const std::size_t r1 = std::min(n_, r0 + kRowBlock);
            kt_.fused_sym_matvec(n_, mats_.size(), mats_.data(), coeffs_.data(), x_re,
                                 x_im, y_re, y_im, scatter_.data() + b * 2 * n_,
                                 scatter_.data() + b * 2 * n_ + n_, r0, r1);
        };
        if (pool_)
            pool_->run_blocks(nblocks_, work);
        else
            for (std::size_t b = 0; b < nblocks_; ++b) work(b);
        for (std::size_t b = 0; b < nblocks_; ++b) {
            const double* sre = scatter_.data() + b * 2 * n_;
            const double* sim = sre + n_;
            kt_.axpy(n_, 1.0, sre, y_re);
            kt_.axpy(n_, 1.0, sim, y_im);
        }
    }

  private:
    std::size_t n_;
    const kernels::Table& kt_;
    ThreadPool* pool_;
    std::vector<const double*> mats_;
    std::vector<double> coeffs_;
    std::size_t nblocks_;
    std::vector<double> scatter_;
};

std::size_t auto_points(const SpectralBasis& basis, std::size_t arm) {
    const double kmax = basis.k_d.empty() ? 1.0 : basis.k_d.back();
    const double L = basis.graph.arm_lengths[arm];
    return static_cast<std::size_t>(
        std::max(16.0, std::ceil(8.0 * kmax * L / (2.0 * M_PI))));
}

}  // namespace

void DriveSpec::validate(std::size_t arms) const {
    if (field.size() != arms)
        throw ConfigError("propagator", "drive list must have exactly one law per arm (" +
                                            std::to_string(arms) + " arms)");
    double omega = 0.0;
    for (const auto& f : field) {
        if (f.kind == FieldLaw::Kind::Sinusoidal) {
            if (!(f.omega > 0.0))
                throw ConfigError("propagator", "sinusoidal drives need omega > 0");
            if (omega == 0.0)
                omega = f.omega;
            else if (omega != f.omega)
                throw ConfigError("propagator",
                                  "sinusoidal drives must share a single omega");
        }
    }
}

double DriveSpec::f_ref() const {
    double m = 0.0;
    for (const auto& f : field) m = std::max(m, std::abs(f.f));
    return m;
}

double WaveState::norm_sq() const {
    double s = 0.0;
    for (const auto& z : c) s += std::norm(z);
    return s;
}

WaveState init_gaussian(const SpectralBasis& basis, std::size_t arm, double x0,
                        double sigma, double q, InitReport* report, double loss_tol) {
    if (arm >= basis.graph.arms())
        throw ConfigError("propagator", "packet arm index out of range");
    if (!(sigma > 0.0)) throw ConfigError("propagator", "sigma must be positive");
    const double L = basis.graph.arm_lengths[arm];
    if (x0 - 3.0 * sigma < 0.0 || x0 + 3.0 * sigma > L)
        throw SupportViolationError("packet support x0 +/- 3 sigma = [" +
                                    std::to_string(x0 - 3 * sigma) + ", " +
                                    std::to_string(x0 + 3 * sigma) +
                                    "] exceeds arm of length " + std::to_string(L));

    // composite Gauss-Legendre over the arm; resolve both the basis
    // oscillation and the packet
    const double kmax = basis.k_d.back();
    const std::size_t panels = static_cast<std::size_t>(std::max(
        8.0, std::ceil(8.0 * std::max(kmax, 2.0 / sigma) * L / (2.0 * M_PI) / 16.0)));
    const std::size_t nodes = panels * 16;
    std::vector<double> x(nodes), w(nodes);
    const double h = L / static_cast<double>(panels);
    std::size_t idx = 0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * h;
        for (std::size_t j = 0; j < 8; ++j) {
            const double dx = 0.5 * h * GaussLegendre16::nodes[j];
            x[idx] = mid - dx;
            w[idx++] = 0.5 * h * GaussLegendre16::weights[j];
            x[idx] = mid + dx;
            w[idx++] = 0.5 * h * GaussLegendre16::weights[j];
        }
    }

    const double norm_factor = std::pow(2.0 * M_PI * sigma * sigma, -0.25);
    std::vector<double> g_re(nodes), g_im(nodes);
    double mass = 0.0;
    for (std::size_t p = 0; p < nodes; ++p) {
        const double dxp = x[p] - x0;
        const double env = norm_factor * std::exp(-dxp * dxp / (4.0 * sigma * sigma));
        g_re[p] = env * std::cos(q * x[p]);
        g_im[p] = env * std::sin(q * x[p]);
        mass += w[p] * env * env;
    }

    const std::size_t n = basis.size();
    WaveState state;
    state.t = 0.0;
    state.c.resize(n);
    double captured = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        double cre = 0.0, cim = 0.0;
        for (std::size_t p = 0; p < nodes; ++p) {
            const double psi = basis.eigenfunction(m, arm, x[p]) * w[p];
            cre += psi * g_re[p];
            cim += psi * g_im[p];
        }
        state.c[m] = {cre, cim};
        captured += cre * cre + cim * cim;
    }

    const double loss = mass - captured;
    if (report) {
        report->mass_on_arm = mass;
        report->truncation_loss = loss;
    }
    if (loss > loss_tol)
        throw TruncationTooSmallError(
            "projection loss " + std::to_string(loss) + " exceeds " +
            std::to_string(loss_tol) + "; increase k_max");

    const double inv = 1.0 / std::sqrt(captured);
    for (auto& z : state.c) z *= inv;
    return state;
}

std::vector<double> partial_norms(const WaveState& state, const CouplingSet& couplings,
                                  const kernels::Table* table) {
    const auto& kt = table ? *table : kernels::active();
    const std::size_t n = couplings.modes();
    std::vector<double> re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
        re[i] = state.c[i].real();
        im[i] = state.c[i].imag();
    }
    std::vector<double> out(couplings.arms());
    for (std::size_t a = 0; a < couplings.arms(); ++a)
        out[a] = kt.sym_quadform(n, couplings.G[a].data(), re.data(), im.data());
    return out;
}

std::vector<std::vector<double>> density_on_grid(const WaveState& state,
                                                 const SpectralBasis& basis,
                                                 int points_per_arm,
                                                 std::vector<std::vector<double>>* grid_x,
                                                 const kernels::Table* table) {
    const auto& kt = table ? *table : kernels::active();
    const std::size_t n = basis.size();
    std::vector<double> re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
        re[i] = state.c[i].real();
        im[i] = state.c[i].imag();
    }
    std::vector<std::vector<double>> out(basis.graph.arms());
    if (grid_x) grid_x->assign(basis.graph.arms(), {});
    for (std::size_t a = 0; a < basis.graph.arms(); ++a) {
        const double L = basis.graph.arm_lengths[a];
        const std::size_t pts =
            points_per_arm > 0 ? static_cast<std::size_t>(points_per_arm)
                               : auto_points(basis, a);
        std::vector<double> psi(pts * n);
        std::vector<double> xg(pts);
        for (std::size_t p = 0; p < pts; ++p)
            xg[p] = L * static_cast<double>(p) / static_cast<double>(pts - 1);
        for (std::size_t p = 0; p < pts; ++p)
            for (std::size_t m = 0; m < n; ++m)
                psi[p * n + m] = basis.eigenfunction(m, a, xg[p]);
        std::vector<double> ure(pts), uim(pts);
        kt.dense_matvec(pts, n, psi.data(), re.data(), ure.data());
        kt.dense_matvec(pts, n, psi.data(), im.data(), uim.data());
        auto& rho = out[a];
        rho.resize(pts);
        for (std::size_t p = 0; p < pts; ++p)
            rho[p] = ure[p] * ure[p] + uim[p] * uim[p];
        if (grid_x) (*grid_x)[a] = std::move(xg);
    }
    return out;
}

TrajectoryRecord evolve(WaveState& state, double t_end, const DriveSpec& drives,
                        const LatticePotential& potential, const CouplingSet& couplings,
                        const SpectralBasis& basis, const EvolveOptions& opt) {
    const std::size_t n = basis.size();
    const std::size_t arms = basis.graph.arms();
    drives.validate(arms);
    potential.validate();
    if (!(t_end > state.t))
        throw ConfigError("propagator", "t_end must exceed the current state time");
    if (state.c.size() != n)
        throw ConfigError("propagator", "state size does not match basis");

    const auto& kt = opt.table ? *opt.table : kernels::active();
    SymCombiner mv(couplings, kt, opt.pool);

    std::vector<double> k2(n);
    for (std::size_t i = 0; i < n; ++i) k2[i] = basis.k_d[i] * basis.k_d[i];

    // state split; Y is the interaction-picture vector anchored at t
    std::vector<double> yre(n), yim(n);
    for (std::size_t i = 0; i < n; ++i) {
        yre[i] = state.c[i].real();
        yim[i] = state.c[i].imag();
    }

    std::vector<double> kre[7], kim[7];
    for (int s = 0; s < 7; ++s) {
        kre[s].resize(n);
        kim[s].resize(n);
    }
    std::vector<double> acc_re(n), acc_im(n), wre(n), wim(n), zre(n), zim(n);
    std::vector<double> ynew_re(n), ynew_im(n), pc(n), ps(n), ch(n), sh(n);

    TrajectoryRecord rec;
    rec.stats = {};

    // density grids are built lazily and reused across frames
    std::vector<std::vector<double>> psi_grids(arms);
    std::vector<std::size_t> grid_pts(arms, 0);
    rec.grid_x.resize(arms);

    auto rhs = [&](double t0, double tau, const double* in_re, const double* in_im,
                   double* out_re, double* out_im) {
        mv.coeffs()[0] = potential.effective_v0(t0 + tau);
        for (std::size_t a = 0; a < arms; ++a)
            mv.coeffs()[1 + a] = drives.field[a](t0 + tau);
        if (tau == 0.0) {
            mv.apply(in_re, in_im, zre.data(), zim.data());
            for (std::size_t i = 0; i < n; ++i) {
                out_re[i] = zim[i];
                out_im[i] = -zre[i];
            }
        } else {
            kt.phase_table(n, k2.data(), tau, pc.data(), ps.data());
            kt.rotate_fwd(n, pc.data(), ps.data(), in_re, in_im, wre.data(), wim.data());
            mv.apply(wre.data(), wim.data(), zre.data(), zim.data());
            kt.rotate_back_neg_i(n, pc.data(), ps.data(), zre.data(), zim.data(), out_re,
                                 out_im);
        }
        ++rec.stats.rhs_evaluations;
    };

    auto norm_sq_of = [&](const double* re, const double* im) {
        return kt.dot(n, re, re) + kt.dot(n, im, im);
    };

    auto sample_observables = [&](double t, std::size_t sample_index) {
        rec.t.push_back(t);
        std::vector<double> P(arms);
        for (std::size_t a = 0; a < arms; ++a)
            P[a] = kt.sym_quadform(n, couplings.G[a].data(), yre.data(), yim.data());
        const double total = norm_sq_of(yre.data(), yim.data());
        rec.total_norm.push_back(total);
        std::vector<double> centers(arms);
        std::vector<double> xq(arms);
        for (std::size_t a = 0; a < arms; ++a) {
            xq[a] = kt.sym_quadform(n, couplings.X[a].data(), yre.data(), yim.data());
            centers[a] =
                P[a] > 1e-9 ? xq[a] / P[a] : std::numeric_limits<double>::quiet_NaN();
        }
        if (arms == 2) rec.center_signed.push_back(xq[1] - xq[0]);
        rec.center_per_arm.push_back(std::move(centers));
        rec.partial_norms.push_back(std::move(P));
        if (std::abs(total - 1.0) > opt.norm_budget)
            throw NormDriftError("norm defect " + std::to_string(std::abs(total - 1.0)) +
                                 " at t=" + std::to_string(t) + " exceeds budget");
        if (opt.density_stride > 0 &&
            sample_index % static_cast<std::size_t>(opt.density_stride) == 0) {
            std::vector<std::vector<double>> frame(arms);
            for (std::size_t a = 0; a < arms; ++a) {
                const double L = basis.graph.arm_lengths[a];
                std::size_t pts = opt.points_per_arm > 0
                                      ? static_cast<std::size_t>(opt.points_per_arm)
                                      : auto_points(basis, a);
                if (grid_pts[a] == 0) {
                    grid_pts[a] = pts;
                    rec.grid_x[a].resize(pts);
                    for (std::size_t p = 0; p < pts; ++p)
                        rec.grid_x[a][p] =
                            L * static_cast<double>(p) / static_cast<double>(pts - 1);
                    psi_grids[a].resize(pts * n);
                    for (std::size_t p = 0; p < pts; ++p)
                        for (std::size_t m = 0; m < n; ++m)
                            psi_grids[a][p * n + m] =
                                basis.eigenfunction(m, a, rec.grid_x[a][p]);
                }
                pts = grid_pts[a];
                std::vector<double> ure(pts), uim(pts);
                kt.dense_matvec(pts, n, psi_grids[a].data(), yre.data(), ure.data());
                kt.dense_matvec(pts, n, psi_grids[a].data(), yim.data(), uim.data());
                frame[a].resize(pts);
                for (std::size_t p = 0; p < pts; ++p)
                    frame[a][p] = ure[p] * ure[p] + uim[p] * uim[p];
            }
            rec.frame_sample.push_back(sample_index);
            rec.density.push_back(std::move(frame));
        }
    };

    double t = state.t;
    const double t0_run = t;
    double h = std::min(opt.h0, t_end - t);
    std::size_t sample_index = 0;
    sample_observables(t, sample_index++);
    // accumulated sample times within a relative 1e-9 of t_end snap onto it,
    // otherwise an exact-multiple t_end/dt_sample leaves a sub-guard sliver
    const double snap = 1e-9 * std::max(1.0, std::abs(t_end));
    auto advance_sample = [&](double s) {
        s += opt.dt_sample;
        return s >= t_end - snap ? t_end : s;
    };
    double next_sample = opt.dt_sample > 0.0 ? advance_sample(t0_run) : t_end;

    rhs(t, 0.0, yre.data(), yim.data(), kre[0].data(), kim[0].data());

    const double* stage_coeffs[5] = {kA3, kA4, kA5, kA6, kB5};
    while (t < t_end - 1e-13 * std::max(1.0, std::abs(t_end))) {
        bool hit_sample = false;
        if (t + h >= next_sample - 1e-13) {
            h = next_sample - t;
            hit_sample = true;
        }

        // stages
        for (std::size_t i = 0; i < n; ++i) {
            acc_re[i] = yre[i] + h * kA21 * kre[0][i];
            acc_im[i] = yim[i] + h * kA21 * kim[0][i];
        }
        rhs(t, kC[1] * h, acc_re.data(), acc_im.data(), kre[1].data(), kim[1].data());
        for (int s = 2; s <= 6; ++s) {
            const double* a = stage_coeffs[s - 2];
            for (std::size_t i = 0; i < n; ++i) {
                double sr = 0.0, si = 0.0;
                for (int j = 0; j < s; ++j) {
                    sr += a[j] * kre[j][i];
                    si += a[j] * kim[j][i];
                }
                acc_re[i] = yre[i] + h * sr;
                acc_im[i] = yim[i] + h * si;
            }
            if (s < 6) {
                rhs(t, kC[s] * h, acc_re.data(), acc_im.data(), kre[s].data(),
                    kim[s].data());
            } else {
                // stage 6 accumulation with b5 weights IS the 5th-order solution
                std::swap(ynew_re, acc_re);
                std::swap(ynew_im, acc_im);
                rhs(t, h, ynew_re.data(), ynew_im.data(), kre[6].data(), kim[6].data());
            }
        }

        // embedded error estimate
        double err_sq = 0.0;
        double ymax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double er = 0.0, ei = 0.0;
            for (int j = 0; j < 7; ++j) {
                er += kE[j] * kre[j][i];
                ei += kE[j] * kim[j][i];
            }
            er *= h;
            ei *= h;
            err_sq += er * er + ei * ei;
            ymax = std::max({ymax, std::abs(ynew_re[i]), std::abs(ynew_im[i]),
                             std::abs(yre[i]), std::abs(yim[i])});
        }
        const double scale = opt.atol + opt.rtol * ymax;
        const double en = std::sqrt(err_sq / (2.0 * static_cast<double>(n))) / scale;

        if (en <= 1.0) {
            t = hit_sample ? next_sample : t + h;
            ++rec.stats.steps_accepted;
            // re-anchor the interaction picture at the new time
            kt.phase_table(n, k2.data(), h, ch.data(), sh.data());
            kt.rotate_fwd(n, ch.data(), sh.data(), ynew_re.data(), ynew_im.data(),
                          yre.data(), yim.data());
            kt.rotate_fwd(n, ch.data(), sh.data(), kre[6].data(), kim[6].data(),
                          kre[0].data(), kim[0].data());
            if (hit_sample) {
                sample_observables(t, sample_index++);
                next_sample = advance_sample(next_sample);
                if (next_sample <= t) next_sample = t_end;
            }
            const double fac = en > 1e-300 ? 0.9 * std::pow(en, -0.2) : 5.0;
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            ++rec.stats.steps_rejected;
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 0.9);
        }
        h = std::min(h, t_end - t);
        if (t < t_end && h < 1e-12)
            throw StepUnderflowError("step size underflow at t=" + std::to_string(t));
    }

    if (rec.t.empty() || rec.t.back() < t_end - 1e-12) sample_observables(t_end, sample_index++);

    state.t = t_end;
    for (std::size_t i = 0; i < n; ++i) state.c[i] = {yre[i], yim[i]};
    rec.stats.final_norm_defect = std::abs(state.norm_sq() - 1.0);
    return rec;
}

}  // namespace stargraph
