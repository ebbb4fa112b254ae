#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "stargraph/couplings.hpp"
#include "stargraph/kernels.hpp"
#include "stargraph/spectrum.hpp"
#include "stargraph/threads.hpp"

namespace stargraph {

// Per-arm external field law F_j(t).
struct FieldLaw {
    enum class Kind { Constant, Sinusoidal };
    Kind kind = Kind::Constant;
    double f = 0.0;
    double omega = 0.0;  // shared across sinusoidal arms
    double phi = 0.0;

    double operator()(double t) const {
        return kind == Kind::Constant ? f : f * std::sin(omega * t + phi);
    }
};

struct DriveSpec {
    std::vector<FieldLaw> field;  // one per arm
    void validate(std::size_t arms) const;
    // largest |f_j| (reference field strength for sampling defaults)
    double f_ref() const;
};

// Galerkin coefficient vector C(t) over the retained modes.
struct WaveState {
    double t = 0.0;
    std::vector<std::complex<double>> c;

    double norm_sq() const;
};

struct InitReport {
    double mass_on_arm = 0.0;       // int_arm |g|^2 of the line-normalized packet
    double truncation_loss = 0.0;   // mass_on_arm - sum |C_n|^2 (pre-renormalization)
};

// Projects the normalized Gaussian
//   g(x) = (2 pi sigma^2)^{-1/4} exp[-(x-x0)^2/(4 sigma^2)] e^{iqx}
// restricted to arm j0 onto the basis and renormalizes. The loss that the
// threshold guards is the part recoverable by raising k_max, i.e. relative
// to the packet mass actually on the arm; tails clipped at the vertex or
// outer end are reported separately via InitReport.
WaveState init_gaussian(const SpectralBasis& basis, std::size_t arm, double x0,
                        double sigma, double q = 0.0, InitReport* report = nullptr,
                        double loss_tol = 1e-4);

struct EvolveOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double norm_budget = 1e-6;
    double dt_sample = 0.0;       // required > 0 when sampling
    int density_stride = 0;       // frames every n-th sample; 0 = none
    int points_per_arm = 0;       // 0 = 8 per shortest wavelength
    double h0 = 1e-3;
    const kernels::Table* table = nullptr;  // nullptr = kernels::active()
    ThreadPool* pool = nullptr;
};

struct TrajectoryRecord {
    std::vector<double> t;
    std::vector<std::vector<double>> partial_norms;  // [sample][arm]
    std::vector<double> total_norm;
    // signed line coordinate <x> for 2-arm graphs (arm 1 negated); empty otherwise
    std::vector<double> center_signed;
    // per-arm conditional centers <x>_j = (C^dag X_j C)/P_j; NaN when P_j ~ 0
    std::vector<std::vector<double>> center_per_arm;
    std::vector<std::size_t> frame_sample;           // sample index per frame
    std::vector<std::vector<std::vector<double>>> density;  // [frame][arm][point]
    std::vector<std::vector<double>> grid_x;         // per-arm grid
    struct Stats {
        std::size_t steps_accepted = 0;
        std::size_t steps_rejected = 0;
        std::size_t rhs_evaluations = 0;
        double final_norm_defect = 0.0;
    } stats;
};

// Integrates i dC/dt = [diag(k^2) + V0_eff(t) IV_unit + sum_j F_j(t) X_j] C
// from state.t to t_end. Interaction-picture stepping: the diagonal phase is
// applied analytically and re-anchored every accepted step; the coupling
// part advances with an embedded Dormand-Prince 5(4) pair. The error scale
// is atol + rtol*max|Y| (state-norm relative). The norm is monitored at
// every sample and at the end, never rescaled.
TrajectoryRecord evolve(WaveState& state, double t_end, const DriveSpec& drives,
                        const LatticePotential& potential, const CouplingSet& couplings,
                        const SpectralBasis& basis, const EvolveOptions& opt);

// P_j = C^dag G_j C for every arm.
std::vector<double> partial_norms(const WaveState& state, const CouplingSet& couplings,
                                  const kernels::Table* table = nullptr);

// |Psi_j(x)|^2 on a uniform per-arm grid of points_per_arm points
// (0 = 8 per shortest wavelength). Grid endpoints included.
std::vector<std::vector<double>> density_on_grid(const WaveState& state,
                                                 const SpectralBasis& basis,
                                                 int points_per_arm = 0,
                                                 std::vector<std::vector<double>>* grid_x =
                                                     nullptr,
                                                 const kernels::Table* table = nullptr);

}  // namespace stargraph
