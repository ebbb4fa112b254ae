#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stargraph/threads.hpp"

namespace stargraph {

// Metric star graph: N arms of length L_j joined at one vertex. Arm
// coordinate x runs from 0 (vertex) to L_j (Dirichlet outer end).
struct StarGraph {
    std::vector<double> arm_lengths;

    std::size_t arms() const { return arm_lengths.size(); }
    double total_length() const;
    void validate() const;  // N >= 1, every L_j > 0
};

// Tolerances of the secular solve.
struct SpectrumTolerances {
    double pole_gap = 1e-6;        // minimum spacing of cot poles
    double sin_guard = 1e-6;       // minimum |sin(k L_j)| at retained roots
    double residual = 1e-10;       // |sum_j cot(k L_j)| at each root
    double bracket_width = 1e-8;   // bisection exit width
    int newton_iterations = 5;
};

// Orthonormal eigenbasis of the potential-free graph:
//   psi_{j,n}(x) = B_n sin(k_n (L_j - x)) / sin(k_n L_j)
// with sum_j cot(k_n L_j) = 0. Roots are stored in extended precision:
// near-degenerate pole pairs force |cot| ~ 1e3 at some roots, where a
// double-rounded k already moves the secular sum by ~1e-8 and the residual
// tolerance would be unreachable. Downstream consumers use the double
// projection k_d.
struct SpectralBasis {
    StarGraph graph;
    double k_max = 0.0;
    std::vector<long double> k;            // ascending
    std::vector<double> k_d;               // double projection of k
    std::vector<double> B;                 // normalization coefficients
    std::vector<double> secular_residual;  // |S(k_n)| at the stored root
    std::vector<double> coef;              // [n*arms + j] = B_n / sin(k_n L_j)

    std::size_t size() const { return k.size(); }

    // psi_{j,n}(x), 0 <= x <= L_j (double semantics, used by quadrature and
    // all downstream assembly)
    double eigenfunction(std::size_t n, std::size_t arm, double x) const;
    // d/dx psi_{j,n}(x)
    double eigenfunction_dx(std::size_t n, std::size_t arm, double x) const;
};

struct BasisBuildReport {
    std::size_t root_count = 0;
    double weyl_estimate = 0.0;
    double worst_residual = 0.0;
    double min_sin_guard = 0.0;       // min |sin(k_n L_j)|
    double min_pole_gap = 0.0;
    // normalization closed form vs quadrature: corrections applied when the
    // two disagree beyond tolerance (the quadrature value wins)
    std::size_t normalization_corrections = 0;
    double worst_normalization_delta = 0.0;  // relative
};

// All roots of S(k) = sum_j cot(k L_j) in (0, k_max]. Bracketing between
// consecutive poles (S is strictly decreasing there), bisection, then
// Newton polish evaluated in binary128.
std::vector<long double> solve_secular(const StarGraph& graph, double k_max,
                                       const SpectrumTolerances& tol = {},
                                       ThreadPool* pool = nullptr,
                                       std::vector<double>* residuals = nullptr,
                                       double* min_pole_gap = nullptr);

// Closed-form normalization for eigen-wavenumber k (antiderivative of
// sin^2), cross-checked against Gauss-Legendre quadrature; on disagreement
// beyond rel 1e-10 the quadrature value is returned and *corrected is set.
double normalization(const StarGraph& graph, long double k, bool* corrected = nullptr,
                     double* delta = nullptr);

SpectralBasis build_basis(const StarGraph& graph, double k_max,
                          const SpectrumTolerances& tol = {}, ThreadPool* pool = nullptr,
                          BasisBuildReport* report = nullptr);

// max_{m,n} |sum_j int psi_m psi_n - delta_mn| by composite Gauss-Legendre
// with at least points_per_wavelength nodes per shortest wavelength.
double orthonormality_check(const SpectralBasis& basis, int points_per_wavelength,
                            ThreadPool* pool = nullptr);

// Secular sum S(k) evaluated in extended precision (exposed for tests and
// the dense-scan oracle).
double secular_sum(const StarGraph& graph, long double k);
// Poles m*pi/L_j of S, ascending, in (0, limit].
std::vector<long double> secular_poles(const StarGraph& graph, double limit);

}  // namespace stargraph
