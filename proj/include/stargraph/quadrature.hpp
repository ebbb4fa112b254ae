#pragma once

#include <array>
#include <cstddef>

#include "stargraph/spectrum.hpp"

namespace stargraph {

// 16-point Gauss-Legendre rule on [-1, 1] (positive half; symmetric).
struct GaussLegendre16 {
    static constexpr std::array<double, 8> nodes = {
        0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
        0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
        0.9445750230732326, 0.9894009349916499,
    };
    static constexpr std::array<double, 8> weights = {
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
        0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
        0.0622535239386480, 0.0271524594117541,
    };
};

// Composite 16-point rule over [a, b] with `panels` equal panels.
template <typename F>
double composite_gl16(F&& f, double a, double b, std::size_t panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * h;
        const double half = 0.5 * h;
        double acc = 0.0;
        for (std::size_t q = 0; q < 8; ++q) {
            const double dx = half * GaussLegendre16::nodes[q];
            acc += GaussLegendre16::weights[q] * (f(mid + dx) + f(mid - dx));
        }
        total += acc * half;
    }
    return total;
}

enum class OracleWeight { One, X, CosLattice };

struct OracleOptions {
    int points_per_wavelength = 8;  // initial resolution
    double rel_tol = 1e-12;         // successive-refinement agreement
    double abs_floor = 1e-13;
    int max_levels = 20;
};

// Adaptive-panel Gauss-Legendre value of
//   int_0^{L_j} psi_{j,m}(x) w(x) psi_{j,n}(x) dx
// with w one of {1, x, cos(omega_d x)}. Panel count doubles until two
// successive estimates agree to rel_tol; NoConvergence after max_levels.
double quadrature_oracle(const SpectralBasis& basis, OracleWeight weight, double omega_d,
                         std::size_t arm, std::size_t n, std::size_t m,
                         const OracleOptions& opt = {});

}  // namespace stargraph
