#include "stargraph/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "stargraph/errors.hpp"

namespace stargraph {

double quadrature_oracle(const SpectralBasis& basis, OracleWeight weight, double omega_d,
                         std::size_t arm, std::size_t n, std::size_t m,
                         const OracleOptions& opt) {
    const double L = basis.graph.arm_lengths[arm];
    double max_freq = std::max(basis.k_d[n], basis.k_d[m]);
    if (weight == OracleWeight::CosLattice) max_freq = std::max(max_freq, omega_d);
    max_freq = std::max(max_freq, 1.0);

    auto integrand = [&](double x) {
        double w;
        switch (weight) {
            case OracleWeight::One: w = 1.0; break;
            case OracleWeight::X: w = x; break;
            default: w = std::cos(omega_d * x); break;
        }
        return basis.eigenfunction(n, arm, x) * w * basis.eigenfunction(m, arm, x);
    };

    const double nodes = std::ceil(opt.points_per_wavelength * L * max_freq / (2.0 * M_PI));
    std::size_t panels =
        static_cast<std::size_t>(std::max(1.0, std::ceil(nodes / 16.0)));
    double prev = composite_gl16(integrand, 0.0, L, panels);
    for (int level = 0; level < opt.max_levels; ++level) {
        panels *= 2;
        const double cur = composite_gl16(integrand, 0.0, L, panels);
        const double tol = std::max(opt.rel_tol * std::abs(cur), opt.abs_floor);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    throw NoConvergenceError("quadrature",
                             "panel refinement did not converge for arm " +
                                 std::to_string(arm + 1) + " modes (" + std::to_string(n) +
                                 "," + std::to_string(m) + ")");
}

}  // namespace stargraph
