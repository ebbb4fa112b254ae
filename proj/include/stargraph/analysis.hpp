#pragma once

#include <cstddef>
#include <vector>

namespace stargraph {

// Least-squares Gaussian profile fit A exp[-(x-c)^2/(2 sigma^2)].
struct WidthFit {
    double center = 0.0;
    double sigma = 0.0;
    double amplitude = 0.0;
    double residual = 0.0;  // ||fit - data|| / ||data|| over the fit window
    int iterations = 0;
};

// Gauss-Newton with moment initialization on the window peak +/- 4 sigma_est.
// The peak is located on a profile smoothed over one lattice period d so the
// lattice ripple does not register as structure. Throws MultiModal when a
// secondary bump exceeds a fifth of the main peak, NoConvergence after 100
// iterations.
WidthFit fit_gaussian_width(const std::vector<double>& x, const std::vector<double>& rho,
                            double lattice_d);

// Bessel J0 to ~1e-15 (power series below |x|=8, Hankel asymptotics above).
double bessel_j0(double x);

// sigma(t) = sigma0 sqrt(1 + t^2 [J0(f/w) cos((f/w) cos phi) / sigma0^2]^2)
double predicted_width(double t, double f, double omega, double phi, double sigma0);

struct BlochObservables {
    double T_B = 0.0;     // measured period
    double Lambda = 0.0;  // oscillation amplitude max<x> - min<x>
    double Delta = 0.0;   // bandwidth Lambda * f
};

// Period from the dominant discrete-Fourier peak of the centered, Hann-
// windowed series (parabolic peak interpolation); throws NoOscillation when
// the peak is below 3x the spectral background.
BlochObservables bloch_observables(const std::vector<double>& center_series, double dt,
                                   double f_strength);

struct SweepResult {
    std::vector<double> phi2;
    std::vector<std::vector<double>> partial;  // [grid point][arm]
    double t_final = 0.0;
    std::size_t argmax_separation = 0;  // argmax of P3 - max(P1, P2)
};

}  // namespace stargraph
