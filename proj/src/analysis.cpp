#include "stargraph/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "stargraph/errors.hpp"

namespace stargraph {
namespace {

// moving average over +/- half points
std::vector<double> smooth(const std::vector<double>& v, std::size_t half) {
    if (half == 0) return v;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t a = i > half ? i - half : 0;
        const std::size_t b = std::min(v.size() - 1, i + half);
        double s = 0.0;
        for (std::size_t j = a; j <= b; ++j) s += v[j];
        out[i] = s / static_cast<double>(b - a + 1);
    }
    return out;
}

}  // namespace

WidthFit fit_gaussian_width(const std::vector<double>& x, const std::vector<double>& rho,
                            double lattice_d) {
    if (x.size() != rho.size() || x.size() < 8)
        throw ConfigError("analysis", "profile needs matching x/rho with >= 8 points");
    const double dx = x[1] - x[0];
    const std::size_t half =
        lattice_d > 0.0 ? static_cast<std::size_t>(std::max(1.0, 0.5 * lattice_d / dx)) : 1;
    const std::vector<double> sm = smooth(rho, half);

    const std::size_t pk =
        static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin());
    const double peak = sm[pk];
    if (!(peak > 0.0)) throw MultiModalError("profile has no positive peak");

    // crude width from the half-maximum crossing, then moments inside pk +/- 4 sigma
    std::size_t lo = pk, hi = pk;
    while (lo > 0 && sm[lo] > 0.5 * peak) --lo;
    while (hi + 1 < sm.size() && sm[hi] > 0.5 * peak) ++hi;
    double sigma_est = std::max(dx, 0.5 * (x[hi] - x[lo]) / 1.17741);
    for (int pass = 0; pass < 2; ++pass) {
        const double wlo = x[pk] - 4.0 * sigma_est;
        const double whi = x[pk] + 4.0 * sigma_est;
        double m0 = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < wlo || x[i] > whi) continue;
            m0 += rho[i];
            m1 += rho[i] * x[i];
        }
        if (!(m0 > 0.0)) throw MultiModalError("empty fit window");
        const double c = m1 / m0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < wlo || x[i] > whi) continue;
            m2 += rho[i] * (x[i] - c) * (x[i] - c);
        }
        sigma_est = std::sqrt(m2 / m0);
    }

    const double wlo = x[pk] - 4.0 * sigma_est;
    const double whi = x[pk] + 4.0 * sigma_est;

    // dominant-bump precondition: no secondary smoothed peak above peak/5
    // outside the window
    for (std::size_t i = 1; i + 1 < sm.size(); ++i) {
        if (x[i] >= wlo && x[i] <= whi) continue;
        if (sm[i] > sm[i - 1] && sm[i] >= sm[i + 1] && sm[i] > 0.2 * peak)
            throw MultiModalError("secondary bump at x=" + std::to_string(x[i]) +
                                  " rivals the main peak");
    }

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= wlo && x[i] <= whi) {
            xs.push_back(x[i]);
            ys.push_back(rho[i]);
        }

    double A = *std::max_element(ys.begin(), ys.end());
    double c = x[pk];
    double s = sigma_est;

    WidthFit fit;
    const int max_iter = 100;
    int it = 0;
    for (; it < max_iter; ++it) {
        // normal equations for (A, c, s)
        double JtJ[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double Jtr[3] = {0, 0, 0};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double u = (xs[i] - c) / s;
            const double e = std::exp(-0.5 * u * u);
            const double model = A * e;
            const double r = model - ys[i];
            const double dA = e;
            const double dc = model * u / s;
            const double ds = model * u * u / s;
            const double J[3] = {dA, dc, ds};
            for (int a = 0; a < 3; ++a) {
                Jtr[a] += J[a] * r;
                for (int b = a; b < 3; ++b) JtJ[a][b] += J[a] * J[b];
            }
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < a; ++b) JtJ[a][b] = JtJ[b][a];
        // 3x3 solve, Cramer
        const double det = JtJ[0][0] * (JtJ[1][1] * JtJ[2][2] - JtJ[1][2] * JtJ[2][1]) -
                           JtJ[0][1] * (JtJ[1][0] * JtJ[2][2] - JtJ[1][2] * JtJ[2][0]) +
                           JtJ[0][2] * (JtJ[1][0] * JtJ[2][1] - JtJ[1][1] * JtJ[2][0]);
        if (det == 0.0) throw NoConvergenceError("analysis", "singular normal equations");
        auto solve3 = [&](int col) {
            double M[3][3];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) M[a][b] = (b == col) ? -Jtr[a] : JtJ[a][b];
            return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                    M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                    M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])) /
                   det;
        };
        const double dA = solve3(0), dc = solve3(1), ds = solve3(2);
        A += dA;
        c += dc;
        s += ds;
        if (!(s > 0.0) || !(A > 0.0))
            throw NoConvergenceError("analysis", "fit left the admissible region");
        const double rel = std::max({std::abs(dA) / std::abs(A),
                                     std::abs(dc) / std::max(std::abs(c), s),
                                     std::abs(ds) / s});
        if (rel < 1e-9) break;
    }
    if (it == max_iter)
        throw NoConvergenceError("analysis", "Gauss-Newton did not converge in 100 iterations");

    double rss = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double u = (xs[i] - c) / s;
        const double r = A * std::exp(-0.5 * u * u) - ys[i];
        rss += r * r;
        tss += ys[i] * ys[i];
    }
    fit.center = c;
    fit.sigma = s;
    fit.amplitude = A;
    fit.residual = tss > 0.0 ? std::sqrt(rss / tss) : 0.0;
    fit.iterations = it + 1;
    return fit;
}

double bessel_j0(double x) {
    x = std::abs(x);
    if (x <= 20.0) {
        // power series sum_k (-1)^k (x^2/4)^k / (k!)^2; extended precision
        // absorbs the alternating-term cancellation up to the crossover
        const long double q = 0.25L * static_cast<long double>(x) * x;
        long double term = 1.0L;
        long double sum = 1.0L;
        for (int k = 1; k < 120; ++k) {
            term *= -q / (static_cast<long double>(k) * k);
            sum += term;
            if (fabsl(term) < 1e-22L * fmaxl(1.0L, fabsl(sum))) break;
        }
        return static_cast<double>(sum);
    }
    // Hankel expansion: a_m = a_{m-1} (2m-1)^2/(8m), truncated at the
    // smallest term; P collects even m, Q odd m
    long double a = 1.0L;
    long double P = 1.0L, Q = 0.0L;
    const long double invx = 1.0L / static_cast<long double>(x);
    long double xpow = 1.0L;
    long double prev = 1e30L;
    int sp = 0, sq = 0;  // sign counters
    for (int m = 1; m <= 40; ++m) {
        a *= static_cast<long double>(2 * m - 1) * (2 * m - 1) /
             (8.0L * static_cast<long double>(m));
        xpow *= invx;
        const long double term = a * xpow;
        if (fabsl(term) > prev) break;
        prev = fabsl(term);
        if (m % 2 == 0) {
            P += ((++sp) % 2 == 1 ? -1.0L : 1.0L) * term;
        } else {
            Q += ((sq++) % 2 == 0 ? -1.0L : 1.0L) * term;
        }
        if (fabsl(term) < 1e-20L) break;
    }
    const long double chi =
        static_cast<long double>(x) - 0.785398163397448309615660845819875721L;
    const long double amp = sqrtl(0.636619772367581343075535053490057448L * invx);
    return static_cast<double>(amp * (cosl(chi) * P - sinl(chi) * Q));
}

double predicted_width(double t, double f, double omega, double phi, double sigma0) {
    if (!(omega > 0.0)) throw ConfigError("analysis", "predicted_width needs omega > 0");
    const double r = f / omega;
    const double g = bessel_j0(r) * std::cos(r * std::cos(phi)) / (sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + t * t * g * g);
}

BlochObservables bloch_observables(const std::vector<double>& center_series, double dt,
                                   double f_strength) {
    const std::size_t n = center_series.size();
    if (n < 16 || !(dt > 0.0))
        throw ConfigError("analysis", "center series too short for period extraction");

    double mean = 0.0;
    for (double v : center_series) mean += v;
    mean /= static_cast<double>(n);

    // Hann window, then magnitude DFT (series lengths are small; O(n^2) is fine)
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann =
            0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                 static_cast<double>(n - 1));
        w[i] = (center_series[i] - mean) * hann;
    }
    const std::size_t nf = n / 2 + 1;
    std::vector<double> mag(nf, 0.0);
    for (std::size_t k = 1; k < nf; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ang =
                -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(i) /
                static_cast<double>(n);
            re += w[i] * std::cos(ang);
            im += w[i] * std::sin(ang);
        }
        mag[k] = std::hypot(re, im);
    }

    std::size_t pk = 1;
    for (std::size_t k = 2; k < nf; ++k)
        if (mag[k] > mag[pk]) pk = k;

    // background: median magnitude away from the peak
    std::vector<double> bg;
    for (std::size_t k = 1; k < nf; ++k)
        if (k + 3 < pk || k > pk + 3) bg.push_back(mag[k]);
    double background = 0.0;
    if (!bg.empty()) {
        std::nth_element(bg.begin(), bg.begin() + bg.size() / 2, bg.end());
        background = bg[bg.size() / 2];
    }
    if (mag[pk] < 3.0 * background || mag[pk] == 0.0)
        throw NoOscillationError("no dominant spectral peak in <x>(t)");

    double shift = 0.0;
    if (pk + 1 < nf && pk >= 2) {
        const double num = mag[pk - 1] - mag[pk + 1];
        const double den = mag[pk - 1] - 2.0 * mag[pk] + mag[pk + 1];
        if (den != 0.0) shift = 0.5 * num / den;
        shift = std::clamp(shift, -0.5, 0.5);
    }
    const double freq = (static_cast<double>(pk) + shift) /
                        (static_cast<double>(n) * dt);

    BlochObservables out;
    out.T_B = 1.0 / freq;
    const auto [mn, mx] = std::minmax_element(center_series.begin(), center_series.end());
    out.Lambda = *mx - *mn;
    out.Delta = out.Lambda * f_strength;
    return out;
}

}  // namespace stargraph
