#include "stargraph/spectrum.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "stargraph/errors.hpp"
#include "stargraph/kernels.hpp"
#include "stargraph/linalg.hpp"
#include "stargraph/quadrature.hpp"

namespace stargraph {
namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

__float128 secular_sum_q(const StarGraph& g, __float128 k) {
    __float128 s = 0;
    for (double L : g.arm_lengths) {
        const __float128 arg = k * static_cast<__float128>(L);
        s += cosq(arg) / sinq(arg);
    }
    return s;
}

__float128 secular_deriv_q(const StarGraph& g, __float128 k) {
    __float128 s = 0;
    for (double L : g.arm_lengths) {
        const __float128 Lq = static_cast<__float128>(L);
        const __float128 sn = sinq(k * Lq);
        s -= Lq / (sn * sn);
    }
    return s;
}

long double secular_quick(const StarGraph& g, long double k) {
    long double s = 0;
    for (double L : g.arm_lengths) {
        const long double arg = k * static_cast<long double>(L);
        s += cosl(arg) / sinl(arg);
    }
    return s;
}

struct Bracket {
    long double lo, hi;
};

long double polish_root(const StarGraph& g, const Bracket& br,
                        const SpectrumTolerances& tol, double* residual_out) {
    // bisection: S decreases from +inf at lo+ to -inf at hi-
    long double lo = br.lo, hi = br.hi;
    while (hi - lo > static_cast<long double>(tol.bracket_width)) {
        const long double mid = 0.5L * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (secular_quick(g, mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    // Newton in binary128
    __float128 k = 0.5Q * (static_cast<__float128>(lo) + static_cast<__float128>(hi));
    for (int it = 0; it < tol.newton_iterations; ++it) {
        const __float128 f = secular_sum_q(g, k);
        const __float128 fp = secular_deriv_q(g, k);
        __float128 next = k - f / fp;
        if (next <= static_cast<__float128>(br.lo) || next >= static_cast<__float128>(br.hi))
            break;  // keep the bisection bracket authoritative
        const __float128 dk = next - k;
        k = next;
        if (fabsq(dk) < 1e-25Q * k) break;
    }
    // round to long double, then pick the neighbor with the smallest residual
    long double best = static_cast<long double>(k);
    double best_res = static_cast<double>(fabsq(secular_sum_q(g, best)));
    long double up = best, down = best;
    for (int step = 0; step < 2; ++step) {
        up = nextafterl(up, br.hi);
        down = nextafterl(down, br.lo);
        for (long double cand : {up, down}) {
            const double r = static_cast<double>(fabsq(secular_sum_q(g, cand)));
            if (r < best_res) {
                best_res = r;
                best = cand;
            }
        }
    }
    *residual_out = best_res;
    return best;
}

std::size_t panels_for(double length, double max_freq, int points_per_wavelength) {
    const double nodes = std::ceil(points_per_wavelength * length * max_freq /
                                   (2.0 * M_PI));
    return static_cast<std::size_t>(std::max(1.0, std::ceil(nodes / 16.0)));
}

}  // namespace

double StarGraph::total_length() const {
    return std::accumulate(arm_lengths.begin(), arm_lengths.end(), 0.0);
}

void StarGraph::validate() const {
    if (arm_lengths.empty())
        throw ConfigError("spectrum", "star graph needs at least one arm");
    for (std::size_t j = 0; j < arm_lengths.size(); ++j)
        if (!(arm_lengths[j] > 0.0))
            throw ConfigError("spectrum",
                              "arm length " + std::to_string(j + 1) + " must be positive");
}

double secular_sum(const StarGraph& graph, long double k) {
    return static_cast<double>(secular_sum_q(graph, static_cast<__float128>(k)));
}

std::vector<long double> secular_poles(const StarGraph& graph, double limit) {
    std::vector<long double> poles;
    for (double L : graph.arm_lengths) {
        const long double Ll = static_cast<long double>(L);
        for (long long m = 1;; ++m) {
            const long double p = static_cast<long double>(m) * kPiL / Ll;
            if (p > static_cast<long double>(limit)) break;
            poles.push_back(p);
        }
    }
    std::sort(poles.begin(), poles.end());
    return poles;
}

std::vector<long double> solve_secular(const StarGraph& graph, double k_max,
                                       const SpectrumTolerances& tol, ThreadPool* pool,
                                       std::vector<double>* residuals,
                                       double* min_pole_gap) {
    graph.validate();
    if (!(k_max > 0.0)) throw ConfigError("spectrum", "k_max must be positive");

    // extend past k_max by one pole per arm so the last interval closes
    const double margin = kPiL / *std::min_element(graph.arm_lengths.begin(),
                                                   graph.arm_lengths.end());
    std::vector<long double> poles = secular_poles(graph, k_max + static_cast<double>(margin) + 1.0);

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < poles.size(); ++i) {
        if (poles[i] > static_cast<long double>(k_max)) break;
        const double gap = static_cast<double>(poles[i + 1] - poles[i]);
        min_gap = std::min(min_gap, gap);
        if (gap < tol.pole_gap) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "cot poles %.17g apart near k=%.17g (< %.3g); arm lengths too "
                          "commensurate, perturb them",
                          gap, static_cast<double>(poles[i]), tol.pole_gap);
            throw PoleCollisionError(buf);
        }
    }
    if (min_pole_gap) *min_pole_gap = min_gap;

    std::vector<Bracket> brackets;
    long double prev = 0.0L;
    for (long double p : poles) {
        if (prev <= static_cast<long double>(k_max)) brackets.push_back({prev, p});
        prev = p;
    }

    std::vector<long double> roots(brackets.size(),
                                   std::numeric_limits<long double>::quiet_NaN());
    std::vector<double> res(brackets.size(), 0.0);
    auto work = [&](std::size_t b) {
        roots[b] = polish_root(graph, brackets[b], tol, &res[b]);
    };
    constexpr std::size_t kBlock = 16;
    const std::size_t nblocks = (brackets.size() + kBlock - 1) / kBlock;
    auto block_work = [&](std::size_t blk) {
        const std::size_t b0 = blk * kBlock;
        const std::size_t b1 = std::min(brackets.size(), b0 + kBlock);
        for (std::size_t b = b0; b < b1; ++b) work(b);
    };
    if (pool)
        pool->run_blocks(nblocks, block_work);
    else
        for (std::size_t blk = 0; blk < nblocks; ++blk) block_work(blk);

    std::vector<long double> out;
    std::vector<double> out_res;
    for (std::size_t b = 0; b < brackets.size(); ++b) {
        if (std::isnan(static_cast<double>(roots[b]))) continue;
        if (roots[b] > static_cast<long double>(k_max)) continue;
        if (res[b] > tol.residual) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "secular residual %.3e at k=%.17g exceeds %.3e", res[b],
                          static_cast<double>(roots[b]), tol.residual);
            throw RootResidualError(buf);
        }
        out.push_back(roots[b]);
        out_res.push_back(res[b]);
    }

    const double weyl = k_max * graph.total_length() / M_PI;
    const double slack = static_cast<double>(graph.arms());
    if (std::abs(static_cast<double>(out.size()) - weyl) > slack + 0.5)
        throw NumericError("spectrum",
                           "root count " + std::to_string(out.size()) +
                               " inconsistent with Weyl estimate " + std::to_string(weyl));

    if (residuals) *residuals = std::move(out_res);
    return out;
}

double normalization(const StarGraph& graph, long double k, bool* corrected,
                     double* delta) {
    // Normalize the eigenfunction as evaluated downstream, i.e. at the
    // double projection of k; extended precision only guards the formula
    // arithmetic itself.
    const double kd = static_cast<double>(k);
    const long double kk = static_cast<long double>(kd);
    long double inv_b2 = 0.0L;
    for (double L : graph.arm_lengths) {
        const long double Ll = static_cast<long double>(L);
        const long double s = sinl(kk * Ll);
        if (fabsl(s) <= 1e-6L)
            throw SinGuardError("|sin(k L_j)| <= 1e-6 at k=" + std::to_string(kd) +
                                ", eigenfunction ill-posed");
        inv_b2 += (Ll - sinl(2.0L * kk * Ll) / (2.0L * kk)) / (2.0L * s * s);
    }
    const double closed = static_cast<double>(1.0L / sqrtl(inv_b2));

    // Gauss-Legendre cross-check of sum_j int_0^{L_j} sin^2(k(L_j-x))/sin^2(k L_j)
    double quad = 0.0;
    for (double L : graph.arm_lengths) {
        const double s = static_cast<double>(sinl(kk * static_cast<long double>(L)));
        const std::size_t panels = panels_for(L, std::max(kd, 1.0), 8) * 2;
        quad += composite_gl16(
            [&](double x) {
                const double v = std::sin(kd * (L - x)) / s;
                return v * v;
            },
            0.0, L, panels);
    }
    const double from_quad = 1.0 / std::sqrt(quad);
    const double rel = std::abs(closed - from_quad) / from_quad;
    if (delta) *delta = rel;
    if (rel >= 1e-10) {
        if (corrected) *corrected = true;
        return from_quad;
    }
    if (corrected) *corrected = false;
    return closed;
}

double SpectralBasis::eigenfunction(std::size_t n, std::size_t arm, double x) const {
    const double L = graph.arm_lengths[arm];
    return coef[n * graph.arms() + arm] * std::sin(k_d[n] * (L - x));
}

double SpectralBasis::eigenfunction_dx(std::size_t n, std::size_t arm, double x) const {
    const double L = graph.arm_lengths[arm];
    return -coef[n * graph.arms() + arm] * k_d[n] * std::cos(k_d[n] * (L - x));
}

SpectralBasis build_basis(const StarGraph& graph, double k_max,
                          const SpectrumTolerances& tol, ThreadPool* pool,
                          BasisBuildReport* report) {
    SpectralBasis basis;
    basis.graph = graph;
    basis.k_max = k_max;
    std::vector<double> residuals;
    double min_gap = 0.0;
    basis.k = solve_secular(graph, k_max, tol, pool, &residuals, &min_gap);
    basis.secular_residual = residuals;
    basis.k_d.reserve(basis.k.size());
    for (long double kk : basis.k) basis.k_d.push_back(static_cast<double>(kk));

    double min_sin = std::numeric_limits<double>::infinity();
    for (long double kk : basis.k) {
        for (double L : graph.arm_lengths) {
            const double s = std::abs(static_cast<double>(sinl(kk * static_cast<long double>(L))));
            min_sin = std::min(min_sin, s);
            if (s <= tol.sin_guard)
                throw SinGuardError("|sin(k L_j)|=" + std::to_string(s) + " at k=" +
                                    std::to_string(static_cast<double>(kk)) +
                                    " below guard; perturb arm lengths");
        }
    }

    basis.B.resize(basis.k.size());
    std::size_t corrections = 0;
    double worst_delta = 0.0;
    for (std::size_t n = 0; n < basis.k.size(); ++n) {
        bool corrected = false;
        double delta = 0.0;
        basis.B[n] = normalization(graph, basis.k[n], &corrected, &delta);
        worst_delta = std::max(worst_delta, delta);
        if (corrected) ++corrections;
    }

    const std::size_t arms = graph.arms();
    basis.coef.resize(basis.k.size() * arms);
    for (std::size_t n = 0; n < basis.k.size(); ++n) {
        const long double kk = static_cast<long double>(basis.k_d[n]);
        for (std::size_t j = 0; j < arms; ++j) {
            const long double s = sinl(kk * static_cast<long double>(graph.arm_lengths[j]));
            basis.coef[n * arms + j] = basis.B[n] / static_cast<double>(s);
        }
    }

    if (report) {
        report->root_count = basis.k.size();
        report->weyl_estimate = k_max * graph.total_length() / M_PI;
        report->worst_residual =
            residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
        report->min_sin_guard = min_sin;
        report->min_pole_gap = min_gap;
        report->normalization_corrections = corrections;
        report->worst_normalization_delta = worst_delta;
    }
    return basis;
}

double orthonormality_check(const SpectralBasis& basis, int points_per_wavelength,
                            ThreadPool* pool) {
    if (points_per_wavelength < 8)
        throw ConfigError("spectrum", "orthonormality check needs >= 8 points per wavelength");
    const std::size_t n = basis.size();
    if (n == 0) return 0.0;
    const double kmax = basis.k_d.back();

    SymMatrix gram(n);
    const auto& kt = kernels::active();

    for (std::size_t arm = 0; arm < basis.graph.arms(); ++arm) {
        const double L = basis.graph.arm_lengths[arm];
        const std::size_t panels = panels_for(L, kmax, points_per_wavelength);
        const std::size_t nodes = panels * 16;
        std::vector<double> x(nodes), w(nodes);
        const double h = L / static_cast<double>(panels);
        std::size_t idx = 0;
        for (std::size_t p = 0; p < panels; ++p) {
            const double mid = (static_cast<double>(p) + 0.5) * h;
            for (std::size_t q = 0; q < 8; ++q) {
                const double dx = 0.5 * h * GaussLegendre16::nodes[q];
                x[idx] = mid - dx;
                w[idx++] = 0.5 * h * GaussLegendre16::weights[q];
                x[idx] = mid + dx;
                w[idx++] = 0.5 * h * GaussLegendre16::weights[q];
            }
        }
        // columns scaled by sqrt(w) so gram entries are plain dots
        std::vector<double> phi(n * nodes);
        auto fill_block = [&](std::size_t blk) {
            const std::size_t c0 = blk * 16, c1 = std::min(n, c0 + 16);
            for (std::size_t c = c0; c < c1; ++c) {
                double* col = phi.data() + c * nodes;
                for (std::size_t p = 0; p < nodes; ++p)
                    col[p] = std::sqrt(w[p]) * basis.eigenfunction(c, arm, x[p]);
            }
        };
        const std::size_t fill_blocks = (n + 15) / 16;
        if (pool)
            pool->run_blocks(fill_blocks, fill_block);
        else
            for (std::size_t b = 0; b < fill_blocks; ++b) fill_block(b);

        constexpr std::size_t kTile = 32;
        const std::size_t tiles = (n + kTile - 1) / kTile;
        std::vector<std::pair<std::size_t, std::size_t>> tile_pairs;
        for (std::size_t ti = 0; ti < tiles; ++ti)
            for (std::size_t tj = ti; tj < tiles; ++tj) tile_pairs.emplace_back(ti, tj);
        auto tile_work = [&](std::size_t tp) {
            const auto [ti, tj] = tile_pairs[tp];
            const std::size_t i0 = ti * kTile, i1 = std::min(n, i0 + kTile);
            const std::size_t j0 = tj * kTile, j1 = std::min(n, j0 + kTile);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = std::max(i, j0); j < j1; ++j)
                    gram.upper(i, j) += kt.dot(nodes, phi.data() + i * nodes,
                                               phi.data() + j * nodes);
        };
        if (pool)
            pool->run_blocks(tile_pairs.size(), tile_work);
        else
            for (std::size_t tp = 0; tp < tile_pairs.size(); ++tp) tile_work(tp);
    }

    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            defect = std::max(defect, std::abs(gram(i, j) - target));
        }
    return defect;
}

}  // namespace stargraph
