#include <doctest.h>

#include <cmath>
#include <random>

#include "stargraph/couplings.hpp"
#include "stargraph/errors.hpp"

using namespace stargraph;
using namespace stargraph::coupling_detail;

namespace {
constexpr double kPi = 3.14159265358979323846;
const StarGraph kDefaultGraph{{40.0, 40.0 + std::sqrt(2.0), 40.0 + std::sqrt(3.0)}};
}  // namespace

TEST_CASE("primitive integrals against analytic values") {
    CHECK(ic(2.0, 1.5) == doctest::Approx(std::sin(3.0) / 2.0).epsilon(1e-15));
    CHECK(is(2.0, 1.5) == doctest::Approx((1.0 - std::cos(3.0)) / 2.0).epsilon(1e-14));
    CHECK(jc(2.0, 1.5) ==
          doctest::Approx((std::cos(3.0) - 1.0) / 4.0 + 1.5 * std::sin(3.0) / 2.0)
              .epsilon(1e-14));
    // q -> 0 limits
    CHECK(ic(0.0, 1.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(is(0.0, 1.5) == 0.0);
    CHECK(jc(0.0, 1.5) == doctest::Approx(1.5 * 1.5 / 2.0).epsilon(1e-15));
}

TEST_CASE("denominator branches agree at the crossover") {
    // values at |q| = 1e-7 (general branch) versus 1e-9 (Taylor branch)
    for (double L : {1.0, 42.0}) {
        CHECK(ic(1e-7, L) == doctest::Approx(ic(1e-9, L)).epsilon(1e-6));
        CHECK(jc(1e-7, L) == doctest::Approx(jc(1e-9, L)).epsilon(1e-6));
        // the sine primitive vanishes linearly; compare the slope
        CHECK(is(1e-7, L) / 1e-7 == doctest::Approx(is(1e-9, L) / 1e-9).epsilon(1e-6));
        // continuity right at the switch
        CHECK(ic(1.0000001e-8, L) == doctest::Approx(ic(0.9999999e-8, L)).epsilon(1e-9));
        CHECK(is(1.0000001e-8, L) == doctest::Approx(is(0.9999999e-8, L)).epsilon(1e-7));
        CHECK(jc(1.0000001e-8, L) == doctest::Approx(jc(0.9999999e-8, L)).epsilon(1e-9));
    }
}

TEST_CASE("coupling entries are continuous across the lattice resonance") {
    // k_n - k_m crossing omega_d: the v integral stays smooth
    const double W = 2 * kPi;
    const double km = 2.3, L = 17.0;
    const double v1 = v_integral(km + W - 1e-7, km, W, L);
    const double v2 = v_integral(km + W - 1e-9, km, W, L);
    const double v3 = v_integral(km + W + 1e-9, km, W, L);
    const double v4 = v_integral(km + W + 1e-7, km, W, L);
    CHECK(v1 == doctest::Approx(v2).epsilon(1e-6));
    CHECK(v2 == doctest::Approx(v3).epsilon(1e-6));
    CHECK(v3 == doctest::Approx(v4).epsilon(1e-6));
}

TEST_CASE("integrand symmetry is exact") {
    const double kn = 3.7, km = 1.2, L = 9.0, W = 2 * kPi;
    CHECK(g_integral(kn, km, L) == g_integral(km, kn, L));
    CHECK(x_integral(kn, km, L) == x_integral(km, kn, L));
    CHECK(v_integral(kn, km, W, L) == v_integral(km, kn, W, L));
}

TEST_CASE("printed-formula deltas: the artifact implements the integrals") {
    // diagonal: the classic printed form is exactly twice the integral
    const double k = 2.3, L = 7.0;
    const double printed_diag = L * L / 2.0 - (1.0 - std::cos(2 * k * L)) / (4 * k * k);
    CHECK(printed_diag / x_integral(k, k, L) == doctest::Approx(2.0).epsilon(1e-12));
    // off-diagonal: halving the cosine arguments and the overall scale of
    // the printed form recovers the integral
    const double km = 1.1;
    const double p = k - km, s = k + km;
    const double halved = (1.0 - std::cos(p * L)) / (2 * p * p) -
                          (1.0 - std::cos(s * L)) / (2 * s * s);
    CHECK(x_integral(k, km, L) == doctest::Approx(halved).epsilon(1e-12));
}

TEST_CASE("normalization identity: printed closed form is exact on-shell") {
    // at secular roots sum_j cot(k L_j) = 0 makes sin(2kL)/(2 sin^2(kL))
    // telescope away, so both normalization forms coincide
    SpectralBasis basis = build_basis(kDefaultGraph, 1.0);
    REQUIRE(basis.size() >= 10);
    for (std::size_t n = 0; n < 10; ++n) {
        const double k = basis.k_d[n];
        long double printed = 0.0L;
        for (double L : kDefaultGraph.arm_lengths) {
            const long double sl = std::sin(k * L);
            printed += (static_cast<long double>(L) + std::sin(2 * k * L)) / (2.0L * sl * sl);
        }
        const double b_printed = static_cast<double>(1.0L / sqrtl(printed));
        CHECK(b_printed == doctest::Approx(basis.B[n]).epsilon(1e-9));
    }
}

TEST_CASE("assembly on the default graph: completeness and positivity") {
    SpectralBasis basis = build_basis(kDefaultGraph, 1.0);
    LatticePotential pot{16.7875, 1.0, {}};
    CouplingSet set = assemble_couplings(basis, pot);
    const std::size_t n = basis.size();

    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < 3; ++a) s += set.G[a](i, j);
            defect = std::max(defect, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    CHECK(defect < 1e-8);

    for (std::size_t i = 0; i < n; ++i) {
        double diag = 0.0;
        for (std::size_t a = 0; a < 3; ++a) diag += set.X[a](i, i);
        CHECK(diag > 0.0);  // x >= 0 and psi^2 >= 0 on every arm
    }
}

TEST_CASE("overlap matrices are positive semidefinite") {
    // Gram matrices of restrictions: random-state probes must be >= 0
    SpectralBasis basis = build_basis(kDefaultGraph, 0.8);
    CouplingSet set = assemble_couplings(basis, LatticePotential{1.0, 1.0, {}});
    const std::size_t n = basis.size();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> re(n), im(n);
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = u(rng);
            im[i] = u(rng);
        }
        for (std::size_t a = 0; a < 3; ++a) {
            const double q = stargraph::kernels::active().sym_quadform(
                n, set.G[a].data(), re.data(), im.data());
            CHECK(q > -1e-10);
        }
    }
}

TEST_CASE("single arm: G is the identity") {
    StarGraph g{{1.0}};
    SpectralBasis basis = build_basis(g, 20.0);
    CouplingSet set = assemble_couplings(basis, LatticePotential{1.0, 1.0, {}});
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j)
            CHECK(std::abs(set.G[0](i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
}

TEST_CASE("zero amplitude means zero lattice term") {
    LatticePotential pot{0.0, 1.0, {}};
    CHECK(pot.effective_v0(0.0) == 0.0);
    CHECK(pot.effective_v0(17.3) == 0.0);
    LatticePotential mod{4.0, 1.0, LatticePotential::Modulation{0.85, 0.2, 0.0}};
    CHECK(mod.effective_v0(0.0) == doctest::Approx(4.0).epsilon(1e-15));
    const double t = 3.1;
    CHECK(mod.effective_v0(t) ==
          doctest::Approx(4.0 * (1.0 - 0.85 * std::sin(0.2 * t))).epsilon(1e-15));
}

TEST_CASE("X entry frozen value on the unit interval") {
    StarGraph g{{1.0}};
    SpectralBasis basis = build_basis(g, 2.0);
    CouplingSet set = assemble_couplings(basis, LatticePotential{1.0, 1.0, {}});
    CHECK(set.X[0](0, 0) == doctest::Approx(0.29735763271532445).epsilon(1e-12));
}

TEST_CASE("verification pass: analytic assembly matches quadrature everywhere") {
    SpectralBasis basis = build_basis(kDefaultGraph, 1.0);
    LatticePotential pot{16.7875, 1.0, {}};
    CouplingSet set = assemble_couplings(basis, pot);
    std::vector<VerificationRow> rows;
    ThreadPool pool(2);
    VerificationSummary summary =
        verify_couplings(basis, pot, set, /*strict=*/true, &rows, &pool);
    CHECK(summary.failures == 0);
    CHECK(summary.max_rel_err < 1e-8);
    CHECK(summary.sum_g_defect < 1e-8);
    CHECK(summary.entries == rows.size());
    CHECK(summary.entries ==
          3 * kDefaultGraph.arms() * (basis.size() * (basis.size() + 1) / 2));
}

TEST_CASE("modulation bounds are validated") {
    LatticePotential bad{1.0, 1.0, LatticePotential::Modulation{1.5, 0.2, 0.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    LatticePotential bad2{1.0, -1.0, {}};
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
}
