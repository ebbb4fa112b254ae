#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stargraph/errors.hpp"
#include "stargraph/kernels.hpp"
#include "stargraph/linalg.hpp"

using namespace stargraph;
namespace k = stargraph::kernels;

namespace {

struct Problem {
    std::size_t n;
    std::vector<SymMatrix> mats;
    std::vector<double> coeffs;
    std::vector<double> xre, xim;
};

Problem random_problem(std::size_t n, std::size_t nmat, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Problem p;
    p.n = n;
    for (std::size_t m = 0; m < nmat; ++m) {
        SymMatrix a(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) a.upper(i, j) = u(rng);
        p.mats.push_back(std::move(a));
        p.coeffs.push_back(u(rng));
    }
    p.xre.resize(n);
    p.xim.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.xre[i] = u(rng);
        p.xim[i] = u(rng);
    }
    return p;
}

// reference: dense accumulation in plain double
void reference_matvec(const Problem& p, std::vector<double>* yre,
                      std::vector<double>* yim) {
    yre->assign(p.n, 0.0);
    yim->assign(p.n, 0.0);
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) {
            double a = 0.0;
            for (std::size_t m = 0; m < p.mats.size(); ++m)
                a += p.coeffs[m] * p.mats[m](i, j);
            (*yre)[i] += a * p.xre[j];
            (*yim)[i] += a * p.xim[j];
        }
}

void run_fused(const k::Table& kt, const Problem& p, std::size_t row_block,
               std::vector<double>* yre, std::vector<double>* yim) {
    const std::size_t nblocks = (p.n + row_block - 1) / row_block;
    std::vector<double> scatter(nblocks * 2 * p.n, 0.0);
    std::vector<const double*> mats;
    for (const auto& m : p.mats) mats.push_back(m.data());
    yre->assign(p.n, 0.0);
    yim->assign(p.n, 0.0);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t r0 = b * row_block;
        const std::size_t r1 = std::min(p.n, r0 + row_block);
        kt.fused_sym_matvec(p.n, mats.size(), mats.data(), p.coeffs.data(), p.xre.data(),
                            p.xim.data(), yre->data(), yim->data(),
                            scatter.data() + b * 2 * p.n,
                            scatter.data() + b * 2 * p.n + p.n, r0, r1);
    }
    for (std::size_t b = 0; b < nblocks; ++b) {
        kt.axpy(p.n, 1.0, scatter.data() + b * 2 * p.n, yre->data());
        kt.axpy(p.n, 1.0, scatter.data() + b * 2 * p.n + p.n, yim->data());
    }
}

}  // namespace

TEST_CASE("packed upper-triangle indexing") {
    SymMatrix a(4);
    int v = 0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i; j < 4; ++j) a.upper(i, j) = ++v;
    CHECK(a(0, 0) == 1);
    CHECK(a(0, 3) == 4);
    CHECK(a(3, 0) == 4);  // mirror
    CHECK(a(2, 2) == 8);
    CHECK(a(3, 3) == 10);
    CHECK(k::packed_size(4) == 10);
}

TEST_CASE("fused symmetric matvec matches dense reference") {
    for (std::size_t nmat : {1u, 2u, 3u, 4u}) {
        for (std::size_t n : {1u, 5u, 33u, 200u}) {
            Problem p = random_problem(n, nmat, 17u * static_cast<unsigned>(n + nmat));
            std::vector<double> ref_re, ref_im, yre, yim;
            reference_matvec(p, &ref_re, &ref_im);
            run_fused(k::scalar_table(), p, 128, &yre, &yim);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(yre[i] == doctest::Approx(ref_re[i]).epsilon(1e-12));
                CHECK(yim[i] == doctest::Approx(ref_im[i]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("scalar and avx2 tables agree") {
    if (!k::avx2_available()) return;
    const auto& sc = k::scalar_table();
    const auto& vx = k::avx2_table();
    Problem p = random_problem(97, 4, 1234);

    std::vector<double> a_re, a_im, b_re, b_im;
    run_fused(sc, p, 32, &a_re, &a_im);
    run_fused(vx, p, 32, &b_re, &b_im);
    for (std::size_t i = 0; i < p.n; ++i) {
        CHECK(a_re[i] == doctest::Approx(b_re[i]).epsilon(1e-13));
        CHECK(a_im[i] == doctest::Approx(b_im[i]).epsilon(1e-13));
    }

    const double qa = sc.sym_quadform(p.n, p.mats[0].data(), p.xre.data(), p.xim.data());
    const double qb = vx.sym_quadform(p.n, p.mats[0].data(), p.xre.data(), p.xim.data());
    CHECK(qa == doctest::Approx(qb).epsilon(1e-13));

    CHECK(sc.dot(p.n, p.xre.data(), p.xim.data()) ==
          doctest::Approx(vx.dot(p.n, p.xre.data(), p.xim.data())).epsilon(1e-13));

    std::vector<double> dense(p.n * p.n);
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) dense[i * p.n + j] = p.mats[0](i, j);
    std::vector<double> da(p.n), db(p.n);
    sc.dense_matvec(p.n, p.n, dense.data(), p.xre.data(), da.data());
    vx.dense_matvec(p.n, p.n, dense.data(), p.xre.data(), db.data());
    for (std::size_t i = 0; i < p.n; ++i)
        CHECK(da[i] == doctest::Approx(db[i]).epsilon(1e-13));
}

TEST_CASE("phase table and rotations are bit-identical across tables") {
    if (!k::avx2_available()) return;
    const auto& sc = k::scalar_table();
    const auto& vx = k::avx2_table();
    const std::size_t n = 143;
    std::vector<double> k2(n);
    for (std::size_t i = 0; i < n; ++i) k2[i] = 0.002 + 631.0 * i / (n - 1.0);

    for (double tau : {1e-4, 9e-4, 0.3, 2.5}) {  // poly path and libm path
        std::vector<double> c1(n), s1(n), c2(n), s2(n);
        sc.phase_table(n, k2.data(), tau, c1.data(), s1.data());
        vx.phase_table(n, k2.data(), tau, c2.data(), s2.data());
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(c1[i] == c2[i]);
            CHECK(s1[i] == s2[i]);
            CHECK(c1[i] * c1[i] + s1[i] * s1[i] == doctest::Approx(1.0).epsilon(1e-14));
        }
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> re(n), im(n);
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = u(rng);
            im[i] = u(rng);
        }
        std::vector<double> o1(n), o2(n), q1(n), q2(n);
        sc.rotate_fwd(n, c1.data(), s1.data(), re.data(), im.data(), o1.data(), q1.data());
        vx.rotate_fwd(n, c1.data(), s1.data(), re.data(), im.data(), o2.data(), q2.data());
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(o1[i] == o2[i]);
            CHECK(q1[i] == q2[i]);
        }
        sc.rotate_back_neg_i(n, c1.data(), s1.data(), re.data(), im.data(), o1.data(),
                             q1.data());
        vx.rotate_back_neg_i(n, c1.data(), s1.data(), re.data(), im.data(), o2.data(),
                             q2.data());
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(o1[i] == o2[i]);
            CHECK(q1[i] == q2[i]);
        }
    }
}

TEST_CASE("phase table matches libm on the polynomial path") {
    const auto& sc = k::scalar_table();
    const std::size_t n = 64;
    std::vector<double> k2(n), c(n), s(n);
    for (std::size_t i = 0; i < n; ++i) k2[i] = 1.0 + 600.0 * i / (n - 1.0);
    const double tau = 1.2e-3;  // max theta ~ 0.72, inside the poly range
    REQUIRE(tau * k2[n - 1] <= 0.7853981633974483);
    sc.phase_table(n, k2.data(), tau, c.data(), s.data());
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(c[i] == doctest::Approx(std::cos(k2[i] * tau)).epsilon(2e-16));
        CHECK(s[i] == doctest::Approx(std::sin(k2[i] * tau)).epsilon(2e-16));
    }
}

TEST_CASE("rotation by e^{-i theta} preserves the norm") {
    const auto& kt = k::active();
    const std::size_t n = 51;
    std::vector<double> k2(n), c(n), s(n), re(n), im(n), ore(n), oim(n);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        k2[i] = i * 3.7;
        re[i] = u(rng);
        im[i] = u(rng);
    }
    kt.phase_table(n, k2.data(), 0.37, c.data(), s.data());
    kt.rotate_fwd(n, c.data(), s.data(), re.data(), im.data(), ore.data(), oim.data());
    const double before = kt.dot(n, re.data(), re.data()) + kt.dot(n, im.data(), im.data());
    const double after =
        kt.dot(n, ore.data(), ore.data()) + kt.dot(n, oim.data(), oim.data());
    CHECK(after == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("block decomposition reproducibility") {
    const auto& kt = k::active();
    Problem p = random_problem(150, 4, 5);
    std::vector<double> y1re, y1im, y2re, y2im, y3re, y3im;
    run_fused(kt, p, 150, &y1re, &y1im);  // single block
    run_fused(kt, p, 128, &y2re, &y2im);  // production block size
    for (std::size_t i = 0; i < p.n; ++i) {
        CHECK(y1re[i] == doctest::Approx(y2re[i]).epsilon(1e-12));
        CHECK(y1im[i] == doctest::Approx(y2im[i]).epsilon(1e-12));
    }
    run_fused(kt, p, 128, &y3re, &y3im);
    for (std::size_t i = 0; i < p.n; ++i) {
        CHECK(y2re[i] == y3re[i]);  // identical grouping is bit-identical
        CHECK(y2im[i] == y3im[i]);
    }
}

TEST_CASE("kernel dispatch") {
    CHECK(std::string(k::resolve("scalar").name) == "scalar");
    CHECK_THROWS_AS(k::resolve("bogus"), stargraph::ConfigError);
    const auto& chosen = k::resolve("auto");
    if (k::avx2_available())
        CHECK(std::string(chosen.name) == "avx2");
    else
        CHECK(std::string(chosen.name) == "scalar");
}
