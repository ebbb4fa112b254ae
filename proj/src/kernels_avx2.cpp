#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "stargraph/kernels.hpp"

namespace stargraph::kernels {
namespace {

constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;
constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;
constexpr double kPolyRange = 0.78539816339744830962;

inline __m256d sin_poly4(__m256d x) {
    __m256d z = _mm256_mul_pd(x, x);
    __m256d r = _mm256_fmadd_pd(z, _mm256_set1_pd(S6), _mm256_set1_pd(S5));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(S4));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(S3));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(S2));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(S1));
    return _mm256_fmadd_pd(_mm256_mul_pd(x, z), r, x);
}

inline __m256d cos_poly4(__m256d x) {
    __m256d z = _mm256_mul_pd(x, x);
    __m256d r = _mm256_fmadd_pd(z, _mm256_set1_pd(C6), _mm256_set1_pd(C5));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(C4));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(C3));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(C2));
    r = _mm256_fmadd_pd(z, r, _mm256_set1_pd(C1));
    __m256d base = _mm256_fmadd_pd(z, _mm256_set1_pd(-0.5), _mm256_set1_pd(1.0));
    return _mm256_fmadd_pd(_mm256_mul_pd(z, z), r, base);
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

template <std::size_t NMAT>
inline __m256d combine4(const double* const* mats, const __m256d* cv, std::size_t idx) {
    __m256d a = _mm256_mul_pd(cv[0], _mm256_loadu_pd(mats[0] + idx));
    for (std::size_t m = 1; m < NMAT; ++m)
        a = _mm256_fmadd_pd(cv[m], _mm256_loadu_pd(mats[m] + idx), a);
    return a;
}

template <std::size_t NMAT>
inline double combine1(const double* const* mats, const double* coeffs, std::size_t idx) {
    double a = coeffs[0] * mats[0][idx];
    for (std::size_t m = 1; m < NMAT; ++m) a = std::fma(coeffs[m], mats[m][idx], a);
    return a;
}

template <std::size_t NMAT>
void fused_sym_matvec_impl(std::size_t n, const double* const* mats, const double* coeffs,
                           const double* x_re, const double* x_im, double* y_re,
                           double* y_im, double* scatter_re, double* scatter_im,
                           std::size_t row0, std::size_t row1) {
    __m256d cv[NMAT];
    for (std::size_t m = 0; m < NMAT; ++m) cv[m] = _mm256_set1_pd(coeffs[m]);
    for (std::size_t i = row0; i < row1; ++i) {
        const std::size_t off = packed_row_offset(n, i) - i;
        const double xi_re = x_re[i];
        const double xi_im = x_im[i];
        const __m256d xire = _mm256_set1_pd(xi_re);
        const __m256d xiim = _mm256_set1_pd(xi_im);
        double diag = combine1<NMAT>(mats, coeffs, off + i);
        double acc_re_s = diag * xi_re;
        double acc_im_s = diag * xi_im;
        __m256d acc_re = _mm256_setzero_pd();
        __m256d acc_im = _mm256_setzero_pd();
        std::size_t j = i + 1;
        for (; j + 4 <= n; j += 4) {
            const __m256d a = combine4<NMAT>(mats, cv, off + j);
            acc_re = _mm256_fmadd_pd(a, _mm256_loadu_pd(x_re + j), acc_re);
            acc_im = _mm256_fmadd_pd(a, _mm256_loadu_pd(x_im + j), acc_im);
            _mm256_storeu_pd(scatter_re + j,
                             _mm256_fmadd_pd(a, xire, _mm256_loadu_pd(scatter_re + j)));
            _mm256_storeu_pd(scatter_im + j,
                             _mm256_fmadd_pd(a, xiim, _mm256_loadu_pd(scatter_im + j)));
        }
        for (; j < n; ++j) {
            const double a = combine1<NMAT>(mats, coeffs, off + j);
            acc_re_s = std::fma(a, x_re[j], acc_re_s);
            acc_im_s = std::fma(a, x_im[j], acc_im_s);
            scatter_re[j] = std::fma(a, xi_re, scatter_re[j]);
            scatter_im[j] = std::fma(a, xi_im, scatter_im[j]);
        }
        y_re[i] = acc_re_s + hsum(acc_re);
        y_im[i] = acc_im_s + hsum(acc_im);
    }
}

void fused_sym_matvec(std::size_t n, std::size_t nmat, const double* const* mats,
                      const double* coeffs, const double* x_re, const double* x_im,
                      double* y_re, double* y_im, double* scatter_re, double* scatter_im,
                      std::size_t row0, std::size_t row1) {
    switch (nmat) {
        case 1:
            fused_sym_matvec_impl<1>(n, mats, coeffs, x_re, x_im, y_re, y_im, scatter_re,
                                     scatter_im, row0, row1);
            return;
        case 2:
            fused_sym_matvec_impl<2>(n, mats, coeffs, x_re, x_im, y_re, y_im, scatter_re,
                                     scatter_im, row0, row1);
            return;
        case 3:
            fused_sym_matvec_impl<3>(n, mats, coeffs, x_re, x_im, y_re, y_im, scatter_re,
                                     scatter_im, row0, row1);
            return;
        case 4:
            fused_sym_matvec_impl<4>(n, mats, coeffs, x_re, x_im, y_re, y_im, scatter_re,
                                     scatter_im, row0, row1);
            return;
        default:
            // multi-pass: first 4 then remaining in chunks accumulated via scatter
            fused_sym_matvec_impl<4>(n, mats, coeffs, x_re, x_im, y_re, y_im, scatter_re,
                                     scatter_im, row0, row1);
            for (std::size_t base = 4; base < nmat; base += 4) {
                const std::size_t chunk = std::min<std::size_t>(4, nmat - base);
                std::vector<double> tmp_re(n), tmp_im(n);
                fused_sym_matvec(n, chunk, mats + base, coeffs + base, x_re, x_im,
                                 tmp_re.data(), tmp_im.data(), scatter_re, scatter_im,
                                 row0, row1);
                for (std::size_t i = row0; i < row1; ++i) {
                    y_re[i] += tmp_re[i];
                    y_im[i] += tmp_im[i];
                }
            }
            return;
    }
}

double sym_quadform(std::size_t n, const double* mat, const double* x_re,
                    const double* x_im) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = mat + packed_row_offset(n, i) - i;
        __m256d dre = _mm256_setzero_pd();
        __m256d dim = _mm256_setzero_pd();
        double dre_s = 0.0, dim_s = 0.0;
        std::size_t j = i + 1;
        for (; j + 4 <= n; j += 4) {
            const __m256d a = _mm256_loadu_pd(row + j);
            dre = _mm256_fmadd_pd(a, _mm256_loadu_pd(x_re + j), dre);
            dim = _mm256_fmadd_pd(a, _mm256_loadu_pd(x_im + j), dim);
        }
        for (; j < n; ++j) {
            dre_s += row[j] * x_re[j];
            dim_s += row[j] * x_im[j];
        }
        const double dot_re = dre_s + hsum(dre);
        const double dot_im = dim_s + hsum(dim);
        total += row[i] * (x_re[i] * x_re[i] + x_im[i] * x_im[i]) +
                 2.0 * (x_re[i] * dot_re + x_im[i] * dot_im);
    }
    return total;
}

void phase_table(std::size_t n, const double* k2, double tau, double* c, double* s) {
    if (n == 0) return;
    const double theta_max = std::abs(tau) * k2[n - 1];
    if (theta_max <= kPolyRange) {
        const __m256d tv = _mm256_set1_pd(tau);
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            const __m256d th = _mm256_mul_pd(_mm256_loadu_pd(k2 + i), tv);
            _mm256_storeu_pd(c + i, cos_poly4(th));
            _mm256_storeu_pd(s + i, sin_poly4(th));
        }
        for (; i < n; ++i) {
            const double th = k2[i] * tau;
            const double z = th * th;
            double r = std::fma(z, C6, C5);
            r = std::fma(z, r, C4);
            r = std::fma(z, r, C3);
            r = std::fma(z, r, C2);
            r = std::fma(z, r, C1);
            c[i] = std::fma(z * z, r, std::fma(z, -0.5, 1.0));
            double rs = std::fma(z, S6, S5);
            rs = std::fma(z, rs, S4);
            rs = std::fma(z, rs, S3);
            rs = std::fma(z, rs, S2);
            rs = std::fma(z, rs, S1);
            s[i] = std::fma(th * z, rs, th);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double th = k2[i] * tau;
            c[i] = std::cos(th);
            s[i] = std::sin(th);
        }
    }
}

void rotate_fwd(std::size_t n, const double* c, const double* s, const double* in_re,
                const double* in_im, double* out_re, double* out_im) {
    std::size_t i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        const __m256d re = _mm256_loadu_pd(in_re + i);
        const __m256d im = _mm256_loadu_pd(in_im + i);
        const __m256d cv = _mm256_loadu_pd(c + i);
        const __m256d sv = _mm256_loadu_pd(s + i);
        _mm256_storeu_pd(out_re + i, _mm256_fmadd_pd(cv, re, _mm256_mul_pd(sv, im)));
        const __m256d t = _mm256_mul_pd(sv, re);
        _mm256_storeu_pd(out_im + i, _mm256_fmadd_pd(cv, im, _mm256_sub_pd(zero, t)));
    }
    for (; i < n; ++i) {
        const double re = in_re[i];
        const double im = in_im[i];
        out_re[i] = std::fma(c[i], re, s[i] * im);
        out_im[i] = std::fma(c[i], im, -(s[i] * re));
    }
}

void rotate_back_neg_i(std::size_t n, const double* c, const double* s,
                       const double* in_re, const double* in_im, double* out_re,
                       double* out_im) {
    std::size_t i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        const __m256d re = _mm256_loadu_pd(in_re + i);
        const __m256d im = _mm256_loadu_pd(in_im + i);
        const __m256d cv = _mm256_loadu_pd(c + i);
        const __m256d sv = _mm256_loadu_pd(s + i);
        _mm256_storeu_pd(out_re + i, _mm256_fmadd_pd(cv, im, _mm256_mul_pd(sv, re)));
        const __m256d t = _mm256_mul_pd(cv, re);
        _mm256_storeu_pd(out_im + i, _mm256_fmadd_pd(sv, im, _mm256_sub_pd(zero, t)));
    }
    for (; i < n; ++i) {
        const double re = in_re[i];
        const double im = in_im[i];
        out_re[i] = std::fma(c[i], im, s[i] * re);
        out_im[i] = std::fma(s[i], im, -(c[i] * re));
    }
}

double dot(std::size_t n, const double* a, const double* b) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(_mm256_add_pd(acc0, acc1)) + tail;
}

void axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void dense_matvec(std::size_t rows, std::size_t cols, const double* a, const double* x,
                  double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        __m256d acc = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4)
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc);
        double tail = 0.0;
        for (; c < cols; ++c) tail += row[c] * x[c];
        y[r] = hsum(acc) + tail;
    }
}

}  // namespace

const Table& avx2_table() {
    static const Table table{
        "avx2",          fused_sym_matvec, sym_quadform, phase_table,
        rotate_fwd,      rotate_back_neg_i, dot,         axpy,
        dense_matvec,
    };
    return table;
}

}  // namespace stargraph::kernels

#endif  // x86-64
