#include "stargraph/kernels.hpp"

#include <cmath>

namespace stargraph::kernels {
namespace {

// Polynomial sin/cos on |x| <= pi/4 (fdlibm kernel coefficients). Written
// with explicit fma so the scalar and AVX2 variants round identically.
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

inline double sin_poly(double x) {
    double z = x * x;
    double r = std::fma(z, S6, S5);
    r = std::fma(z, r, S4);
    r = std::fma(z, r, S3);
    r = std::fma(z, r, S2);
    r = std::fma(z, r, S1);
    return std::fma(x * z, r, x);
}

inline double cos_poly(double x) {
    double z = x * x;
    double r = std::fma(z, C6, C5);
    r = std::fma(z, r, C4);
    r = std::fma(z, r, C3);
    r = std::fma(z, r, C2);
    r = std::fma(z, r, C1);
    // 1 - z/2 + z^2*r
    return std::fma(z * z, r, std::fma(z, -0.5, 1.0));
}

constexpr double kPolyRange = 0.78539816339744830962;  // pi/4

void fused_sym_matvec(std::size_t n, std::size_t nmat, const double* const* mats,
                      const double* coeffs, const double* x_re, const double* x_im,
                      double* y_re, double* y_im, double* scatter_re, double* scatter_im,
                      std::size_t row0, std::size_t row1) {
    for (std::size_t i = row0; i < row1; ++i) {
        const std::size_t off = packed_row_offset(n, i) - i;
        const double xi_re = x_re[i];
        const double xi_im = x_im[i];
        double acc_re = 0.0;
        double acc_im = 0.0;
        // diagonal
        {
            double a = 0.0;
            for (std::size_t m = 0; m < nmat; ++m) a += coeffs[m] * mats[m][off + i];
            acc_re = a * xi_re;
            acc_im = a * xi_im;
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            double a = 0.0;
            for (std::size_t m = 0; m < nmat; ++m) a += coeffs[m] * mats[m][off + j];
            acc_re += a * x_re[j];
            acc_im += a * x_im[j];
            scatter_re[j] += a * xi_re;
            scatter_im[j] += a * xi_im;
        }
        y_re[i] = acc_re;
        y_im[i] = acc_im;
    }
}

double sym_quadform(std::size_t n, const double* mat, const double* x_re,
                    const double* x_im) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = mat + packed_row_offset(n, i) - i;
        double dot_re = 0.0;
        double dot_im = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            dot_re += row[j] * x_re[j];
            dot_im += row[j] * x_im[j];
        }
        total += row[i] * (x_re[i] * x_re[i] + x_im[i] * x_im[i]) +
                 2.0 * (x_re[i] * dot_re + x_im[i] * dot_im);
    }
    return total;
}

void phase_table(std::size_t n, const double* k2, double tau, double* c, double* s) {
    if (n == 0) return;
    const double theta_max = std::abs(tau) * k2[n - 1];
    if (theta_max <= kPolyRange) {
        for (std::size_t i = 0; i < n; ++i) {
            const double th = k2[i] * tau;
            c[i] = cos_poly(th);
            s[i] = sin_poly(th);
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
    for (std::size_t i = 0; i < n; ++i) {
        const double re = in_re[i];
        const double im = in_im[i];
        out_re[i] = std::fma(c[i], re, s[i] * im);
        out_im[i] = std::fma(c[i], im, -s[i] * re);
    }
}

void rotate_back_neg_i(std::size_t n, const double* c, const double* s,
                       const double* in_re, const double* in_im, double* out_re,
                       double* out_im) {
    // -i e^{+i theta} (re + i im): out_re = c*im + s*re, out_im = s*im - c*re
    for (std::size_t i = 0; i < n; ++i) {
        const double re = in_re[i];
        const double im = in_im[i];
        out_re[i] = std::fma(c[i], im, s[i] * re);
        out_im[i] = std::fma(s[i], im, -c[i] * re);
    }
}

double dot(std::size_t n, const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void dense_matvec(std::size_t rows, std::size_t cols, const double* a, const double* x,
                  double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table table{
        "scalar",        fused_sym_matvec, sym_quadform, phase_table,
        rotate_fwd,      rotate_back_neg_i, dot,         axpy,
        dense_matvec,
    };
    return table;
}

}  // namespace stargraph::kernels
