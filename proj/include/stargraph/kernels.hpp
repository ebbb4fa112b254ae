#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Data-parallel inner-loop kernels. Every kernel exists as a scalar
// reference implementation and (on x86-64) an AVX2+FMA variant; the active
// table is selected at runtime from CPUID or pinned via select(). All
// kernels are deterministic: the summation order is fixed per variant, so
// identical inputs produce bit-identical outputs for a given table.
namespace stargraph::kernels {

// Symmetric matrices are stored as the packed upper triangle, row-major:
// row i holds columns i..n-1 contiguously, offset(i) = i*n - i*(i-1)/2.
inline std::size_t packed_size(std::size_t n) { return n * (n + 1) / 2; }
inline std::size_t packed_row_offset(std::size_t n, std::size_t i) {
    return i * n - i * (i - 1) / 2;
}

// y_re/y_im += contributions of rows [row0,row1) of sum_a coeff[a]*A[a],
// split into the owned-row part (written to y) and the strictly-lower
// "mirror" part (accumulated into scatter, which spans the full vector).
// Fixed row blocks make multi-threaded results independent of the thread
// count: callers give each block a private scatter buffer and reduce the
// buffers in block order.
using FusedSymMatvecFn = void (*)(std::size_t n, std::size_t nmat,
                                  const double* const* mats, const double* coeffs,
                                  const double* x_re, const double* x_im,
                                  double* y_re, double* y_im,
                                  double* scatter_re, double* scatter_im,
                                  std::size_t row0, std::size_t row1);

// Real quadratic form x^T A x + y^T A y over a packed symmetric A
// (equals C^dag A C for C = x + i y when A is real symmetric).
using SymQuadFormFn = double (*)(std::size_t n, const double* mat,
                                 const double* x_re, const double* x_im);

// c[i] = cos(k2[i]*tau), s[i] = sin(k2[i]*tau). k2 must be ascending so the
// fast polynomial path can be chosen from k2[n-1] alone.
using PhaseTableFn = void (*)(std::size_t n, const double* k2, double tau,
                              double* c, double* s);

// (re,im) <- e^{-i theta} * (re,im) elementwise given c=cos(theta), s=sin(theta).
using RotateFn = void (*)(std::size_t n, const double* c, const double* s,
                          const double* in_re, const double* in_im,
                          double* out_re, double* out_im);

// out = -i * e^{+i theta} * (re,im): the closing twist of the
// interaction-picture right-hand side.
using RotateBackNegIFn = RotateFn;

using DotFn = double (*)(std::size_t n, const double* a, const double* b);

// y[i] += a*x[i]
using AxpyFn = void (*)(std::size_t n, double a, const double* x, double* y);

// Dense row-major rectangular matvec: y[r] = sum_c A[r*cols+c] * x[c].
using DenseMatvecFn = void (*)(std::size_t rows, std::size_t cols,
                               const double* a, const double* x, double* y);

struct Table {
    const char* name;
    FusedSymMatvecFn fused_sym_matvec;
    SymQuadFormFn sym_quadform;
    PhaseTableFn phase_table;
    RotateFn rotate_fwd;
    RotateBackNegIFn rotate_back_neg_i;
    DotFn dot;
    AxpyFn axpy;
    DenseMatvecFn dense_matvec;
};

const Table& scalar_table();
bool avx2_available();
#if defined(__x86_64__) || defined(_M_X64)
const Table& avx2_table();
#endif

// "auto" | "scalar" | "avx2"; throws ConfigError for unknown names or an
// unavailable instruction set.
const Table& resolve(const std::string& name);

// Process-wide active table (defaults to the auto choice).
const Table& active();
void select(const std::string& name);

}  // namespace stargraph::kernels
