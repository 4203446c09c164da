#pragma once

#include <cstdint>

// Hot loops shared by the linear operators. Every kernel is written in
// gather form: each output element is produced by exactly one iteration of
// the outer loop, so the OpenMP variants schedule that loop across threads
// without reductions and produce bit-identical results to the serial twins
// in kernels::serial, at any thread count.

namespace mlbpgd::kernels {

// y = A x, A row-major rows x cols.
void dense_matvec(const double* a, int rows, int cols, const double* x, double* y);

// x = A^T y, gathering down each column of the row-major A.
void dense_matvec_adj(const double* a, int rows, int cols, const double* y, double* x);

// y = A x for CSR storage. The adjoint is served by calling this with the
// stored transpose.
void csr_matvec(const int* row_off, const int* col_idx, const double* val,
                int rows, const double* x, double* y);

// Correlation of a side x side image with a k x k stencil, zero padded.
// The adjoint is the same routine with the stencil flipped in both axes.
void stencil_correlate(const double* kern, int k, int side, const double* x, double* y);

// Full-weighting transfer pair, 1D stencil (1/4, 1/2, 1/4) per coarse node,
// applied independently to `batch` contiguous rows. nf = 2*nc + 1.
void prolong_1d(const double* w, int nc, int batch, double* y);
void restrict_1d(const double* x, int nc, int batch, double* w);

// Tensor-product variant on square grids, fine side 2*sc + 1.
void prolong_2d(const double* w, int sc, double* y);
void restrict_2d(const double* x, int sc, double* w);

namespace serial {
void dense_matvec(const double* a, int rows, int cols, const double* x, double* y);
void dense_matvec_adj(const double* a, int rows, int cols, const double* y, double* x);
void csr_matvec(const int* row_off, const int* col_idx, const double* val,
                int rows, const double* x, double* y);
void stencil_correlate(const double* kern, int k, int side, const double* x, double* y);
void prolong_1d(const double* w, int nc, int batch, double* y);
void restrict_1d(const double* x, int nc, int batch, double* w);
void prolong_2d(const double* w, int sc, double* y);
void restrict_2d(const double* x, int sc, double* w);
} // namespace serial

} // namespace mlbpgd::kernels
