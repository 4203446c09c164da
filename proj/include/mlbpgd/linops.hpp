#pragma once

#include <memory>
#include <vector>

#include "mlbpgd/grid_vector.hpp"

namespace mlbpgd {

// Immutable forward operator. apply / apply_adjoint run the OpenMP kernels;
// the *_serial variants run the reference kernels and must agree bitwise.
class LinearOperatorHandle {
public:
    static LinearOperatorHandle identity(int n);
    static LinearOperatorHandle dense(int rows, int cols, std::vector<double> entries);
    static LinearOperatorHandle sparse_csr(int rows, int cols,
                                           std::vector<int> row_offsets,
                                           std::vector<int> col_indices,
                                           std::vector<double> values);
    // Zero-padded correlation with a square stencil on a side x side grid.
    static LinearOperatorHandle conv2d(std::vector<double> kernel, int kernel_dim,
                                       int grid_side);

    GridVector apply(const GridVector& x) const;
    GridVector apply_adjoint(const GridVector& y) const;
    GridVector apply_serial(const GridVector& x) const;
    GridVector apply_adjoint_serial(const GridVector& y) const;

    int rows() const;
    int cols() const;

    // Induced 1-norm (maximum absolute column sum).
    double max_abs_col_sum() const;
    // Per-row sums of absolute entries; zero entries flag dead rays.
    GridVector abs_row_sums() const;
    // Row-major materialization; supported for Dense and SparseCSR.
    std::vector<double> dense_entries() const;
    // Operator restricted to the given original-row indices (Dense/SparseCSR).
    LinearOperatorHandle keep_rows(const std::vector<int>& kept) const;

    struct Impl;  // storage variant, defined in linops.cpp

private:
    explicit LinearOperatorHandle(std::shared_ptr<const Impl> impl)
        : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Unnormalized-then-normalized Gaussian stencil, returned row-major dim x dim
// with sum exactly rescaled to 1.
std::vector<double> gaussian_psf(int dim, double sigma);

// Parallel-beam projector: one ray per (angle, detector bin), entries are
// ray/pixel intersection lengths from a Siddon-style traversal. Pixels are
// unit squares tiling [0, grid_side]^2 and the detector array spans the
// image width. Row index = angle * detectors + detector bin.
LinearOperatorHandle parallel_beam(int grid_side, const std::vector<double>& angles,
                                   int detectors);

struct FilteredOperator {
    LinearOperatorHandle op;
    std::vector<int> kept_rows;  // indices into the original row space
    int dropped = 0;
};

// Removes all-zero rows (rays missing the image). SparseCSR only.
FilteredOperator drop_zero_rows(const LinearOperatorHandle& a);

// Full-weighting prolongation/restriction pair with R = P^T. The 1D stencil
// per coarse node is (1/4, 1/2, 1/4); 2D is its tensor product. Sides must
// be 2^m - 1 so columns never truncate and each sums to 1.
class TransferPair {
public:
    // fine_len = 2^m - 1, applied independently to `batch` rows.
    static TransferPair one_d(int fine_len, int batch = 1);
    // square grids, fine side 2^m - 1.
    static TransferPair two_d(int fine_side);

    GridVector prolong(const GridVector& w) const;
    GridVector restrict_fine(const GridVector& x) const;
    GridVector prolong_serial(const GridVector& w) const;
    GridVector restrict_fine_serial(const GridVector& x) const;

    std::size_t fine_size() const;
    std::size_t coarse_size() const;
    int fine_side() const { return nf_; }
    int coarse_side() const { return nc_; }
    int batch() const { return batch_; }
    bool is_2d() const { return two_d_; }

    // max row sum of P; P is nonnegative so this is the infinity norm.
    double prolongation_inf_norm() const;

    // Fine indices t with P[t, j] > 0 for coarse index j.
    void column_support(std::size_t j, std::vector<std::size_t>& out) const;

private:
    TransferPair(bool is2d, int nf, int nc, int batch)
        : two_d_(is2d), nf_(nf), nc_(nc), batch_(batch) {}
    bool two_d_;
    int nf_, nc_, batch_;
};

} // namespace mlbpgd
