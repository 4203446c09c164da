#include "mlbpgd/linops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlbpgd/kernels.hpp"

namespace mlbpgd {

namespace {
enum class OpKind { Dense, Csr, Conv };
}

struct LinearOperatorHandle::Impl {
    OpKind kind;
    int rows = 0, cols = 0;

    // Dense
    std::vector<double> entries;

    // Csr, plus its transpose so the adjoint is also a row-parallel gather.
    std::vector<int> row_off, col_idx;
    std::vector<double> val;
    std::vector<int> trow_off, tcol_idx;
    std::vector<double> tval;

    // Conv
    std::vector<double> kern, kern_flipped;
    int kdim = 0, side = 0;
};

namespace {

void check_len(std::size_t got, int want, const char* where) {
    if (got != static_cast<std::size_t>(want))
        throw ShapeError(std::string(where) + ": dimension mismatch");
}

void build_transpose(LinearOperatorHandle::Impl& im) {
    const int nnz = static_cast<int>(im.val.size());
    im.trow_off.assign(im.cols + 1, 0);
    for (int p = 0; p < nnz; ++p) ++im.trow_off[im.col_idx[p] + 1];
    for (int j = 0; j < im.cols; ++j) im.trow_off[j + 1] += im.trow_off[j];
    im.tcol_idx.resize(nnz);
    im.tval.resize(nnz);
    std::vector<int> cursor(im.trow_off.begin(), im.trow_off.end() - 1);
    for (int i = 0; i < im.rows; ++i)
        for (int p = im.row_off[i]; p < im.row_off[i + 1]; ++p) {
            const int q = cursor[im.col_idx[p]]++;
            im.tcol_idx[q] = i;
            im.tval[q] = im.val[p];
        }
}

} // namespace

LinearOperatorHandle LinearOperatorHandle::identity(int n) {
    if (n <= 0) throw ArgError("identity: size must be positive");
    std::vector<int> off(n + 1), idx(n);
    std::vector<double> v(n, 1.0);
    std::iota(off.begin(), off.end(), 0);
    std::iota(idx.begin(), idx.end(), 0);
    return sparse_csr(n, n, std::move(off), std::move(idx), std::move(v));
}

LinearOperatorHandle LinearOperatorHandle::dense(int rows, int cols,
                                                 std::vector<double> entries) {
    if (rows <= 0 || cols <= 0) throw ArgError("dense: sides must be positive");
    check_len(entries.size(), rows * cols, "dense entries");
    auto im = std::make_shared<Impl>();
    im->kind = OpKind::Dense;
    im->rows = rows;
    im->cols = cols;
    im->entries = std::move(entries);
    return LinearOperatorHandle(std::move(im));
}

LinearOperatorHandle LinearOperatorHandle::sparse_csr(int rows, int cols,
                                                      std::vector<int> row_offsets,
                                                      std::vector<int> col_indices,
                                                      std::vector<double> values) {
    if (rows <= 0 || cols <= 0) throw ArgError("sparse_csr: sides must be positive");
    if (row_offsets.size() != static_cast<std::size_t>(rows) + 1 ||
        row_offsets.front() != 0 ||
        row_offsets.back() != static_cast<int>(values.size()) ||
        col_indices.size() != values.size())
        throw ShapeError("sparse_csr: inconsistent structure");
    for (int j : col_indices)
        if (j < 0 || j >= cols) throw ShapeError("sparse_csr: column index out of range");
    auto im = std::make_shared<Impl>();
    im->kind = OpKind::Csr;
    im->rows = rows;
    im->cols = cols;
    im->row_off = std::move(row_offsets);
    im->col_idx = std::move(col_indices);
    im->val = std::move(values);
    build_transpose(*im);
    return LinearOperatorHandle(std::move(im));
}

LinearOperatorHandle LinearOperatorHandle::conv2d(std::vector<double> kernel,
                                                  int kernel_dim, int grid_side) {
    if (kernel_dim <= 0 || kernel_dim % 2 == 0)
        throw ArgError("conv2d: kernel dimension must be odd and positive");
    if (grid_side <= 0) throw ArgError("conv2d: grid side must be positive");
    check_len(kernel.size(), kernel_dim * kernel_dim, "conv2d kernel");
    auto im = std::make_shared<Impl>();
    im->kind = OpKind::Conv;
    im->rows = im->cols = grid_side * grid_side;
    im->kdim = kernel_dim;
    im->side = grid_side;
    im->kern_flipped.resize(kernel.size());
    for (int u = 0; u < kernel_dim; ++u)
        for (int v = 0; v < kernel_dim; ++v)
            im->kern_flipped[static_cast<std::size_t>(u) * kernel_dim + v] =
                kernel[static_cast<std::size_t>(kernel_dim - 1 - u) * kernel_dim
                       + (kernel_dim - 1 - v)];
    im->kern = std::move(kernel);
    return LinearOperatorHandle(std::move(im));
}

int LinearOperatorHandle::rows() const { return impl_->rows; }
int LinearOperatorHandle::cols() const { return impl_->cols; }

namespace {

template <bool Serial>
GridVector do_apply(const LinearOperatorHandle::Impl& im, const GridVector& x,
                    bool adjoint) {
    const int out_n = adjoint ? im.cols : im.rows;
    const int in_n = adjoint ? im.rows : im.cols;
    check_len(x.size(), in_n, adjoint ? "apply_adjoint" : "apply");
    GridVector y(static_cast<std::size_t>(out_n));
    namespace K = kernels;
    switch (im.kind) {
    case OpKind::Dense:
        if (!adjoint) {
            if constexpr (Serial)
                K::serial::dense_matvec(im.entries.data(), im.rows, im.cols, x.data.data(), y.data.data());
            else
                K::dense_matvec(im.entries.data(), im.rows, im.cols, x.data.data(), y.data.data());
        } else {
            if constexpr (Serial)
                K::serial::dense_matvec_adj(im.entries.data(), im.rows, im.cols, x.data.data(), y.data.data());
            else
                K::dense_matvec_adj(im.entries.data(), im.rows, im.cols, x.data.data(), y.data.data());
        }
        break;
    case OpKind::Csr: {
        const auto* off = adjoint ? im.trow_off.data() : im.row_off.data();
        const auto* idx = adjoint ? im.tcol_idx.data() : im.col_idx.data();
        const auto* val = adjoint ? im.tval.data() : im.val.data();
        if constexpr (Serial)
            K::serial::csr_matvec(off, idx, val, out_n, x.data.data(), y.data.data());
        else
            K::csr_matvec(off, idx, val, out_n, x.data.data(), y.data.data());
        break;
    }
    case OpKind::Conv: {
        const auto* kern = adjoint ? im.kern_flipped.data() : im.kern.data();
        if constexpr (Serial)
            K::serial::stencil_correlate(kern, im.kdim, im.side, x.data.data(), y.data.data());
        else
            K::stencil_correlate(kern, im.kdim, im.side, x.data.data(), y.data.data());
        y.side = im.side;
        break;
    }
    }
    return y;
}

} // namespace

GridVector LinearOperatorHandle::apply(const GridVector& x) const {
    return do_apply<false>(*impl_, x, false);
}
GridVector LinearOperatorHandle::apply_adjoint(const GridVector& y) const {
    return do_apply<false>(*impl_, y, true);
}
GridVector LinearOperatorHandle::apply_serial(const GridVector& x) const {
    return do_apply<true>(*impl_, x, false);
}
GridVector LinearOperatorHandle::apply_adjoint_serial(const GridVector& y) const {
    return do_apply<true>(*impl_, y, true);
}

double LinearOperatorHandle::max_abs_col_sum() const {
    const Impl& im = *impl_;
    std::vector<double> cs(im.cols, 0.0);
    switch (im.kind) {
    case OpKind::Dense:
        for (int i = 0; i < im.rows; ++i)
            for (int j = 0; j < im.cols; ++j)
                cs[j] += std::fabs(im.entries[static_cast<std::size_t>(i) * im.cols + j]);
        break;
    case OpKind::Csr:
        for (std::size_t p = 0; p < im.val.size(); ++p)
            cs[im.col_idx[p]] += std::fabs(im.val[p]);
        break;
    case OpKind::Conv: {
        // Column sum of pixel (r, c): stencil weights whose output lands on
        // the grid. Interior pixels see the full stencil.
        const int h = (im.kdim - 1) / 2;
        for (int r = 0; r < im.side; ++r)
            for (int c = 0; c < im.side; ++c) {
                double s = 0.0;
                for (int u = 0; u < im.kdim; ++u)
                    for (int v = 0; v < im.kdim; ++v) {
                        const int rr = r - (u - h), cc = c - (v - h);
                        if (rr < 0 || rr >= im.side || cc < 0 || cc >= im.side) continue;
                        s += std::fabs(im.kern[static_cast<std::size_t>(u) * im.kdim + v]);
                    }
                cs[static_cast<std::size_t>(r) * im.side + c] = s;
            }
        break;
    }
    }
    double m = 0.0;
    for (double v : cs) m = std::max(m, v);
    return m;
}

GridVector LinearOperatorHandle::abs_row_sums() const {
    const Impl& im = *impl_;
    GridVector rs(static_cast<std::size_t>(im.rows), 0.0);
    switch (im.kind) {
    case OpKind::Dense:
        for (int i = 0; i < im.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < im.cols; ++j)
                s += std::fabs(im.entries[static_cast<std::size_t>(i) * im.cols + j]);
            rs[i] = s;
        }
        break;
    case OpKind::Csr:
        for (int i = 0; i < im.rows; ++i) {
            double s = 0.0;
            for (int p = im.row_off[i]; p < im.row_off[i + 1]; ++p)
                s += std::fabs(im.val[p]);
            rs[i] = s;
        }
        break;
    case OpKind::Conv: {
        GridVector ones(static_cast<std::size_t>(im.cols), 1.0);
        std::vector<double> ak(im.kern.size());
        for (std::size_t i = 0; i < ak.size(); ++i) ak[i] = std::fabs(im.kern[i]);
        kernels::serial::stencil_correlate(ak.data(), im.kdim, im.side,
                                           ones.data.data(), rs.data.data());
        break;
    }
    }
    return rs;
}

std::vector<double> LinearOperatorHandle::dense_entries() const {
    const Impl& im = *impl_;
    if (im.kind == OpKind::Dense) return im.entries;
    if (im.kind != OpKind::Csr)
        throw ArgError("dense_entries: only Dense and SparseCSR are materializable");
    std::vector<double> e(static_cast<std::size_t>(im.rows) * im.cols, 0.0);
    for (int i = 0; i < im.rows; ++i)
        for (int p = im.row_off[i]; p < im.row_off[i + 1]; ++p)
            e[static_cast<std::size_t>(i) * im.cols + im.col_idx[p]] = im.val[p];
    return e;
}

std::vector<double> gaussian_psf(int dim, double sigma) {
    if (dim <= 0 || dim % 2 == 0) throw ArgError("gaussian_psf: dim must be odd");
    if (!(sigma > 0.0)) throw ArgError("gaussian_psf: sigma must be positive");
    const int h = (dim - 1) / 2;
    std::vector<double> k(static_cast<std::size_t>(dim) * dim);
    double s = 0.0;
    for (int i = -h; i <= h; ++i)
        for (int j = -h; j <= h; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            k[static_cast<std::size_t>(i + h) * dim + (j + h)] = v;
            s += v;
        }
    for (double& v : k) v /= s;
    return k;
}

LinearOperatorHandle parallel_beam(int grid_side, const std::vector<double>& angles,
                                   int detectors) {
    if (grid_side < 1 || detectors < 1) throw ArgError("parallel_beam: bad sizes");
    if (angles.empty()) throw ArgError("parallel_beam: need at least one angle");

    const double s = static_cast<double>(grid_side);
    const int rows = static_cast<int>(angles.size()) * detectors;
    std::vector<int> row_off{0};
    std::vector<int> col_idx;
    std::vector<double> val;
    row_off.reserve(rows + 1);

    std::vector<double> cross;
    std::vector<std::pair<int, double>> hits;

    for (double ang : angles) {
        const double dx = std::cos(ang), dy = std::sin(ang);
        const double ux = -dy, uy = dx;
        for (int k = 0; k < detectors; ++k) {
            const double t = (k + 0.5 - 0.5 * detectors) * (s / detectors);
            const double px = 0.5 * s + t * ux;
            const double py = 0.5 * s + t * uy;

            // Clip the infinite ray to [0,s]^2 with the slab method.
            double tmin = -1e30, tmax = 1e30;
            bool empty = false;
            auto slab = [&](double p, double d) {
                if (std::fabs(d) < 1e-14) {
                    if (p <= 0.0 || p >= s) empty = true;
                    return;
                }
                double a = (0.0 - p) / d, b = (s - p) / d;
                if (a > b) std::swap(a, b);
                tmin = std::max(tmin, a);
                tmax = std::min(tmax, b);
            };
            slab(px, dx);
            slab(py, dy);
            if (empty || tmax - tmin <= 1e-12) {
                row_off.push_back(static_cast<int>(val.size()));
                continue;
            }

            // Parameter values where the ray crosses a pixel edge.
            cross.clear();
            cross.push_back(tmin);
            cross.push_back(tmax);
            auto edge_crossings = [&](double p, double d) {
                if (std::fabs(d) < 1e-14) return;
                for (int v = 0; v <= grid_side; ++v) {
                    const double tt = (v - p) / d;
                    if (tt > tmin + 1e-12 && tt < tmax - 1e-12) cross.push_back(tt);
                }
            };
            edge_crossings(px, dx);
            edge_crossings(py, dy);
            std::sort(cross.begin(), cross.end());

            hits.clear();
            for (std::size_t i = 0; i + 1 < cross.size(); ++i) {
                const double len = cross[i + 1] - cross[i];
                if (len <= 1e-12) continue;
                const double mid = 0.5 * (cross[i] + cross[i + 1]);
                int cx = static_cast<int>(std::floor(px + mid * dx));
                int cy = static_cast<int>(std::floor(py + mid * dy));
                cx = std::clamp(cx, 0, grid_side - 1);
                cy = std::clamp(cy, 0, grid_side - 1);
                hits.emplace_back(cy * grid_side + cx, len);
            }
            std::sort(hits.begin(), hits.end());
            for (std::size_t i = 0; i < hits.size(); ++i) {
                if (!col_idx.empty() &&
                    static_cast<int>(val.size()) > row_off.back() &&
                    col_idx.back() == hits[i].first) {
                    val.back() += hits[i].second;
                } else {
                    col_idx.push_back(hits[i].first);
                    val.push_back(hits[i].second);
                }
            }
            row_off.push_back(static_cast<int>(val.size()));
        }
    }
    return LinearOperatorHandle::sparse_csr(rows, grid_side * grid_side,
                                            std::move(row_off), std::move(col_idx),
                                            std::move(val));
}

LinearOperatorHandle LinearOperatorHandle::keep_rows(const std::vector<int>& kept) const {
    const Impl& im = *impl_;
    if (kept.empty()) throw ArgError("keep_rows: no rows left");
    for (int i : kept)
        if (i < 0 || i >= im.rows) throw ShapeError("keep_rows: row index out of range");
    if (im.kind == OpKind::Dense) {
        std::vector<double> e;
        e.reserve(kept.size() * static_cast<std::size_t>(im.cols));
        for (int i : kept)
            e.insert(e.end(), im.entries.begin() + static_cast<std::size_t>(i) * im.cols,
                     im.entries.begin() + static_cast<std::size_t>(i + 1) * im.cols);
        return dense(static_cast<int>(kept.size()), im.cols, std::move(e));
    }
    if (im.kind != OpKind::Csr)
        throw ArgError("keep_rows: only Dense and SparseCSR are sliceable");
    std::vector<int> off{0}, idx;
    std::vector<double> val;
    for (int i : kept) {
        idx.insert(idx.end(), im.col_idx.begin() + im.row_off[i],
                   im.col_idx.begin() + im.row_off[i + 1]);
        val.insert(val.end(), im.val.begin() + im.row_off[i],
                   im.val.begin() + im.row_off[i + 1]);
        off.push_back(static_cast<int>(val.size()));
    }
    return sparse_csr(static_cast<int>(kept.size()), im.cols, std::move(off),
                      std::move(idx), std::move(val));
}

FilteredOperator drop_zero_rows(const LinearOperatorHandle& a) {
    GridVector rs = a.abs_row_sums();
    std::vector<int> kept;
    kept.reserve(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
        if (rs[i] > 0.0) kept.push_back(static_cast<int>(i));
    const int dropped = a.rows() - static_cast<int>(kept.size());
    if (kept.empty()) throw ArgError("drop_zero_rows: operator is identically zero");
    if (dropped == 0) return {a, std::move(kept), 0};
    LinearOperatorHandle sliced = a.keep_rows(kept);
    return {std::move(sliced), std::move(kept), dropped};
}

namespace {

bool is_pow2_minus_1(int n) {
    if (n < 3) return false;
    const unsigned m = static_cast<unsigned>(n) + 1u;
    return (m & (m - 1u)) == 0u;
}

} // namespace

TransferPair TransferPair::one_d(int fine_len, int batch) {
    if (!is_pow2_minus_1(fine_len))
        throw ShapeError("transfer: fine length must be 2^m - 1 with m >= 2");
    if (batch < 1) throw ArgError("transfer: batch must be positive");
    return {false, fine_len, (fine_len - 1) / 2, batch};
}

TransferPair TransferPair::two_d(int fine_side) {
    if (!is_pow2_minus_1(fine_side))
        throw ShapeError("transfer: fine side must be 2^m - 1 with m >= 2");
    return {true, fine_side, (fine_side - 1) / 2, 1};
}

std::size_t TransferPair::fine_size() const {
    return two_d_ ? static_cast<std::size_t>(nf_) * nf_
                  : static_cast<std::size_t>(nf_) * batch_;
}

std::size_t TransferPair::coarse_size() const {
    return two_d_ ? static_cast<std::size_t>(nc_) * nc_
                  : static_cast<std::size_t>(nc_) * batch_;
}

namespace {

template <bool Serial>
GridVector transfer_run(const TransferPair& t, const GridVector& in, bool down) {
    namespace K = kernels;
    check_len(in.size(), static_cast<int>(down ? t.fine_size() : t.coarse_size()),
              down ? "restrict" : "prolong");
    GridVector out(down ? t.coarse_size() : t.fine_size());
    if (t.is_2d()) {
        out.side = down ? t.coarse_side() : t.fine_side();
        if (down) {
            if constexpr (Serial) K::serial::restrict_2d(in.data.data(), t.coarse_side(), out.data.data());
            else K::restrict_2d(in.data.data(), t.coarse_side(), out.data.data());
        } else {
            if constexpr (Serial) K::serial::prolong_2d(in.data.data(), t.coarse_side(), out.data.data());
            else K::prolong_2d(in.data.data(), t.coarse_side(), out.data.data());
        }
    } else {
        if (down) {
            if constexpr (Serial) K::serial::restrict_1d(in.data.data(), t.coarse_side(), t.batch(), out.data.data());
            else K::restrict_1d(in.data.data(), t.coarse_side(), t.batch(), out.data.data());
        } else {
            if constexpr (Serial) K::serial::prolong_1d(in.data.data(), t.coarse_side(), t.batch(), out.data.data());
            else K::prolong_1d(in.data.data(), t.coarse_side(), t.batch(), out.data.data());
        }
    }
    return out;
}

} // namespace

GridVector TransferPair::prolong(const GridVector& w) const {
    return transfer_run<false>(*this, w, false);
}
GridVector TransferPair::restrict_fine(const GridVector& x) const {
    return transfer_run<false>(*this, x, true);
}
GridVector TransferPair::prolong_serial(const GridVector& w) const {
    return transfer_run<true>(*this, w, false);
}
GridVector TransferPair::restrict_fine_serial(const GridVector& x) const {
    return transfer_run<true>(*this, x, true);
}

double TransferPair::prolongation_inf_norm() const {
    GridVector ones(coarse_size(), 1.0);
    return norm_linf(prolong(ones));
}

void TransferPair::column_support(std::size_t j, std::vector<std::size_t>& out) const {
    out.clear();
    if (j >= coarse_size()) throw ShapeError("column_support: index out of range");
    if (two_d_) {
        const std::size_t jr = j / nc_, jc = j % nc_;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                out.push_back((2 * jr + a) * nf_ + (2 * jc + b));
    } else {
        const std::size_t b = j / nc_, jc = j % nc_;
        for (int a = 0; a < 3; ++a) out.push_back(b * nf_ + 2 * jc + a);
    }
}

} // namespace mlbpgd
