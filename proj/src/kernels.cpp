#include "mlbpgd/kernels.hpp"

#include <cstddef>

#ifdef _OPENMP
#define MLBPGD_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#else
#define MLBPGD_PARALLEL_FOR
#endif

namespace mlbpgd::kernels {

namespace {

inline double dense_row_dot(const double* a, int cols, const double* x, int i) {
    const double* row = a + static_cast<std::size_t>(i) * cols;
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += row[j] * x[j];
    return s;
}

inline double dense_col_dot(const double* a, int rows, int cols, const double* y, int j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += a[static_cast<std::size_t>(i) * cols + j] * y[i];
    return s;
}

inline double csr_row_dot(const int* row_off, const int* col_idx, const double* val,
                          const double* x, int i) {
    double s = 0.0;
    for (int p = row_off[i]; p < row_off[i + 1]; ++p) s += val[p] * x[col_idx[p]];
    return s;
}

inline double correlate_at(const double* kern, int k, int side, const double* x,
                           int r, int c) {
    const int h = (k - 1) / 2;
    double s = 0.0;
    for (int u = 0; u < k; ++u) {
        const int rr = r + u - h;
        if (rr < 0 || rr >= side) continue;
        const double* xrow = x + static_cast<std::size_t>(rr) * side;
        const double* krow = kern + static_cast<std::size_t>(u) * k;
        for (int v = 0; v < k; ++v) {
            const int cc = c + v - h;
            if (cc < 0 || cc >= side) continue;
            s += krow[v] * xrow[cc];
        }
    }
    return s;
}

// Coarse nodes feeding fine index f along one axis, with their stencil
// weights. Odd f sits on top of one coarse node (weight 1/2); even f is
// straddled by up to two (weight 1/4 each).
inline int axis_sources(int f, int nc, int js[2], double ws[2]) {
    if (f & 1) {
        js[0] = (f - 1) / 2;
        ws[0] = 0.5;
        return 1;
    }
    int n = 0;
    const int j = f / 2;
    if (j < nc) { js[n] = j; ws[n] = 0.25; ++n; }
    if (j >= 1) { js[n] = j - 1; ws[n] = 0.25; ++n; }
    return n;
}

inline double prolong_at(const double* w, int nc, int f) {
    int js[2];
    double ws[2];
    const int m = axis_sources(f, nc, js, ws);
    double s = 0.0;
    for (int t = 0; t < m; ++t) s += ws[t] * w[js[t]];
    return s;
}

inline double restrict_at(const double* x, int j) {
    return 0.25 * x[2 * j] + 0.5 * x[2 * j + 1] + 0.25 * x[2 * j + 2];
}

inline double prolong2_at(const double* w, int sc, int fr, int fc) {
    int jr[2], jc[2];
    double wr[2], wc[2];
    const int mr = axis_sources(fr, sc, jr, wr);
    const int mc = axis_sources(fc, sc, jc, wc);
    double s = 0.0;
    for (int a = 0; a < mr; ++a)
        for (int b = 0; b < mc; ++b)
            s += wr[a] * wc[b] * w[static_cast<std::size_t>(jr[a]) * sc + jc[b]];
    return s;
}

inline double restrict2_at(const double* x, int sf, int jr, int jc) {
    static const double w1[3] = {0.25, 0.5, 0.25};
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double* row = x + static_cast<std::size_t>(2 * jr + a) * sf + 2 * jc;
        s += w1[a] * (0.25 * row[0] + 0.5 * row[1] + 0.25 * row[2]);
    }
    return s;
}

} // namespace

void dense_matvec(const double* a, int rows, int cols, const double* x, double* y) {
MLBPGD_PARALLEL_FOR
    for (int i = 0; i < rows; ++i) y[i] = dense_row_dot(a, cols, x, i);
}

void dense_matvec_adj(const double* a, int rows, int cols, const double* y, double* x) {
MLBPGD_PARALLEL_FOR
    for (int j = 0; j < cols; ++j) x[j] = dense_col_dot(a, rows, cols, y, j);
}

void csr_matvec(const int* row_off, const int* col_idx, const double* val,
                int rows, const double* x, double* y) {
MLBPGD_PARALLEL_FOR
    for (int i = 0; i < rows; ++i) y[i] = csr_row_dot(row_off, col_idx, val, x, i);
}

void stencil_correlate(const double* kern, int k, int side, const double* x, double* y) {
MLBPGD_PARALLEL_FOR
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            y[static_cast<std::size_t>(r) * side + c] = correlate_at(kern, k, side, x, r, c);
}

void prolong_1d(const double* w, int nc, int batch, double* y) {
    const int nf = 2 * nc + 1;
MLBPGD_PARALLEL_FOR
    for (int b = 0; b < batch; ++b) {
        const double* wb = w + static_cast<std::size_t>(b) * nc;
        double* yb = y + static_cast<std::size_t>(b) * nf;
        for (int f = 0; f < nf; ++f) yb[f] = prolong_at(wb, nc, f);
    }
}

void restrict_1d(const double* x, int nc, int batch, double* w) {
    const int nf = 2 * nc + 1;
MLBPGD_PARALLEL_FOR
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + static_cast<std::size_t>(b) * nf;
        double* wb = w + static_cast<std::size_t>(b) * nc;
        for (int j = 0; j < nc; ++j) wb[j] = restrict_at(xb, j);
    }
}

void prolong_2d(const double* w, int sc, double* y) {
    const int sf = 2 * sc + 1;
MLBPGD_PARALLEL_FOR
    for (int fr = 0; fr < sf; ++fr)
        for (int fc = 0; fc < sf; ++fc)
            y[static_cast<std::size_t>(fr) * sf + fc] = prolong2_at(w, sc, fr, fc);
}

void restrict_2d(const double* x, int sc, double* w) {
    const int sf = 2 * sc + 1;
MLBPGD_PARALLEL_FOR
    for (int jr = 0; jr < sc; ++jr)
        for (int jc = 0; jc < sc; ++jc)
            w[static_cast<std::size_t>(jr) * sc + jc] = restrict2_at(x, sf, jr, jc);
}

namespace serial {

void dense_matvec(const double* a, int rows, int cols, const double* x, double* y) {
    for (int i = 0; i < rows; ++i) y[i] = dense_row_dot(a, cols, x, i);
}

void dense_matvec_adj(const double* a, int rows, int cols, const double* y, double* x) {
    for (int j = 0; j < cols; ++j) x[j] = dense_col_dot(a, rows, cols, y, j);
}

void csr_matvec(const int* row_off, const int* col_idx, const double* val,
                int rows, const double* x, double* y) {
    for (int i = 0; i < rows; ++i) y[i] = csr_row_dot(row_off, col_idx, val, x, i);
}

void stencil_correlate(const double* kern, int k, int side, const double* x, double* y) {
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            y[static_cast<std::size_t>(r) * side + c] = correlate_at(kern, k, side, x, r, c);
}

void prolong_1d(const double* w, int nc, int batch, double* y) {
    const int nf = 2 * nc + 1;
    for (int b = 0; b < batch; ++b) {
        const double* wb = w + static_cast<std::size_t>(b) * nc;
        double* yb = y + static_cast<std::size_t>(b) * nf;
        for (int f = 0; f < nf; ++f) yb[f] = prolong_at(wb, nc, f);
    }
}

void restrict_1d(const double* x, int nc, int batch, double* w) {
    const int nf = 2 * nc + 1;
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + static_cast<std::size_t>(b) * nf;
        double* wb = w + static_cast<std::size_t>(b) * nc;
        for (int j = 0; j < nc; ++j) wb[j] = restrict_at(xb, j);
    }
}

void prolong_2d(const double* w, int sc, double* y) {
    const int sf = 2 * sc + 1;
    for (int fr = 0; fr < sf; ++fr)
        for (int fc = 0; fc < sf; ++fc)
            y[static_cast<std::size_t>(fr) * sf + fc] = prolong2_at(w, sc, fr, fc);
}

void restrict_2d(const double* x, int sc, double* w) {
    const int sf = 2 * sc + 1;
    for (int jr = 0; jr < sc; ++jr)
        for (int jc = 0; jc < sc; ++jc)
            w[static_cast<std::size_t>(jr) * sc + jc] = restrict2_at(x, sf, jr, jc);
}

} // namespace serial

} // namespace mlbpgd::kernels
