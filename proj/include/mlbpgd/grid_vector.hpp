#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

// Flat dense vector, optionally tagged with the side length of the square
// grid it discretizes. side == 0 means "not a grid" (rays, weights, ...).
struct GridVector {
    std::vector<double> data;
    int side = 0;

    GridVector() = default;
    explicit GridVector(std::size_t n, double fill = 0.0) : data(n, fill) {}

    static GridVector grid(int s, double fill = 0.0) {
        if (s <= 0) throw ShapeError("grid side must be positive");
        GridVector v(static_cast<std::size_t>(s) * s, fill);
        v.side = s;
        return v;
    }

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    const double& operator[](std::size_t i) const { return data[i]; }

    // Row-major grid access; callers must have side > 0.
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * side + c]; }
    const double& at(int r, int c) const { return data[static_cast<std::size_t>(r) * side + c]; }
};

inline void check_same_size(const GridVector& a, const GridVector& b, const char* where) {
    if (a.size() != b.size())
        throw ShapeError(std::string(where) + ": size mismatch");
}

inline double dot(const GridVector& a, const GridVector& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sum(const GridVector& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

inline double norm_l1(const GridVector& a) {
    double s = 0.0;
    for (double v : a.data) s += std::fabs(v);
    return s;
}

inline double norm_l2(const GridVector& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

inline double norm_linf(const GridVector& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

// x + alpha * d, preserving the grid tag of x.
inline GridVector add_scaled(const GridVector& x, double alpha, const GridVector& d) {
    check_same_size(x, d, "add_scaled");
    GridVector r = x;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * d[i];
    return r;
}

inline GridVector sub(const GridVector& a, const GridVector& b) {
    check_same_size(a, b, "sub");
    GridVector r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline double max_abs_diff(const GridVector& a, const GridVector& b) {
    check_same_size(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline bool all_finite(const GridVector& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace mlbpgd
