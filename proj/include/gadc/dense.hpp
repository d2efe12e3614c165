#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "gadc/errors.hpp"

namespace gadc {

// Row-major dense matrix of doubles. Most matrices in this library are small
// (features n x d, materialized operators up to a few thousand rows).
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double* row(std::size_t i) { return a.data() + i * cols; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool all_finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }

    DenseMatrix& operator+=(const DenseMatrix& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
        return *this;
    }
    DenseMatrix& operator-=(const DenseMatrix& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
        return *this;
    }
    DenseMatrix& operator*=(double s) {
        for (double& v : a) v *= s;
        return *this;
    }
};

// Node features are a dense n x d matrix, row per node.
using FeatureMatrix = DenseMatrix;

inline DenseMatrix operator*(const DenseMatrix& x, const DenseMatrix& y) {
    if (x.cols != y.rows) throw input_error("matmul: inner dimensions disagree");
    DenseMatrix z(x.rows, y.cols);
    // i-k-j order keeps the inner loop contiguous.
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* zi = z.row(i);
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double v = xi[k];
            if (v == 0.0) continue;
            const double* yk = y.row(k);
            for (std::size_t j = 0; j < y.cols; ++j) zi[j] += v * yk[j];
        }
    }
    return z;
}

inline DenseMatrix transpose(const DenseMatrix& x) {
    DenseMatrix t(x.cols, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) t(j, i) = x(i, j);
    return t;
}

inline double frobenius_norm(const DenseMatrix& x) {
    double s = 0.0;
    for (double v : x.a) s += v * v;
    return std::sqrt(s);
}

inline double max_abs_diff(const DenseMatrix& x, const DenseMatrix& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i)
        m = std::max(m, std::abs(x.a[i] - y.a[i]));
    return m;
}

inline double relative_frobenius_error(const DenseMatrix& x, const DenseMatrix& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) {
        const double d = x.a[i] - ref.a[i];
        num += d * d;
        den += ref.a[i] * ref.a[i];
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

// Binary container: magic "GADCMAT1", u64 rows, u64 cols, rows*cols
// little-endian f64 row-major.
inline constexpr char kMatrixMagic[8] = {'G', 'A', 'D', 'C', 'M', 'A', 'T', '1'};

inline void save_matrix_binary(std::ostream& out, const DenseMatrix& x) {
    out.write(kMatrixMagic, 8);
    const std::uint64_t r = x.rows, c = x.cols;
    out.write(reinterpret_cast<const char*>(&r), 8);
    out.write(reinterpret_cast<const char*>(&c), 8);
    out.write(reinterpret_cast<const char*>(x.a.data()),
              static_cast<std::streamsize>(x.a.size() * sizeof(double)));
}

inline DenseMatrix load_matrix_binary(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMatrixMagic, 8) != 0)
        throw input_error("matrix container: bad magic (offset 0)");
    std::uint64_t r = 0, c = 0;
    in.read(reinterpret_cast<char*>(&r), 8);
    in.read(reinterpret_cast<char*>(&c), 8);
    if (!in) throw input_error("matrix container: truncated header (offset 8)");
    DenseMatrix x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    in.read(reinterpret_cast<char*>(x.a.data()),
            static_cast<std::streamsize>(x.a.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != x.a.size() * sizeof(double))
        throw input_error("matrix container: truncated payload (offset 24)");
    return x;
}

// Smallest singular value via cyclic Jacobi on A^T A. Only used on the
// error path of the dense solver, where n is small.
inline double smallest_singular_value(const DenseMatrix& m) {
    const std::size_t n = m.rows;
    DenseMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += m(k, i) * m(k, j);
            g(i, j) = s;
        }
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                off += g(p, q) * g(p, q);
                if (std::abs(g(p, q)) < 1e-300) continue;
                const double theta = (g(q, q) - g(p, p)) / (2.0 * g(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double gkp = g(k, p), gkq = g(k, q);
                    g(k, p) = c * gkp - s * gkq;
                    g(k, q) = s * gkp + c * gkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double gpk = g(p, k), gqk = g(q, k);
                    g(p, k) = c * gpk - s * gqk;
                    g(q, k) = s * gpk + c * gqk;
                }
            }
        if (off < 1e-24) break;
    }
    double lam = g(0, 0);
    for (std::size_t i = 1; i < n; ++i) lam = std::min(lam, g(i, i));
    return std::sqrt(std::max(lam, 0.0));
}

// Solves A X = B by LU with partial pivoting (A square, consumed by copy).
// Throws numeric_error with an estimate of the smallest singular value when
// the system is singular to working precision.
inline DenseMatrix solve_linear_system(DenseMatrix lu, const DenseMatrix& b) {
    const std::size_t n = lu.rows;
    if (lu.cols != n || b.rows != n) throw input_error("solve: shape mismatch");
    const DenseMatrix a_copy = lu;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    double scale = 0.0;
    for (double v : lu.a) scale = std::max(scale, std::abs(v));
    const double tiny = scale * 1e-14;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(lu(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best <= tiny) {
            const double smin = smallest_singular_value(a_copy);
            throw numeric_error("singular system: smallest singular value " +
                                std::to_string(smin));
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            std::swap(perm[k], perm[piv]);
        }
        const double inv = 1.0 / lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) * inv;
            lu(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
        }
    }

    DenseMatrix x(n, b.cols);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) x(i, j) = b(perm[i], j);
    // forward substitution (unit lower)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < i; ++k) {
            const double f = lu(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) x(i, j) -= f * x(k, j);
        }
    // back substitution
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double f = lu(ii, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) x(ii, j) -= f * x(k, j);
        }
        const double inv = 1.0 / lu(ii, ii);
        for (std::size_t j = 0; j < b.cols; ++j) x(ii, j) *= inv;
    }
    return x;
}

} // namespace gadc
