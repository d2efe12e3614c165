#pragma once

#include <cstddef>
#include <vector>

#include "gadc/dense.hpp"
#include "gadc/errors.hpp"

namespace gadc {

// Compressed sparse row matrix. Column indices are strictly ascending within
// each row, which makes pattern walks and entry lookups deterministic.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1
    std::vector<std::size_t> col;
    std::vector<double> val;

    CsrMatrix() = default;
    explicit CsrMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return col.size(); }

    double at(std::size_t i, std::size_t j) const {
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (col[k] == j) return val[k];
            if (col[k] > j) break;
        }
        return 0.0;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                d(i, col[k]) = val[k];
        return d;
    }

    bool all_finite() const {
        for (double v : val)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Builds a CSR matrix from (row, col, value) triplets; duplicate positions
// have their values summed. Triplet order does not affect the result.
inline CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<std::size_t> ti,
                                   std::vector<std::size_t> tj,
                                   std::vector<double> tv) {
    const std::size_t m = ti.size();
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ti[a] != ti[b]) return ti[a] < ti[b];
        return tj[a] < tj[b];
    });

    CsrMatrix out(rows, cols);
    out.col.reserve(m);
    out.val.reserve(m);
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        out.row_ptr[i] = out.col.size();
        while (k < m && ti[order[k]] == i) {
            const std::size_t j = tj[order[k]];
            double v = tv[order[k]];
            ++k;
            while (k < m && ti[order[k]] == i && tj[order[k]] == j) {
                v += tv[order[k]];
                ++k;
            }
            out.col.push_back(j);
            out.val.push_back(v);
        }
    }
    out.row_ptr[rows] = out.col.size();
    return out;
}

// Y = A * X with X dense.
inline DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& x) {
    if (a.cols != x.rows) throw input_error("spmm: inner dimensions disagree");
    DenseMatrix y(a.rows, x.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* yi = y.row(i);
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const double v = a.val[k];
            const double* xr = x.row(a.col[k]);
            for (std::size_t j = 0; j < x.cols; ++j) yi[j] += v * xr[j];
        }
    }
    return y;
}

inline std::vector<double> row_sums(const CsrMatrix& a) {
    std::vector<double> s(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s[i] += a.val[k];
    return s;
}

inline double max_asymmetry(const CsrMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            m = std::max(m, std::abs(a.val[k] - a.at(a.col[k], i)));
    return m;
}

} // namespace gadc
