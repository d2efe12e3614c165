#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gadc/dense.hpp"
#include "gadc/errors.hpp"
#include "gadc/graph.hpp"
#include "gadc/sparse.hpp"

namespace gadc {

enum class TransitionOption { plain, option1, option2, option3, option4 };

inline const char* to_string(TransitionOption o) {
    switch (o) {
        case TransitionOption::plain: return "plain";
        case TransitionOption::option1: return "1";
        case TransitionOption::option2: return "2";
        case TransitionOption::option3: return "3";
        case TransitionOption::option4: return "4";
    }
    return "?";
}

inline TransitionOption transition_option_from_string(const std::string& s) {
    if (s == "plain" || s == "0") return TransitionOption::plain;
    if (s == "1") return TransitionOption::option1;
    if (s == "2") return TransitionOption::option2;
    if (s == "3") return TransitionOption::option3;
    if (s == "4") return TransitionOption::option4;
    throw input_error("unknown transition option: " + s);
}

// The operator raised to powers by the diffusion series. Stored sparse for
// the plain, edge-masked and reconstructed variants; dense for the global
// Gram variant.
struct TransitionMatrix {
    CsrMatrix sparse;
    DenseMatrix dense;
    bool dense_flag = false;
    TransitionOption option = TransitionOption::plain;
    double epsilon = 0.0;
    NormKind base_kind = NormKind::symmetric;

    std::size_t n() const { return dense_flag ? dense.rows : sparse.rows; }

    DenseMatrix apply(const DenseMatrix& x) const {
        return dense_flag ? dense * x : spmm(sparse, x);
    }

    DenseMatrix to_dense() const { return dense_flag ? dense : sparse.to_dense(); }
};

namespace detail {

inline std::vector<double> row_l2_norms(const FeatureMatrix& x) {
    std::vector<double> norms(x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) s += x(i, j) * x(i, j);
        norms[i] = std::sqrt(s);
    }
    return norms;
}

inline double dot_rows(const FeatureMatrix& x, std::size_t i, std::size_t j) {
    const double* a = x.row(i);
    const double* b = x.row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < x.cols; ++k) s += a[k] * b[k];
    return s;
}

// ||X X^T||_F == ||X^T X||_F, and the d x d Gram is the cheap one.
inline double gram_frobenius_norm(const FeatureMatrix& x) {
    const std::size_t d = x.cols;
    DenseMatrix g(d, d);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* r = x.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            const double v = r[a];
            if (v == 0.0) continue;
            double* ga = g.row(a);
            for (std::size_t b = 0; b < d; ++b) ga[b] += v * r[b];
        }
    }
    return frobenius_norm(g);
}

} // namespace detail

// Edge-masked cosine similarity: for every non-loop edge (i, j), the cosine
// of the endpoint feature rows; zero elsewhere and on the diagonal. A zero
// L2-norm endpoint row yields a zero entry.
inline CsrMatrix phi_option1(const Graph& g, const FeatureMatrix& x) {
    if (x.rows != g.n) throw input_error("phi option 1: feature rows != node count");
    const std::vector<double> norms = detail::row_l2_norms(x);
    CsrMatrix phi = g.adj;
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t k = phi.row_ptr[i]; k < phi.row_ptr[i + 1]; ++k) {
            const std::size_t j = phi.col[k];
            if (j == i || norms[i] == 0.0 || norms[j] == 0.0) {
                phi.val[k] = 0.0;
            } else {
                phi.val[k] = detail::dot_rows(x, i, j) / (norms[i] * norms[j]);
            }
        }
    }
    return phi;
}

// Global Gram matrix scaled by the Frobenius norm of X X^T; all pairs
// including the diagonal. Unit Frobenius norm whenever X != 0.
inline DenseMatrix phi_option2(const FeatureMatrix& x, std::size_t dense_cap = 50000) {
    const std::size_t n = x.rows;
    if (n > dense_cap)
        throw capacity_error("phi option 2: " + std::to_string(n) +
                             " nodes exceeds dense cap " + std::to_string(dense_cap) +
                             "; use option 3 for edge-masked similarity");
    const double scale = detail::gram_frobenius_norm(x);
    DenseMatrix phi(n, n);
    if (scale == 0.0) return phi;
    // Phi = X X^T / scale
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        double* pi = phi.row(i);
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double v = xi[k];
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) pi[j] += v * x(j, k);
        }
        for (std::size_t j = 0; j < n; ++j) pi[j] /= scale;
    }
    return phi;
}

// Option-2 values restricted to the edge set; the Frobenius normalizer is
// still taken over the full Gram matrix, not the masked one.
inline CsrMatrix phi_option3(const Graph& g, const FeatureMatrix& x) {
    if (x.rows != g.n) throw input_error("phi option 3: feature rows != node count");
    const double scale = detail::gram_frobenius_norm(x);
    CsrMatrix phi = g.adj;
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t k = phi.row_ptr[i]; k < phi.row_ptr[i + 1]; ++k) {
            const std::size_t j = phi.col[k];
            if (j == i || scale == 0.0) {
                phi.val[k] = 0.0;
            } else {
                phi.val[k] = detail::dot_rows(x, i, j) / scale;
            }
        }
    }
    return phi;
}

// T = normalized adjacency - epsilon * Phi, sparse Phi (options 1 and 3).
// The result keeps the normalized adjacency's pattern: Phi's pattern is a
// subset of it once self-loops are added.
inline TransitionMatrix build_transition(const NormalizedAdjacency& na, const CsrMatrix& phi,
                                         double epsilon, TransitionOption option) {
    if (phi.rows != na.n()) throw input_error("build_transition: shape mismatch");
    TransitionMatrix t;
    t.option = option;
    t.epsilon = epsilon;
    t.base_kind = na.kind;
    t.sparse = na.matrix;
    for (std::size_t i = 0; i < t.sparse.rows; ++i)
        for (std::size_t k = t.sparse.row_ptr[i]; k < t.sparse.row_ptr[i + 1]; ++k)
            t.sparse.val[k] -= epsilon * phi.at(i, t.sparse.col[k]);
    return t;
}

// Dense Phi (option 2): the subtraction is applied as written and the dense
// result accepted.
inline TransitionMatrix build_transition(const NormalizedAdjacency& na, const DenseMatrix& phi,
                                         double epsilon, TransitionOption option) {
    if (phi.rows != na.n()) throw input_error("build_transition: shape mismatch");
    TransitionMatrix t;
    t.option = option;
    t.epsilon = epsilon;
    t.base_kind = na.kind;
    t.dense_flag = true;
    t.dense = phi;
    t.dense *= -epsilon;
    for (std::size_t i = 0; i < na.matrix.rows; ++i)
        for (std::size_t k = na.matrix.row_ptr[i]; k < na.matrix.row_ptr[i + 1]; ++k)
            t.dense(i, na.matrix.col[k]) += na.matrix.val[k];
    return t;
}

// Plain transition: T is the normalized adjacency unchanged.
inline TransitionMatrix build_transition(const NormalizedAdjacency& na) {
    TransitionMatrix t;
    t.option = TransitionOption::plain;
    t.epsilon = 0.0;
    t.base_kind = na.kind;
    t.sparse = na.matrix;
    return t;
}

// Option 4: rebuilds the operator from the (possibly attacked) adjacency.
// Edge weights become raw cosines of the endpoint features, self-loops get
// weight 1, negative cosines are clamped to 0 (pruning dissimilar pairs),
// and the clamped matrix is symmetrically normalized by its own degrees.
inline TransitionMatrix reconstruct_option4(const Graph& g_perturbed, const FeatureMatrix& x) {
    if (x.rows != g_perturbed.n) throw input_error("option 4: feature rows != node count");
    const std::size_t n = g_perturbed.n;
    const std::vector<double> norms = detail::row_l2_norms(x);

    std::vector<std::size_t> ti, tj;
    std::vector<double> tv;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = g_perturbed.adj.row_ptr[i]; k < g_perturbed.adj.row_ptr[i + 1]; ++k) {
            const std::size_t j = g_perturbed.adj.col[k];
            if (j == i) continue;  // diagonal handled below
            double w = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0)
                w = detail::dot_rows(x, i, j) / (norms[i] * norms[j]);
            // Pruned entries stay in the pattern with weight 0.
            ti.push_back(i);
            tj.push_back(j);
            tv.push_back(w > 0.0 ? w : 0.0);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        ti.push_back(i);
        tj.push_back(i);
        tv.push_back(1.0);
    }

    TransitionMatrix t;
    t.option = TransitionOption::option4;
    t.epsilon = 0.0;
    t.base_kind = NormKind::symmetric;
    t.sparse = csr_from_triplets(n, n, std::move(ti), std::move(tj), std::move(tv));
    const std::vector<double> deg = row_sums(t.sparse);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = t.sparse.row_ptr[i]; k < t.sparse.row_ptr[i + 1]; ++k)
            t.sparse.val[k] /= std::sqrt(deg[i] * deg[t.sparse.col[k]]);
    return t;
}

// Densified dump into the binary matrix container.
inline void save_transition_binary(std::ostream& out, const TransitionMatrix& t) {
    save_matrix_binary(out, t.to_dense());
}

// Sparse triplet CSV "row,col,value" for inspection.
inline void save_transition_csv(std::ostream& out, const TransitionMatrix& t) {
    out.precision(17);
    if (t.dense_flag) {
        for (std::size_t i = 0; i < t.dense.rows; ++i)
            for (std::size_t j = 0; j < t.dense.cols; ++j)
                if (t.dense(i, j) != 0.0)
                    out << i << ',' << j << ',' << t.dense(i, j) << '\n';
    } else {
        for (std::size_t i = 0; i < t.sparse.rows; ++i)
            for (std::size_t k = t.sparse.row_ptr[i]; k < t.sparse.row_ptr[i + 1]; ++k)
                out << i << ',' << t.sparse.col[k] << ',' << t.sparse.val[k] << '\n';
    }
}

} // namespace gadc
