#pragma once

#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gadc/errors.hpp"
#include "gadc/sparse.hpp"

namespace gadc {

// Undirected graph in CSR layout. Every non-loop edge is stored in both
// directions with equal weight; self-loops are stored once on the diagonal.
struct Graph {
    std::size_t n = 0;
    CsrMatrix adj;  // n x n, symmetric

    Graph() = default;
    explicit Graph(std::size_t nodes) : n(nodes), adj(nodes, nodes) {}

    // Directed entry count (each undirected edge contributes two).
    std::size_t entry_count() const { return adj.nnz(); }

    // Number of undirected non-loop edges.
    std::size_t undirected_edge_count() const {
        std::size_t loops = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (adj.at(i, i) != 0.0) ++loops;
        return (adj.nnz() - loops) / 2;
    }

    bool has_edge(std::size_t i, std::size_t j) const { return adj.at(i, j) != 0.0; }
};

// Assembles a symmetric graph from undirected (i, j, w) records. Duplicate
// records of the same unordered pair are merged by summing weights.
inline Graph graph_from_edges(std::size_t n,
                              const std::vector<std::size_t>& ei,
                              const std::vector<std::size_t>& ej,
                              const std::vector<double>& ew) {
    std::vector<std::size_t> ti, tj;
    std::vector<double> tv;
    ti.reserve(ei.size() * 2);
    tj.reserve(ei.size() * 2);
    tv.reserve(ei.size() * 2);
    for (std::size_t k = 0; k < ei.size(); ++k) {
        ti.push_back(ei[k]);
        tj.push_back(ej[k]);
        tv.push_back(ew[k]);
        if (ei[k] != ej[k]) {
            ti.push_back(ej[k]);
            tj.push_back(ei[k]);
            tv.push_back(ew[k]);
        }
    }
    Graph g(n);
    g.adj = csr_from_triplets(n, n, std::move(ti), std::move(tj), std::move(tv));
    return g;
}

// Parses a tab-separated edge list: "i<TAB>j[<TAB>w]" per line, '#' lines and
// blank lines skipped. Duplicate undirected pairs merge by weight summation;
// input self-loops are kept as given.
inline Graph load_graph(std::istream& in, std::size_t n) {
    std::vector<std::size_t> ei, ej;
    std::vector<double> ew;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long long i = -1, j = -1;
        double w = 1.0;
        if (!(ls >> i >> j)) {
            throw input_error("edge list line " + std::to_string(lineno) +
                              ": expected \"i<TAB>j[<TAB>w]\"");
        }
        std::string wtok;
        if (ls >> wtok) {
            char* end = nullptr;
            w = std::strtod(wtok.c_str(), &end);
            if (end == wtok.c_str() || *end != '\0')
                throw input_error("edge list line " + std::to_string(lineno) +
                                  ": bad weight \"" + wtok + "\"");
        }
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n ||
            static_cast<std::size_t>(j) >= n) {
            throw input_error("edge list line " + std::to_string(lineno) +
                              ": node index out of range [0, " + std::to_string(n) + ")");
        }
        if (!std::isfinite(w)) {
            throw input_error("edge list line " + std::to_string(lineno) +
                              ": non-finite weight");
        }
        ei.push_back(static_cast<std::size_t>(i));
        ej.push_back(static_cast<std::size_t>(j));
        ew.push_back(w);
    }
    return graph_from_edges(n, ei, ej, ew);
}

// Writes each undirected edge once (i <= j). load_graph(save_graph(g)) yields
// the same edge multiset.
inline void save_graph(std::ostream& out, const Graph& g) {
    out.precision(17);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
            const std::size_t j = g.adj.col[k];
            if (j < i) continue;
            out << i << '\t' << j << '\t' << g.adj.val[k] << '\n';
        }
    }
}

// A-tilde = A + I. An existing diagonal entry is incremented by 1.
inline Graph add_self_loops(const Graph& g) {
    std::vector<std::size_t> ti(g.adj.col.size()), tj(g.adj.col.size());
    std::vector<double> tv = g.adj.val;
    std::size_t k = 0;
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p, ++k) {
            ti[k] = i;
            tj[k] = g.adj.col[p];
        }
    for (std::size_t i = 0; i < g.n; ++i) {
        ti.push_back(i);
        tj.push_back(i);
        tv.push_back(1.0);
    }
    Graph out(g.n);
    out.adj = csr_from_triplets(g.n, g.n, std::move(ti), std::move(tj), std::move(tv));
    return out;
}

enum class NormKind { symmetric, row_stochastic };

inline const char* to_string(NormKind k) {
    return k == NormKind::symmetric ? "sym" : "row";
}

struct NormalizedAdjacency {
    CsrMatrix matrix;
    NormKind kind = NormKind::symmetric;
    bool self_loops_added = true;

    std::size_t n() const { return matrix.rows; }
};

// Degree-normalizes A + I (the unit self-loop is added here, on top of any
// input self-loops). Self-loops guarantee positive degrees, so there is no
// division-by-zero branch.
inline NormalizedAdjacency normalize(const Graph& g, NormKind kind) {
    const Graph looped = add_self_loops(g);
    std::vector<double> deg = row_sums(looped.adj);

    NormalizedAdjacency na;
    na.kind = kind;
    na.self_loops_added = true;
    na.matrix = looped.adj;
    for (std::size_t i = 0; i < looped.n; ++i) {
        for (std::size_t k = na.matrix.row_ptr[i]; k < na.matrix.row_ptr[i + 1]; ++k) {
            const std::size_t j = na.matrix.col[k];
            if (kind == NormKind::symmetric) {
                na.matrix.val[k] /= std::sqrt(deg[i] * deg[j]);
            } else {
                na.matrix.val[k] /= deg[i];
            }
        }
    }
    return na;
}

// L-tilde = I - normalized adjacency, on the exact same sparsity pattern
// (the pattern always contains the diagonal).
inline CsrMatrix laplacian(const NormalizedAdjacency& na) {
    CsrMatrix l = na.matrix;
    for (std::size_t i = 0; i < l.rows; ++i)
        for (std::size_t k = l.row_ptr[i]; k < l.row_ptr[i + 1]; ++k)
            l.val[k] = (l.col[k] == i ? 1.0 - l.val[k] : -l.val[k]);
    return l;
}

} // namespace gadc
