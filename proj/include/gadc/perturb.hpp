#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "gadc/errors.hpp"
#include "gadc/features.hpp"
#include "gadc/graph.hpp"
#include "gadc/rng.hpp"

namespace gadc {

enum class NoiseKind { gaussian, flip };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double level = 0.0;  // xi for gaussian, flip probability for flip
    std::uint64_t seed = 0;

    void validate() const {
        if (kind == NoiseKind::gaussian && level < 0.0)
            throw domain_error("noise spec: gaussian level must be >= 0");
        if (kind == NoiseKind::flip && (level < 0.0 || level > 1.0))
            throw domain_error("noise spec: flip probability must be in [0, 1]");
    }
};

// X + xi * Y with Y ~ iid standard normal. Row normalization is the caller's
// job, after the noise.
inline FeatureMatrix add_gaussian_noise(const FeatureMatrix& x, const NoiseSpec& spec) {
    spec.validate();
    if (spec.kind != NoiseKind::gaussian) throw domain_error("expected gaussian noise spec");
    if (spec.level == 0.0) return x;
    rng::Engine eng(rng::derive(spec.seed, rng::Stream::gaussian_noise));
    FeatureMatrix out = x;
    for (double& v : out.a) v += spec.level * eng.normal();
    return out;
}

struct FlipResult {
    FeatureMatrix features;
    std::vector<std::uint8_t> mask;  // 1 where the entry was flipped
};

// Flips each binary entry (v -> 1 - v) independently with probability p.
// The mask is exposed so tests can recover exactly which entries flipped.
inline FlipResult add_flip_noise_with_mask(const FeatureMatrix& x, const NoiseSpec& spec) {
    spec.validate();
    if (spec.kind != NoiseKind::flip) throw domain_error("expected flip noise spec");
    for (double v : x.a)
        if (v != 0.0 && v != 1.0)
            throw domain_error("flip noise requires binary {0,1} features");
    rng::Engine eng(rng::derive(spec.seed, rng::Stream::flip_noise));
    FlipResult out{x, std::vector<std::uint8_t>(x.a.size(), 0)};
    for (std::size_t i = 0; i < x.a.size(); ++i) {
        if (eng.bernoulli(spec.level)) {
            out.features.a[i] = 1.0 - out.features.a[i];
            out.mask[i] = 1;
        }
    }
    return out;
}

inline FeatureMatrix add_flip_noise(const FeatureMatrix& x, const NoiseSpec& spec) {
    return add_flip_noise_with_mask(x, spec).features;
}

// ---- synthetic graphs ----------------------------------------------------

struct SbmSpec {
    std::size_t n = 1000;
    std::size_t blocks = 2;
    double p_in = 0.02;
    double p_out = 0.002;
    std::size_t d = 16;
    double feature_separation = 2.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n == 0 || blocks == 0 || blocks > n)
            throw domain_error("sbm spec: need 1 <= blocks <= n");
        if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
            throw domain_error("sbm spec: probabilities must be in [0, 1]");
        if (d == 0) throw domain_error("sbm spec: feature dimension must be >= 1");
    }
};

// Stochastic block model with Gaussian features around per-class means
// (separation * unit direction, directions cycling through the axes) and a
// stratified 60/20/20 split. Deterministic per seed.
inline std::pair<Graph, LabeledDataset> generate_sbm(const SbmSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n, C = spec.blocks;

    // contiguous blocks; sizes differ by at most one
    std::vector<int> labels(n);
    {
        const std::size_t base = n / C, extra = n % C;
        std::size_t node = 0;
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t size = base + (c < extra ? 1 : 0);
            for (std::size_t k = 0; k < size; ++k) labels[node++] = static_cast<int>(c);
        }
    }

    rng::Engine edge_eng(rng::derive(spec.seed, rng::Stream::sbm_edges));
    std::vector<std::size_t> ei, ej;
    std::vector<double> ew;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = labels[i] == labels[j] ? spec.p_in : spec.p_out;
            if (edge_eng.bernoulli(p)) {
                ei.push_back(i);
                ej.push_back(j);
                ew.push_back(1.0);
            }
        }
    Graph g = graph_from_edges(n, ei, ej, ew);

    rng::Engine feat_eng(rng::derive(spec.seed, rng::Stream::sbm_features));
    LabeledDataset ds;
    ds.features = FeatureMatrix(n, spec.d);
    ds.labels = labels;
    ds.num_classes = C;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t axis = static_cast<std::size_t>(labels[i]) % spec.d;
        for (std::size_t j = 0; j < spec.d; ++j) {
            double v = feat_eng.normal();
            if (j == axis) v += spec.feature_separation;
            ds.features(i, j) = v;
        }
    }

    // stratified 60/20/20
    rng::Engine split_eng(rng::derive(spec.seed, rng::Stream::sbm_split));
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == static_cast<int>(c)) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[split_eng.uniform_below(i)]);
        const std::size_t ntr = members.size() * 6 / 10;
        const std::size_t nva = members.size() * 2 / 10;
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (k < ntr)
                ds.train.push_back(members[k]);
            else if (k < ntr + nva)
                ds.val.push_back(members[k]);
            else
                ds.test.push_back(members[k]);
        }
    }
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.val.begin(), ds.val.end());
    std::sort(ds.test.begin(), ds.test.end());
    validate_dataset(ds);
    return {std::move(g), std::move(ds)};
}

// Draws a fresh stratified 60/20/20 split into an existing dataset
// (heterophily protocol re-splits on every run).
inline void resplit_dataset(LabeledDataset& ds, std::uint64_t seed) {
    ds.train.clear();
    ds.val.clear();
    ds.test.clear();
    rng::Engine eng(rng::derive(seed, rng::Stream::split_shuffle));
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            if (ds.labels[i] == static_cast<int>(c)) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[eng.uniform_below(i)]);
        const std::size_t ntr = members.size() * 6 / 10;
        const std::size_t nva = members.size() * 2 / 10;
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (k < ntr)
                ds.train.push_back(members[k]);
            else if (k < ntr + nva)
                ds.val.push_back(members[k]);
            else
                ds.test.push_back(members[k]);
        }
    }
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.val.begin(), ds.val.end());
    std::sort(ds.test.begin(), ds.test.end());
}

enum class GalleryGraph { isolated, star4, complete4, decentralized12 };

inline GalleryGraph gallery_from_string(const std::string& s) {
    if (s == "isolated") return GalleryGraph::isolated;
    if (s == "star4") return GalleryGraph::star4;
    if (s == "complete4") return GalleryGraph::complete4;
    if (s == "decentralized12") return GalleryGraph::decentralized12;
    throw input_error("unknown gallery graph: " + s);
}

// Fixed topologies for connectivity-factor illustrations: four isolated
// nodes, a 4-node star, the 4-node complete graph, and a 12-node circulant
// with no hub.
inline Graph generate_gallery(GalleryGraph which) {
    std::vector<std::size_t> ei, ej;
    std::size_t n = 4;
    switch (which) {
        case GalleryGraph::isolated:
            break;
        case GalleryGraph::star4:
            for (std::size_t leaf = 1; leaf < 4; ++leaf) {
                ei.push_back(0);
                ej.push_back(leaf);
            }
            break;
        case GalleryGraph::complete4:
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = i + 1; j < 4; ++j) {
                    ei.push_back(i);
                    ej.push_back(j);
                }
            break;
        case GalleryGraph::decentralized12:
            n = 12;
            for (std::size_t i = 0; i < 12; ++i) {
                ei.push_back(i);
                ej.push_back((i + 1) % 12);
            }
            for (std::size_t i = 0; i < 6; ++i) {
                ei.push_back(i);
                ej.push_back(i + 6);
            }
            break;
    }
    return graph_from_edges(n, ei, ej, std::vector<double>(ei.size(), 1.0));
}

// ---- structural perturbation ----------------------------------------------

enum class PerturbMode { add_cross_class, remove_within_class, mixed };

inline PerturbMode perturb_mode_from_string(const std::string& s) {
    if (s == "add_cross_class") return PerturbMode::add_cross_class;
    if (s == "remove_within_class") return PerturbMode::remove_within_class;
    if (s == "mixed") return PerturbMode::mixed;
    throw input_error("unknown perturbation mode: " + s);
}

struct PerturbResult {
    Graph graph;
    std::size_t requested_add = 0;
    std::size_t added = 0;
    std::size_t requested_remove = 0;
    std::size_t removed = 0;

    bool partial() const { return added < requested_add || removed < requested_remove; }
};

// Label-aware random structure perturbation: adds edges between
// differently-labeled non-adjacent pairs and/or removes within-class edges.
// floor(rate * |E|) edges total, deterministic per seed. If candidates run
// out, the perturbation is partial and the counts say so.
inline PerturbResult perturb_structure(const Graph& g, const std::vector<int>& labels,
                                       double rate, PerturbMode mode, std::uint64_t seed) {
    if (rate < 0.0) throw domain_error("perturb: rate must be >= 0");
    if (labels.size() != g.n) throw input_error("perturb: label count != node count");

    const std::size_t budget =
        static_cast<std::size_t>(rate * static_cast<double>(g.undirected_edge_count()));
    PerturbResult res;
    switch (mode) {
        case PerturbMode::add_cross_class: res.requested_add = budget; break;
        case PerturbMode::remove_within_class: res.requested_remove = budget; break;
        case PerturbMode::mixed:
            res.requested_add = budget / 2;
            res.requested_remove = budget - budget / 2;
            break;
    }

    // current undirected edge set (i < j), loops kept aside untouched
    std::unordered_set<std::uint64_t> present;
    std::vector<std::pair<std::size_t, std::size_t>> within;
    std::vector<std::pair<std::size_t, std::size_t>> kept_loops;
    std::vector<double> loop_weights;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> weights;
    auto key = [&](std::size_t i, std::size_t j) {
        return static_cast<std::uint64_t>(i) * g.n + j;
    };
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
            const std::size_t j = g.adj.col[k];
            if (j < i) continue;
            if (j == i) {
                kept_loops.push_back({i, i});
                loop_weights.push_back(g.adj.val[k]);
                continue;
            }
            present.insert(key(i, j));
            edges.push_back({i, j});
            weights.push_back(g.adj.val[k]);
            if (labels[i] == labels[j]) within.push_back({i, j});
        }

    rng::Engine eng(rng::derive(seed, rng::Stream::structure_perturb));

    std::unordered_set<std::uint64_t> removed_keys;
    if (res.requested_remove > 0) {
        for (std::size_t i = within.size(); i > 1; --i)
            std::swap(within[i - 1], within[eng.uniform_below(i)]);
        res.removed = std::min(res.requested_remove, within.size());
        for (std::size_t k = 0; k < res.removed; ++k)
            removed_keys.insert(key(within[k].first, within[k].second));
    }

    std::vector<std::pair<std::size_t, std::size_t>> additions;
    if (res.requested_add > 0) {
        const std::size_t max_attempts = 100 * res.requested_add + 1000;
        std::size_t attempts = 0;
        while (res.added < res.requested_add && attempts < max_attempts) {
            ++attempts;
            const std::size_t i = eng.uniform_below(g.n);
            const std::size_t j = eng.uniform_below(g.n);
            if (i == j || labels[i] == labels[j]) continue;
            const std::size_t a = std::min(i, j), b = std::max(i, j);
            if (present.count(key(a, b))) continue;
            present.insert(key(a, b));
            additions.push_back({a, b});
            ++res.added;
        }
    }

    std::vector<std::size_t> ei, ej;
    std::vector<double> ew;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (removed_keys.count(key(edges[k].first, edges[k].second))) continue;
        ei.push_back(edges[k].first);
        ej.push_back(edges[k].second);
        ew.push_back(weights[k]);
    }
    for (std::size_t k = 0; k < kept_loops.size(); ++k) {
        ei.push_back(kept_loops[k].first);
        ej.push_back(kept_loops[k].second);
        ew.push_back(loop_weights[k]);
    }
    for (const auto& [a, b] : additions) {
        ei.push_back(a);
        ej.push_back(b);
        ew.push_back(1.0);
    }
    res.graph = graph_from_edges(g.n, ei, ej, ew);
    return res;
}

} // namespace gadc
