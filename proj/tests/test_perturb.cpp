#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "gadc/perturb.hpp"

using namespace gadc;

TEST_CASE("gaussian noise") {
    FeatureMatrix x(1000, 100);
    SUBCASE("zero level returns the input bitwise") {
        NoiseSpec spec{NoiseKind::gaussian, 0.0, 42};
        const FeatureMatrix y = add_gaussian_noise(x, spec);
        CHECK(y.a == x.a);
    }
    SUBCASE("sample variance of the perturbation matches xi^2") {
        NoiseSpec spec{NoiseKind::gaussian, 100.0, 42};
        const FeatureMatrix y = add_gaussian_noise(x, spec);
        double s = 0.0, s2 = 0.0;
        const double n = static_cast<double>(x.a.size());
        for (std::size_t i = 0; i < x.a.size(); ++i) {
            const double diff = y.a[i] - x.a[i];
            s += diff;
            s2 += diff * diff;
        }
        const double var = s2 / n - (s / n) * (s / n);
        CHECK(std::abs(var - 1e4) / 1e4 < 0.05);
    }
    SUBCASE("same seed gives bit-identical noise") {
        NoiseSpec spec{NoiseKind::gaussian, 0.3, 7};
        CHECK(add_gaussian_noise(x, spec).a == add_gaussian_noise(x, spec).a);
    }
}

TEST_CASE("flip noise") {
    FeatureMatrix x(100, 50);
    for (std::size_t i = 0; i < x.a.size(); ++i) x.a[i] = (i % 3 == 0) ? 1.0 : 0.0;

    SUBCASE("p=0 is the identity") {
        NoiseSpec spec{NoiseKind::flip, 0.0, 1};
        CHECK(add_flip_noise(x, spec).a == x.a);
    }
    SUBCASE("p=1 is the exact complement") {
        NoiseSpec spec{NoiseKind::flip, 1.0, 1};
        const FeatureMatrix y = add_flip_noise(x, spec);
        for (std::size_t i = 0; i < x.a.size(); ++i) CHECK(y.a[i] == 1.0 - x.a[i]);
    }
    SUBCASE("flip fraction concentrates around p") {
        FeatureMatrix big(1000, 1000);
        NoiseSpec spec{NoiseKind::flip, 0.1, 3};
        const FlipResult res = add_flip_noise_with_mask(big, spec);
        std::size_t flips = 0;
        for (std::uint8_t f : res.mask) flips += f;
        const double frac = static_cast<double>(flips) / 1e6;
        CHECK(frac >= 0.098);
        CHECK(frac <= 0.102);
    }
    SUBCASE("mask recovers exactly the flipped entries") {
        NoiseSpec spec{NoiseKind::flip, 0.25, 9};
        const FlipResult res = add_flip_noise_with_mask(x, spec);
        for (std::size_t i = 0; i < x.a.size(); ++i) {
            const bool changed = res.features.a[i] != x.a[i];
            CHECK(changed == (res.mask[i] == 1));
        }
    }
    SUBCASE("non-binary input is rejected") {
        FeatureMatrix bad(2, 2);
        bad(0, 0) = 0.5;
        NoiseSpec spec{NoiseKind::flip, 0.1, 1};
        CHECK_THROWS_AS(add_flip_noise(bad, spec), domain_error);
    }
}

TEST_CASE("sbm generator") {
    SUBCASE("extreme probabilities give two disjoint cliques") {
        SbmSpec spec;
        spec.n = 10;
        spec.blocks = 2;
        spec.p_in = 1.0;
        spec.p_out = 0.0;
        spec.d = 4;
        spec.seed = 1;
        const auto [g, ds] = generate_sbm(spec);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = i + 1; j < 10; ++j)
                CHECK(g.has_edge(i, j) == (ds.labels[i] == ds.labels[j]));
    }
    SUBCASE("label counts per block differ by at most one") {
        SbmSpec spec;
        spec.n = 11;
        spec.blocks = 3;
        spec.seed = 2;
        const auto [g, ds] = generate_sbm(spec);
        (void)g;
        std::vector<int> counts(3, 0);
        for (int l : ds.labels) ++counts[l];
        const int mx = std::max({counts[0], counts[1], counts[2]});
        const int mn = std::min({counts[0], counts[1], counts[2]});
        CHECK(mx - mn <= 1);
    }
    SUBCASE("p_in == p_out has homophily ratio near 1/C") {
        SbmSpec spec;
        spec.n = 400;
        spec.blocks = 2;
        spec.p_in = 0.05;
        spec.p_out = 0.05;
        spec.seed = 3;
        const auto [g, ds] = generate_sbm(spec);
        std::size_t same = 0, total = 0;
        for (std::size_t i = 0; i < g.n; ++i)
            for (std::size_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
                const std::size_t j = g.adj.col[k];
                if (j <= i) continue;
                ++total;
                if (ds.labels[i] == ds.labels[j]) ++same;
            }
        const double ratio = static_cast<double>(same) / static_cast<double>(total);
        CHECK(std::abs(ratio - 0.5) < 0.05);
    }
    SUBCASE("splits are a stratified 60/20/20 partition") {
        SbmSpec spec;
        spec.n = 1000;
        spec.blocks = 2;
        spec.seed = 4;
        const auto [g, ds] = generate_sbm(spec);
        CHECK(ds.train.size() == 600);
        CHECK(ds.val.size() == 200);
        CHECK(ds.test.size() == 200);
        validate_dataset(ds);
    }
    SUBCASE("same seed reproduces the same graph and features") {
        SbmSpec spec;
        spec.n = 60;
        spec.seed = 11;
        const auto [g1, ds1] = generate_sbm(spec);
        const auto [g2, ds2] = generate_sbm(spec);
        CHECK(g1.adj.col == g2.adj.col);
        CHECK(ds1.features.a == ds2.features.a);
        CHECK(ds1.train == ds2.train);
    }
}

TEST_CASE("gallery graphs") {
    CHECK(generate_gallery(GalleryGraph::isolated).n == 4);
    CHECK(generate_gallery(GalleryGraph::isolated).undirected_edge_count() == 0);
    const Graph star = generate_gallery(GalleryGraph::star4);
    CHECK(star.undirected_edge_count() == 3);
    for (std::size_t leaf = 1; leaf < 4; ++leaf) CHECK(star.has_edge(0, leaf));
    CHECK(generate_gallery(GalleryGraph::complete4).undirected_edge_count() == 6);
    const Graph dec = generate_gallery(GalleryGraph::decentralized12);
    CHECK(dec.n == 12);
    CHECK(dec.undirected_edge_count() == 18);
}

TEST_CASE("structure perturbation") {
    SbmSpec spec;
    spec.n = 200;
    spec.blocks = 2;
    spec.p_in = 0.06;
    spec.p_out = 0.005;
    spec.seed = 21;
    const auto [g, ds] = generate_sbm(spec);

    SUBCASE("rate 0 returns the input graph") {
        const PerturbResult res =
            perturb_structure(g, ds.labels, 0.0, PerturbMode::add_cross_class, 1);
        CHECK(res.graph.adj.col == g.adj.col);
        CHECK(res.graph.adj.val == g.adj.val);
        CHECK(res.added == 0);
    }
    SUBCASE("added edges are cross-class and new") {
        const std::size_t before = g.undirected_edge_count();
        const PerturbResult res =
            perturb_structure(g, ds.labels, 0.25, PerturbMode::add_cross_class, 2);
        CHECK(res.added == before / 4);
        CHECK(res.graph.undirected_edge_count() == before + res.added);
        std::size_t cross_before = 0, cross_after = 0;
        auto count_cross = [&](const Graph& gr, std::size_t& out) {
            for (std::size_t i = 0; i < gr.n; ++i)
                for (std::size_t k = gr.adj.row_ptr[i]; k < gr.adj.row_ptr[i + 1]; ++k) {
                    const std::size_t j = gr.adj.col[k];
                    if (j > i && ds.labels[i] != ds.labels[j]) ++out;
                }
        };
        count_cross(g, cross_before);
        count_cross(res.graph, cross_after);
        CHECK(cross_after == cross_before + res.added);
    }
    SUBCASE("removal deletes only within-class edges") {
        const std::size_t before = g.undirected_edge_count();
        const PerturbResult res =
            perturb_structure(g, ds.labels, 0.25, PerturbMode::remove_within_class, 3);
        CHECK(res.removed == before / 4);
        CHECK(res.graph.undirected_edge_count() == before - res.removed);
        // every surviving pair was already an edge
        for (std::size_t i = 0; i < res.graph.n; ++i)
            for (std::size_t k = res.graph.adj.row_ptr[i]; k < res.graph.adj.row_ptr[i + 1];
                 ++k)
                CHECK(g.has_edge(i, res.graph.adj.col[k]));
    }
    SUBCASE("mixed does half of each") {
        const std::size_t budget = g.undirected_edge_count() / 2;
        const PerturbResult res =
            perturb_structure(g, ds.labels, 0.5, PerturbMode::mixed, 4);
        CHECK(res.added == budget / 2);
        CHECK(res.removed == budget - budget / 2);
    }
    SUBCASE("insufficient candidates yields a partial result with counts") {
        // 2-node graph with one cross-class edge: nothing can be added
        Graph tiny = graph_from_edges(2, {0}, {1}, {1.0});
        const PerturbResult res =
            perturb_structure(tiny, {0, 1}, 3.0, PerturbMode::add_cross_class, 5);
        CHECK(res.requested_add == 3);
        CHECK(res.added == 0);
        CHECK(res.partial());
    }
    SUBCASE("deterministic per seed") {
        const PerturbResult a =
            perturb_structure(g, ds.labels, 0.3, PerturbMode::mixed, 77);
        const PerturbResult b =
            perturb_structure(g, ds.labels, 0.3, PerturbMode::mixed, 77);
        CHECK(a.graph.adj.col == b.graph.adj.col);
    }
}
