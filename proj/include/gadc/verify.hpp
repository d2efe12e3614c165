#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gadc/diffusion.hpp"
#include "gadc/experiment.hpp"
#include "gadc/graph.hpp"
#include "gadc/model.hpp"
#include "gadc/perturb.hpp"
#include "gadc/rng.hpp"
#include "gadc/transition.hpp"

namespace gadc::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

enum class Level { fast, full };

inline Graph random_gnp(std::size_t n, double p, std::uint64_t seed) {
    rng::Engine eng(rng::derive(seed, rng::Stream::random_graph));
    std::vector<std::size_t> ei, ej;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (eng.uniform01() < p) {
                ei.push_back(i);
                ej.push_back(j);
            }
    return graph_from_edges(n, ei, ej, std::vector<double>(ei.size(), 1.0));
}

// Random graph with one deliberately isolated node (node 0) and a dense
// bulk. The isolated node drives the connectivity factor to its n extreme,
// the regime where the noise bound binds.
inline Graph random_gnp_with_isolated_node(std::size_t n, double p, std::uint64_t seed) {
    rng::Engine eng(rng::derive(seed, rng::Stream::random_graph));
    std::vector<std::size_t> ei, ej;
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (eng.uniform01() < p) {
                ei.push_back(i);
                ej.push_back(j);
            }
    return graph_from_edges(n, ei, ej, std::vector<double>(ei.size(), 1.0));
}

// Every row of the materialized operator sums to 1 - (lambda/(lambda+1))^(K+1)
// in the probability-matrix regime (epsilon = 0, row-stochastic kind).
inline CheckResult check_row_sum_lemma(Level level) {
    const std::size_t graphs = level == Level::full ? 50 : 10;
    double worst = 0.0;
    for (std::size_t gi = 0; gi < graphs; ++gi) {
        rng::Engine pick(rng::derive(1000 + gi, rng::Stream::generic));
        const std::size_t n = 5 + pick.uniform_below(196);  // up to 200
        const double p = 0.02 + 0.2 * pick.uniform01();
        const Graph g = random_gnp(n, p, 1000 + gi);
        const TransitionMatrix t = build_transition(normalize(g, NormKind::row_stochastic));
        for (const double lambda : {1.0, 32.0}) {
            for (const unsigned K : {0u, 1u, 16u}) {
                DiffusionConfig cfg;
                cfg.lambda = lambda;
                cfg.K = K;
                const DenseMatrix s = materialize_diffusion(t, cfg);
                const double beta = beta_row_sum(lambda, K);
                for (std::size_t i = 0; i < s.rows; ++i) {
                    double sum = 0.0;
                    for (std::size_t j = 0; j < s.cols; ++j) sum += s(i, j);
                    worst = std::max(worst, std::abs(sum - beta));
                }
            }
        }
    }
    return {"row_sum_lemma", worst < 1e-9,
            "max |row sum - beta| = " + std::to_string(worst) + " over " +
                std::to_string(graphs) + " graphs"};
}

// beta^2/n <= sum_j S_ij^2 <= beta^2 for every row in the nonnegative regime.
inline CheckResult check_row_square_range(Level level) {
    const std::size_t graphs = level == Level::full ? 20 : 6;
    bool ok = true;
    std::string detail = "all rows within [beta^2/n, beta^2]";
    for (std::size_t gi = 0; gi < graphs && ok; ++gi) {
        const std::size_t n = 10 + 7 * gi;
        const Graph g = random_gnp(n, 0.1, 2000 + gi);
        const TransitionMatrix t = build_transition(normalize(g, NormKind::row_stochastic));
        DiffusionConfig cfg;
        cfg.lambda = 32.0;
        cfg.K = 16;
        const DenseMatrix s = materialize_diffusion(t, cfg);
        const double beta = beta_row_sum(cfg.lambda, cfg.K);
        for (std::size_t i = 0; i < s.rows; ++i) {
            double sq = 0.0;
            for (std::size_t j = 0; j < s.cols; ++j) sq += s(i, j) * s(i, j);
            if (sq < beta * beta / static_cast<double>(n) - 1e-12 ||
                sq > beta * beta + 1e-12) {
                ok = false;
                detail = "row " + std::to_string(i) + " of graph " + std::to_string(gi) +
                         " violates the range";
            }
        }
    }
    return {"row_square_range", ok, detail};
}

// tau extremes and ordering on the fixed gallery. Low-order terms are
// dropped so that uniform rows are exactly uniform (the k=0 identity term
// would otherwise leave a diagonal spike of 1/(lambda+1) on every graph).
inline CheckResult check_tau_gallery(Level) {
    DiffusionConfig cfg;
    cfg.lambda = 32.0;
    cfg.K = 32;
    cfg.drop_low_order = true;
    auto tau_of = [&](GalleryGraph which) {
        const Graph g = generate_gallery(which);
        const TransitionMatrix t = build_transition(normalize(g, NormKind::row_stochastic));
        return connectivity_factor(materialize_diffusion(t, cfg)).tau;
    };
    const double tau_iso = tau_of(GalleryGraph::isolated);
    const double tau_star = tau_of(GalleryGraph::star4);
    const double tau_complete = tau_of(GalleryGraph::complete4);
    const double tau_dec = tau_of(GalleryGraph::decentralized12);
    const bool pass = tau_iso == 4.0 && std::abs(tau_complete - 1.0) < 1e-9 &&
                      tau_iso > tau_star && tau_star > tau_complete && tau_dec >= 1.0 &&
                      tau_dec <= 12.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "tau: isolated=%.6f star=%.6f complete=%.6f decentralized12=%.6f",
                  tau_iso, tau_star, tau_complete, tau_dec);
    return {"tau_gallery", pass, buf};
}

// The truncated series approaches the dense closed-form solve, and the
// truncation error shrinks when K doubles.
inline CheckResult check_oracle_equivalence(Level level) {
    const std::size_t graphs = level == Level::full ? 5 : 2;
    bool ok = true;
    double worst_limit = 0.0;
    for (std::size_t gi = 0; gi < graphs && ok; ++gi) {
        const Graph g = random_gnp(30, 0.15, 3000 + gi);
        const NormalizedAdjacency na = normalize(g, NormKind::row_stochastic);
        rng::Engine eng(rng::derive(3100 + gi, rng::Stream::generic));
        FeatureMatrix x(30, 4);
        for (double& v : x.a) v = eng.normal();
        const TransitionMatrix t = build_transition(na);

        // lambda=1: K=500 sits far past convergence
        {
            const FeatureMatrix oracle = closed_form_oracle(na, x, 1.0, 0.0);
            DiffusionConfig cfg;
            cfg.lambda = 1.0;
            cfg.K = 500;
            const double err =
                relative_frobenius_error(diffuse_features(t, x, cfg), oracle);
            worst_limit = std::max(worst_limit, err);
            if (err >= 1e-8) ok = false;
        }
        // lambda=4 keeps the K=128 term above double roundoff, so halving
        // errors stay strictly ordered
        {
            const FeatureMatrix oracle = closed_form_oracle(na, x, 4.0, 0.0);
            double prev = 1e300;
            for (const unsigned K : {4u, 8u, 16u, 32u, 64u, 128u}) {
                DiffusionConfig cfg;
                cfg.lambda = 4.0;
                cfg.K = K;
                const double err =
                    relative_frobenius_error(diffuse_features(t, x, cfg), oracle);
                if (err >= prev) ok = false;
                prev = err;
            }
        }
    }
    return {"oracle_equivalence", ok,
            "max relative error at K=500: " + std::to_string(worst_limit)};
}

// Monte-Carlo check of the high-probability noise bound on a graph whose
// connectivity factor sits at the n extreme.
inline CheckResult check_noise_bound_monte_carlo(Level level) {
    const std::size_t trials = level == Level::full ? 1000 : 200;
    const std::size_t n = 200, d = 10;
    const Graph g = random_gnp_with_isolated_node(n, 0.3, 4000);
    const TransitionMatrix t = build_transition(normalize(g, NormKind::row_stochastic));
    DiffusionConfig cfg;
    cfg.lambda = 32.0;
    cfg.K = 16;
    const ConnectivityFactor cf = connectivity_factor(materialize_diffusion(t, cfg));
    const double bound = noise_bound(n, d, cf.tau, cfg.lambda, cfg.K, 1.0);
    const std::vector<double> norms = empirical_noise_norms(t, cfg, d, 1.0, trials, 4000);
    std::size_t violations = 0;
    for (double v : norms)
        if (v > bound) ++violations;
    const double fraction = static_cast<double>(violations) / static_cast<double>(trials);
    const double allowed = 1.0 / static_cast<double>(d) + 0.02;
    char buf[160];
    std::snprintf(buf, sizeof buf, "tau=%.3f bound=%.4f violations=%zu/%zu (allowed %.2f)",
                  cf.tau, bound, violations, trials, allowed);
    return {"noise_bound_monte_carlo", fraction <= allowed, buf};
}

// Diffusion strictly contracts iid noise: ||S Y||_F < ||Y||_F / 3 on every
// trial at this connectivity.
inline CheckResult check_noise_contraction(Level level) {
    const std::size_t trials = level == Level::full ? 200 : 50;
    SbmSpec spec;
    spec.n = 500;
    spec.blocks = 2;
    spec.p_in = 0.04;
    spec.p_out = 0.004;
    spec.seed = 4100;
    const auto [g, ds] = generate_sbm(spec);
    const TransitionMatrix t = build_transition(normalize(g, NormKind::row_stochastic));
    DiffusionConfig cfg;
    cfg.lambda = 32.0;
    cfg.K = 16;
    const std::size_t d = 10;
    const std::vector<double> norms = empirical_noise_norms(t, cfg, d, 1.0, trials, 4100);
    // E||Y||_F^2 = n*d; each trial draws its own Y, so compare against the
    // exact same draws
    bool ok = true;
    double worst_ratio = 0.0;
    for (std::size_t r = 0; r < trials; ++r) {
        rng::Engine eng(rng::derive(4100, rng::Stream::noise_trial, r));
        double raw = 0.0;
        for (std::size_t i = 0; i < spec.n * d; ++i) {
            const double v = eng.normal();
            raw += v * v;
        }
        const double ratio = std::sqrt(norms[r] / raw);
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio >= 1.0 / 3.0) ok = false;
    }
    return {"noise_contraction", ok,
            "max ||SY||/||Y|| = " + std::to_string(worst_ratio) + " over " +
                std::to_string(trials) + " trials"};
}

// Sample mean of ||S Y||_F^2 on the isolated graph matches the exact
// expectation beta^2 * sigma^2 * n * d.
inline CheckResult check_noise_mean_isolated(Level level) {
    const std::size_t trials = level == Level::full ? 10000 : 2000;
    const std::size_t n = 30, d = 5;
    const Graph g(n);
    const TransitionMatrix t = build_transition(normalize(g, NormKind::row_stochastic));
    DiffusionConfig cfg;
    cfg.lambda = 32.0;
    cfg.K = 16;
    const double beta = beta_row_sum(cfg.lambda, cfg.K);
    const std::vector<double> norms = empirical_noise_norms(t, cfg, d, 1.0, trials, 4200);
    double mean = 0.0;
    for (double v : norms) mean += v;
    mean /= static_cast<double>(trials);
    const double expect = beta * beta * static_cast<double>(n * d);
    const double rel = std::abs(mean - expect) / expect;
    return {"noise_mean_isolated", rel < 0.05,
            "sample mean " + std::to_string(mean) + " vs exact " + std::to_string(expect)};
}

// X-substituted solution against a random candidate, both plugged into the
// self-consistent series with the similarity term rebuilt from the
// candidate. The approximate solution's residual should be smaller by a
// wide margin.
inline CheckResult check_residual_comparison(Level) {
    SbmSpec spec;
    spec.n = 100;
    spec.blocks = 2;
    spec.p_in = 0.08;
    spec.p_out = 0.02;
    spec.d = 8;
    spec.seed = 4300;
    const auto [g, ds] = generate_sbm(spec);
    const FeatureMatrix x = row_normalize_features(ds.features);
    const NormalizedAdjacency na = normalize(g, NormKind::symmetric);
    DiffusionConfig cfg;
    cfg.lambda = 32.0;
    cfg.K = 16;
    cfg.epsilon = 1.0;
    cfg.option = TransitionOption::option2;
    cfg.kind = NormKind::symmetric;

    const TransitionMatrix t_x =
        build_transition(na, phi_option2(x), cfg.epsilon, TransitionOption::option2);
    const FeatureMatrix f_approx = diffuse_features(t_x, x, cfg);
    const TransitionMatrix t_f =
        build_transition(na, phi_option2(f_approx), cfg.epsilon, TransitionOption::option2);
    const double res_approx = residual_norm(f_approx, t_f, x, cfg);

    rng::Engine eng(rng::derive(4300, rng::Stream::generic));
    FeatureMatrix f_rand(x.rows, x.cols);
    for (double& v : f_rand.a) v = eng.normal();
    const TransitionMatrix t_r =
        build_transition(na, phi_option2(f_rand), cfg.epsilon, TransitionOption::option2);
    const double res_rand = residual_norm(f_rand, t_r, x, cfg);

    const bool pass = res_approx * 50.0 < res_rand;
    char buf[160];
    std::snprintf(buf, sizeof buf, "residuals: substituted=%.6g random=%.6g ratio=%.1f",
                  res_approx, res_rand, res_rand / std::max(res_approx, 1e-300));
    return {"residual_comparison", pass, buf};
}

inline CheckResult check_gradients(Level level) {
    const std::size_t trials = level == Level::full ? 10 : 4;
    HeadConfig lin;
    lin.kind = HeadKind::linear;
    lin.seed = 4400;
    const GradientCheckReport a = gradient_check(lin, trials, 1e-6);
    HeadConfig mlp;
    mlp.kind = HeadKind::mlp2;
    mlp.hidden = 8;
    mlp.seed = 4401;
    const GradientCheckReport b = gradient_check(mlp, trials, 1e-5);
    char buf[160];
    std::snprintf(buf, sizeof buf, "max rel diff: linear=%.3g mlp2=%.3g",
                  a.max_relative_difference, b.max_relative_difference);
    return {"gradient_check", a.pass && b.pass, buf};
}

// Full series minus the first two terms equals the dropped-order series.
inline CheckResult check_drop_low_order(Level) {
    const Graph g = random_gnp(25, 0.2, 4500);
    const NormalizedAdjacency na = normalize(g, NormKind::row_stochastic);
    const TransitionMatrix t = build_transition(na);
    rng::Engine eng(rng::derive(4500, rng::Stream::generic));
    FeatureMatrix x(25, 3);
    for (double& v : x.a) v = eng.normal();
    DiffusionConfig full;
    full.lambda = 8.0;
    full.K = 12;
    DiffusionConfig dropped = full;
    dropped.drop_low_order = true;

    DenseMatrix low = x;
    DenseMatrix tx = spmm(na.matrix, x);
    tx *= full.gamma();
    low += tx;
    low *= full.alpha();
    DenseMatrix expect = diffuse_features(t, x, full);
    expect -= low;
    const double err = relative_frobenius_error(diffuse_features(t, x, dropped), expect);
    return {"drop_low_order_consistency", err < 1e-10,
            "relative error " + std::to_string(err)};
}

inline std::vector<CheckResult> run_all(Level level) {
    return {
        check_row_sum_lemma(level),        check_row_square_range(level),
        check_tau_gallery(level),          check_oracle_equivalence(level),
        check_noise_bound_monte_carlo(level), check_noise_contraction(level),
        check_noise_mean_isolated(level),  check_residual_comparison(level),
        check_gradients(level),            check_drop_low_order(level),
    };
}

} // namespace gadc::verify
