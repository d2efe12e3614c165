#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gadc/dense.hpp"
#include "gadc/errors.hpp"
#include "gadc/graph.hpp"
#include "gadc/rng.hpp"
#include "gadc/transition.hpp"

namespace gadc {

struct DiffusionConfig {
    double lambda = 32.0;
    unsigned K = 16;
    double epsilon = 0.0;
    TransitionOption option = TransitionOption::plain;
    NormKind kind = NormKind::row_stochastic;
    bool drop_low_order = false;  // discard the k = 0 and k = 1 terms

    void validate() const {
        if (!(lambda > 0.0)) throw domain_error("diffusion config: lambda must be > 0");
        if (epsilon < 0.0) throw domain_error("diffusion config: epsilon must be >= 0");
        if (drop_low_order && K < 2)
            throw domain_error("diffusion config: drop_low_order requires K >= 2");
    }

    double alpha() const { return 1.0 / (lambda + 1.0); }
    double gamma() const { return lambda / (lambda + 1.0); }
};

// Common row sum of the truncated series when the transition is a
// probability matrix: 1 - (lambda/(lambda+1))^(K+1).
inline double beta_row_sum(double lambda, unsigned K) {
    return 1.0 - std::pow(lambda / (lambda + 1.0), static_cast<double>(K) + 1.0);
}

struct DiffusionReport {
    double beta = 0.0;
    double tau = 0.0;
    std::vector<double> tau_per_node;
    std::optional<double> residual_norm;
    std::optional<double> noise_bound;
    std::optional<std::vector<double>> empirical_norms;
};

// F = alpha * sum_{k=k0}^{K} gamma^k T^k X, evaluated with a running power
// vector P <- gamma * T * P starting from P = X. T^k is never materialized.
inline FeatureMatrix diffuse_features(const TransitionMatrix& t, const FeatureMatrix& x,
                                      const DiffusionConfig& cfg) {
    cfg.validate();
    if (t.n() != x.rows) throw input_error("diffuse: transition and feature shapes disagree");
    const double gamma = cfg.gamma();
    const unsigned k0 = cfg.drop_low_order ? 2u : 0u;

    DenseMatrix power = x;
    DenseMatrix acc(x.rows, x.cols);
    if (k0 == 0) acc += power;
    for (unsigned k = 1; k <= cfg.K; ++k) {
        power = t.apply(power);
        power *= gamma;
        if (!power.all_finite())
            throw numeric_error("diffusion series: non-finite values at power k=" +
                                std::to_string(k));
        if (k >= k0) acc += power;
    }
    acc *= cfg.alpha();
    return acc;
}

// Explicit dense S for small-n verification. diffuse_features(t, X, cfg)
// equals S * X.
inline DenseMatrix materialize_diffusion(const TransitionMatrix& t, const DiffusionConfig& cfg,
                                         std::size_t cap = 2000) {
    cfg.validate();
    const std::size_t n = t.n();
    if (n > cap)
        throw capacity_error("materialize: " + std::to_string(n) + " nodes exceeds cap " +
                             std::to_string(cap));
    return diffuse_features(t, DenseMatrix::identity(n), cfg);
}

// Dense reference solve of F = (I + lambda*L + lambda*eps*X X^T/||X X^T||_F)^{-1} X.
// The geometric series converges to this inverse, so it anchors convergence
// tests for the truncated series.
inline FeatureMatrix closed_form_oracle(const NormalizedAdjacency& na, const FeatureMatrix& x,
                                        double lambda, double epsilon, std::size_t cap = 2000) {
    const std::size_t n = na.n();
    if (n > cap)
        throw capacity_error("oracle: " + std::to_string(n) + " nodes exceeds cap " +
                             std::to_string(cap));
    if (x.rows != n) throw input_error("oracle: feature rows != node count");

    DenseMatrix system = laplacian(na).to_dense();
    system *= lambda;
    for (std::size_t i = 0; i < n; ++i) system(i, i) += 1.0;
    if (epsilon > 0.0) {
        const DenseMatrix phi = phi_option2(x, n);
        for (std::size_t i = 0; i < n * n; ++i)
            system.a[i] += lambda * epsilon * phi.a[i];
    }
    return solve_linear_system(std::move(system), x);
}

// Frobenius norm of F_candidate - alpha * sum_k gamma^k T^k X for the given
// fixed transition. Self-consistency harnesses rebuild T from the candidate
// before calling this.
inline double residual_norm(const FeatureMatrix& f_candidate, const TransitionMatrix& t,
                            const FeatureMatrix& x, const DiffusionConfig& cfg) {
    DenseMatrix series = diffuse_features(t, x, cfg);
    series -= f_candidate;
    return frobenius_norm(series);
}

struct ConnectivityFactor {
    double tau = 0.0;
    std::vector<double> tau_per_node;
};

// tau_i = n * sum_j S_ij^2 / (sum_j S_ij)^2, tau = max_i tau_i. Defined for
// the nonnegative (epsilon = 0, row-stochastic) regime; tau lies in [1, n],
// with 1 for uniform rows and n for one-entry rows.
inline ConnectivityFactor connectivity_factor(const DenseMatrix& s) {
    const std::size_t n = s.rows;
    ConnectivityFactor out;
    out.tau_per_node.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = s(i, j);
            if (v < 0.0)
                throw domain_error("connectivity factor: negative entry at row " +
                                   std::to_string(i) +
                                   "; the factor is defined only for nonnegative S");
            sum += v;
            sq += v * v;
        }
        if (sum == 0.0)
            throw domain_error("connectivity factor: row " + std::to_string(i) +
                               " sums to zero");
        out.tau_per_node[i] = static_cast<double>(n) * sq / (sum * sum);
        out.tau = std::max(out.tau, out.tau_per_node[i]);
    }
    return out;
}

// High-probability (1 - 1/d) bound on ||S Y||_F^2 for iid sub-Gaussian noise
// with parameter sigma: 2*tau*beta^2*sigma^2*(4 log n + log 2d)/n.
inline double noise_bound(std::size_t n, std::size_t d, double tau, double lambda, unsigned K,
                          double sigma) {
    if (n == 0 || d == 0) throw domain_error("noise bound: n and d must be positive");
    if (!(tau >= 1.0)) throw domain_error("noise bound: tau must be >= 1");
    if (!(lambda > 0.0) || !(sigma > 0.0))
        throw domain_error("noise bound: lambda and sigma must be positive");
    const double beta = beta_row_sum(lambda, K);
    const double logs = 4.0 * std::log(static_cast<double>(n)) +
                        std::log(2.0 * static_cast<double>(d));
    return 2.0 * tau * beta * beta * sigma * sigma * logs / static_cast<double>(n);
}

// Per-trial squared Frobenius norms of S * Y with Y ~ iid Gaussian(0, sigma^2).
// Trial r draws from the derived stream (seed, noise_trial, r), so extending
// the trial count never reshuffles earlier trials.
inline std::vector<double> empirical_noise_norms(const TransitionMatrix& t,
                                                 const DiffusionConfig& cfg, std::size_t d,
                                                 double sigma, std::size_t trials,
                                                 std::uint64_t seed) {
    const std::size_t n = t.n();
    std::vector<double> out;
    out.reserve(trials);
    for (std::size_t r = 0; r < trials; ++r) {
        rng::Engine eng(rng::derive(seed, rng::Stream::noise_trial, r));
        DenseMatrix noise(n, d);
        for (double& v : noise.a) v = sigma * eng.normal();
        const DenseMatrix sy = diffuse_features(t, noise, cfg);
        const double norm = frobenius_norm(sy);
        out.push_back(norm * norm);
    }
    return out;
}

} // namespace gadc
