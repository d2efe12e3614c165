#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gadc/dense.hpp"
#include "gadc/errors.hpp"
#include "gadc/features.hpp"
#include "gadc/rng.hpp"

namespace gadc {

enum class HeadKind { linear, mlp2 };

inline const char* to_string(HeadKind k) { return k == HeadKind::linear ? "linear" : "mlp2"; }

struct HeadConfig {
    HeadKind kind = HeadKind::linear;
    std::size_t hidden = 32;  // mlp2 only
    double dropout = 0.0;
    double lr = 0.2;
    double weight_decay = 1e-5;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lr > 0.0)) throw domain_error("head config: lr must be > 0");
        if (weight_decay < 0.0) throw domain_error("head config: weight_decay must be >= 0");
        if (dropout < 0.0 || dropout >= 1.0)
            throw domain_error("head config: dropout must be in [0, 1)");
        if (kind == HeadKind::mlp2 && hidden < 1)
            throw domain_error("head config: mlp2 needs hidden >= 1");
    }
};

// Layer weights and biases. For the linear head only w1/b1 are used.
struct HeadParams {
    HeadKind kind = HeadKind::linear;
    DenseMatrix w1;           // in x hidden (mlp2) or in x classes (linear)
    std::vector<double> b1;
    DenseMatrix w2;           // hidden x classes (mlp2)
    std::vector<double> b2;
};

inline HeadParams init_head_params(HeadKind kind, std::size_t in_dim, std::size_t classes,
                                   std::size_t hidden, std::uint64_t seed) {
    rng::Engine eng(rng::derive(seed, rng::Stream::head_init));
    auto fill = [&](DenseMatrix& w, std::size_t fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : w.a) v = (2.0 * eng.uniform01() - 1.0) * s;
    };
    HeadParams p;
    p.kind = kind;
    if (kind == HeadKind::linear) {
        p.w1 = DenseMatrix(in_dim, classes);
        p.b1.assign(classes, 0.0);
        fill(p.w1, in_dim);
    } else {
        p.w1 = DenseMatrix(in_dim, hidden);
        p.b1.assign(hidden, 0.0);
        p.w2 = DenseMatrix(hidden, classes);
        p.b2.assign(classes, 0.0);
        fill(p.w1, in_dim);
        fill(p.w2, hidden);
    }
    return p;
}

// Inverted-dropout mask: entries are 0 with probability p, else 1/(1-p).
// Pinned to the derived (seed, dropout) stream so a given seed always yields
// the same mask shape-for-shape.
inline DenseMatrix dropout_mask(std::size_t rows, std::size_t cols, double p,
                                std::uint64_t seed) {
    rng::Engine eng(rng::derive(seed, rng::Stream::dropout));
    DenseMatrix m(rows, cols, 1.0);
    if (p <= 0.0) return m;
    const double keep = 1.0 - p;
    for (double& v : m.a) v = eng.bernoulli(p) ? 0.0 : 1.0 / keep;
    return m;
}

namespace detail {
inline void add_bias(DenseMatrix& z, const std::vector<double>& b) {
    for (std::size_t i = 0; i < z.rows; ++i) {
        double* zi = z.row(i);
        for (std::size_t j = 0; j < z.cols; ++j) zi[j] += b[j];
    }
}
} // namespace detail

// Class scores Z. Linear: Z = F W + b. mlp2: Z = relu(F W1 + b1) W2 + b2,
// with the dropout mask applied to the hidden activations (training only).
// The linear head applies dropout to its input when configured.
inline DenseMatrix forward(const HeadParams& p, const DenseMatrix& f, bool training,
                           double dropout_p, std::uint64_t seed) {
    if (p.kind == HeadKind::linear) {
        DenseMatrix in = f;
        if (training && dropout_p > 0.0) {
            const DenseMatrix mask = dropout_mask(f.rows, f.cols, dropout_p, seed);
            for (std::size_t i = 0; i < in.a.size(); ++i) in.a[i] *= mask.a[i];
        }
        DenseMatrix z = in * p.w1;
        detail::add_bias(z, p.b1);
        return z;
    }
    DenseMatrix h = f * p.w1;
    detail::add_bias(h, p.b1);
    for (double& v : h.a) v = std::max(v, 0.0);
    if (training && dropout_p > 0.0) {
        const DenseMatrix mask = dropout_mask(h.rows, h.cols, dropout_p, seed);
        for (std::size_t i = 0; i < h.a.size(); ++i) h.a[i] *= mask.a[i];
    }
    DenseMatrix z = h * p.w2;
    detail::add_bias(z, p.b2);
    return z;
}

// Mean softmax cross-entropy over the given rows. Scores are shifted by the
// row max before exponentiation.
inline double cross_entropy(const DenseMatrix& scores, const std::vector<int>& labels,
                            const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw domain_error("cross entropy: empty index set");
    double total = 0.0;
    for (std::size_t r : rows) {
        const double* z = scores.row(r);
        double zmax = z[0];
        for (std::size_t c = 1; c < scores.cols; ++c) zmax = std::max(zmax, z[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < scores.cols; ++c) denom += std::exp(z[c] - zmax);
        total += std::log(denom) - (z[labels[r]] - zmax);
    }
    return total / static_cast<double>(rows.size());
}

struct HeadGradients {
    DenseMatrix w1;
    std::vector<double> b1;
    DenseMatrix w2;
    std::vector<double> b2;
};

// Analytic gradient of the mean cross-entropy over all rows of f (callers
// pass pre-gathered training rows). Dropout masks, when supplied, must match
// the ones used in the corresponding forward pass.
inline HeadGradients backward(const HeadParams& p, const DenseMatrix& f,
                              const std::vector<int>& labels, const DenseMatrix* hidden_mask,
                              const DenseMatrix* input_mask, double& loss_out) {
    const std::size_t nrows = f.rows;
    if (nrows == 0) throw domain_error("backward: empty batch");

    DenseMatrix in = f;
    if (input_mask)
        for (std::size_t i = 0; i < in.a.size(); ++i) in.a[i] *= input_mask->a[i];

    DenseMatrix h, hpre;
    DenseMatrix z;
    if (p.kind == HeadKind::linear) {
        z = in * p.w1;
        detail::add_bias(z, p.b1);
    } else {
        hpre = in * p.w1;
        detail::add_bias(hpre, p.b1);
        h = hpre;
        for (double& v : h.a) v = std::max(v, 0.0);
        if (hidden_mask)
            for (std::size_t i = 0; i < h.a.size(); ++i) h.a[i] *= hidden_mask->a[i];
        z = h * p.w2;
        detail::add_bias(z, p.b2);
    }

    // softmax and loss
    double loss = 0.0;
    DenseMatrix g(nrows, z.cols);  // dL/dZ
    for (std::size_t i = 0; i < nrows; ++i) {
        const double* zi = z.row(i);
        double* gi = g.row(i);
        double zmax = zi[0];
        for (std::size_t c = 1; c < z.cols; ++c) zmax = std::max(zmax, zi[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < z.cols; ++c) {
            gi[c] = std::exp(zi[c] - zmax);
            denom += gi[c];
        }
        loss += std::log(denom) - (zi[labels[i]] - zmax);
        for (std::size_t c = 0; c < z.cols; ++c) gi[c] /= denom;
        gi[labels[i]] -= 1.0;
    }
    loss /= static_cast<double>(nrows);
    g *= 1.0 / static_cast<double>(nrows);
    loss_out = loss;

    HeadGradients grads;
    if (p.kind == HeadKind::linear) {
        grads.w1 = transpose(in) * g;
        grads.b1.assign(z.cols, 0.0);
        for (std::size_t i = 0; i < nrows; ++i)
            for (std::size_t c = 0; c < z.cols; ++c) grads.b1[c] += g(i, c);
    } else {
        grads.w2 = transpose(h) * g;
        grads.b2.assign(z.cols, 0.0);
        for (std::size_t i = 0; i < nrows; ++i)
            for (std::size_t c = 0; c < z.cols; ++c) grads.b2[c] += g(i, c);
        DenseMatrix dh = g * transpose(p.w2);
        if (hidden_mask)
            for (std::size_t i = 0; i < dh.a.size(); ++i) dh.a[i] *= hidden_mask->a[i];
        for (std::size_t i = 0; i < dh.a.size(); ++i)
            if (hpre.a[i] <= 0.0) dh.a[i] = 0.0;
        grads.w1 = transpose(in) * dh;
        grads.b1.assign(p.b1.size(), 0.0);
        for (std::size_t i = 0; i < nrows; ++i)
            for (std::size_t c = 0; c < p.b1.size(); ++c) grads.b1[c] += dh(i, c);
    }
    return grads;
}

struct EpochLog {
    double loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainedHead {
    HeadConfig config;
    HeadParams best;    // snapshot with the highest validation accuracy
    HeadParams last;    // parameters after the last epoch
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
};

inline double accuracy_of_scores(const DenseMatrix& scores, const std::vector<int>& labels,
                                 const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw domain_error("accuracy: empty index set");
    std::size_t correct = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double* z = scores.row(k);
        std::size_t arg = 0;  // ties break toward the lowest class index
        for (std::size_t c = 1; c < scores.cols; ++c)
            if (z[c] > z[arg]) arg = c;
        if (static_cast<int>(arg) == labels[rows[k]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

namespace detail {
inline DenseMatrix gather_rows(const DenseMatrix& x, const std::vector<std::size_t>& rows) {
    DenseMatrix out(rows.size(), x.cols);
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t j = 0; j < x.cols; ++j) out(k, j) = x(rows[k], j);
    return out;
}
inline std::vector<int> gather_labels(const std::vector<int>& labels,
                                      const std::vector<std::size_t>& rows) {
    std::vector<int> out(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) out[k] = labels[rows[k]];
    return out;
}
} // namespace detail

// Full-batch gradient descent on softmax cross-entropy with decoupled L2
// weight decay (weights only, not biases). f is the already-diffused feature
// matrix; this head never sees the graph. Deterministic per (inputs, config).
inline TrainedHead train_head(const FeatureMatrix& f, const LabeledDataset& ds,
                              const HeadConfig& cfg) {
    cfg.validate();
    if (f.rows != ds.labels.size()) throw input_error("train: feature rows != label count");
    if (ds.train.empty()) throw domain_error("train: empty training split");

    const std::size_t classes = ds.num_classes;
    TrainedHead th;
    th.config = cfg;
    HeadParams p = init_head_params(cfg.kind, f.cols, classes, cfg.hidden, cfg.seed);
    th.best = p;
    th.last = p;
    th.best_epoch = 0;
    th.best_val_accuracy = -1.0;

    const DenseMatrix f_train = detail::gather_rows(f, ds.train);
    const std::vector<int> y_train = detail::gather_labels(ds.labels, ds.train);
    const DenseMatrix f_val = ds.val.empty() ? DenseMatrix() : detail::gather_rows(f, ds.val);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::uint64_t mask_seed = rng::derive(cfg.seed, rng::Stream::dropout, epoch);
        DenseMatrix hidden_mask, input_mask;
        const DenseMatrix* hm = nullptr;
        const DenseMatrix* im = nullptr;
        if (cfg.dropout > 0.0) {
            if (cfg.kind == HeadKind::mlp2) {
                hidden_mask = dropout_mask(f_train.rows, cfg.hidden, cfg.dropout, mask_seed);
                hm = &hidden_mask;
            } else {
                input_mask = dropout_mask(f_train.rows, f_train.cols, cfg.dropout, mask_seed);
                im = &input_mask;
            }
        }

        double loss = 0.0;
        HeadGradients g = backward(p, f_train, y_train, hm, im, loss);
        if (!std::isfinite(loss))
            throw numeric_error("training diverged: non-finite loss at epoch " +
                                std::to_string(epoch));

        auto step = [&](DenseMatrix& w, const DenseMatrix& gw) {
            for (std::size_t i = 0; i < w.a.size(); ++i)
                w.a[i] -= cfg.lr * (gw.a[i] + cfg.weight_decay * w.a[i]);
        };
        auto step_bias = [&](std::vector<double>& b, const std::vector<double>& gb) {
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.lr * gb[i];
        };
        step(p.w1, g.w1);
        step_bias(p.b1, g.b1);
        if (cfg.kind == HeadKind::mlp2) {
            step(p.w2, g.w2);
            step_bias(p.b2, g.b2);
        }

        double val_acc = 0.0;
        if (!ds.val.empty()) {
            const DenseMatrix scores = forward(p, f_val, false, 0.0, 0);
            std::vector<std::size_t> local(ds.val.size());
            for (std::size_t k = 0; k < local.size(); ++k) local[k] = k;
            const std::vector<int> y_val = detail::gather_labels(ds.labels, ds.val);
            std::size_t correct = 0;
            for (std::size_t k = 0; k < local.size(); ++k) {
                const double* z = scores.row(k);
                std::size_t arg = 0;
                for (std::size_t c = 1; c < scores.cols; ++c)
                    if (z[c] > z[arg]) arg = c;
                if (static_cast<int>(arg) == y_val[k]) ++correct;
            }
            val_acc = static_cast<double>(correct) / static_cast<double>(ds.val.size());
        }
        th.log.push_back({loss, val_acc});
        if (val_acc > th.best_val_accuracy) {  // earliest epoch wins ties
            th.best_val_accuracy = val_acc;
            th.best = p;
            th.best_epoch = epoch;
        }
    }
    th.last = p;
    if (cfg.epochs == 0 || ds.val.empty()) th.best = th.last;
    return th;
}

enum class SplitName { train, val, test };

// Fraction of argmax-correct predictions of the best-validation snapshot on
// the chosen split.
inline double evaluate(const TrainedHead& head, const FeatureMatrix& f,
                       const LabeledDataset& ds, SplitName split) {
    const std::vector<std::size_t>& idx = split == SplitName::train ? ds.train
                                        : split == SplitName::val   ? ds.val
                                                                    : ds.test;
    if (idx.empty()) throw domain_error("evaluate: empty split");
    const DenseMatrix rows = detail::gather_rows(f, idx);
    const DenseMatrix scores = forward(head.best, rows, false, 0.0, 0);
    return accuracy_of_scores(scores, ds.labels, idx);
}

// ---- finite-difference gradient check -------------------------------------

struct GradientCheckReport {
    std::size_t trials = 0;
    double max_relative_difference = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Central finite differences (step 1e-5) against the analytic gradients on
// small random instances, dropout disabled. mlp2 instances are redrawn when
// any hidden pre-activation sits within 1e-3 of the relu kink.
inline GradientCheckReport gradient_check(const HeadConfig& cfg, std::size_t trials,
                                          double tolerance) {
    const double h = 1e-5;
    const std::size_t n = 7, d = 5, classes = 3;
    GradientCheckReport report;
    report.trials = trials;
    report.tolerance = tolerance;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        DenseMatrix f;
        std::vector<int> labels(n);
        HeadParams p;
        for (std::uint64_t attempt = 0;; ++attempt) {
            rng::Engine eng(rng::derive(cfg.seed, rng::Stream::generic,
                                        trial * 1000 + attempt));
            f = DenseMatrix(n, d);
            for (double& v : f.a) v = eng.normal();
            for (std::size_t i = 0; i < n; ++i)
                labels[i] = static_cast<int>(eng.uniform_below(classes));
            p = init_head_params(cfg.kind, d, classes, cfg.hidden,
                                 rng::derive(cfg.seed, rng::Stream::generic,
                                             900000 + trial * 1000 + attempt));
            if (cfg.kind == HeadKind::linear) break;
            DenseMatrix hpre = f * p.w1;
            detail::add_bias(hpre, p.b1);
            bool near_kink = false;
            for (double v : hpre.a)
                if (std::abs(v) < 1e-3) near_kink = true;
            if (!near_kink) break;
            if (attempt > 50) break;  // give up avoiding kinks; still checked
        }

        double loss = 0.0;
        const HeadGradients analytic = backward(p, f, labels, nullptr, nullptr, loss);

        auto loss_at = [&]() {
            const DenseMatrix z = forward(p, f, false, 0.0, 0);
            std::vector<std::size_t> all(n);
            for (std::size_t i = 0; i < n; ++i) all[i] = i;
            return cross_entropy(z, labels, all);
        };
        auto check_param = [&](double& theta, double analytic_g) {
            const double orig = theta;
            theta = orig + h;
            const double lp = loss_at();
            theta = orig - h;
            const double lm = loss_at();
            theta = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double rel = std::abs(analytic_g - numeric) /
                               std::max({1.0, std::abs(analytic_g), std::abs(numeric)});
            report.max_relative_difference = std::max(report.max_relative_difference, rel);
        };

        for (std::size_t i = 0; i < p.w1.a.size(); ++i) check_param(p.w1.a[i], analytic.w1.a[i]);
        for (std::size_t i = 0; i < p.b1.size(); ++i) check_param(p.b1[i], analytic.b1[i]);
        if (cfg.kind == HeadKind::mlp2) {
            for (std::size_t i = 0; i < p.w2.a.size(); ++i)
                check_param(p.w2.a[i], analytic.w2.a[i]);
            for (std::size_t i = 0; i < p.b2.size(); ++i) check_param(p.b2[i], analytic.b2[i]);
        }
    }
    report.pass = report.max_relative_difference < tolerance;
    return report;
}

// ---- serialization ---------------------------------------------------------

// Writes layer matrices to the binary matrix container plus a JSON manifest
// and the training log as CSV.
inline void save_trained_head(const std::string& prefix, const TrainedHead& head) {
    auto write_matrix = [&](const std::string& name, const DenseMatrix& m) {
        std::ofstream out(prefix + name, std::ios::binary);
        if (!out) throw input_error("cannot write " + prefix + name);
        save_matrix_binary(out, m);
    };
    auto as_row = [](const std::vector<double>& v) {
        DenseMatrix m(1, v.size());
        m.a = v;
        return m;
    };
    write_matrix("_w1.mat", head.best.w1);
    write_matrix("_b1.mat", as_row(head.best.b1));
    if (head.config.kind == HeadKind::mlp2) {
        write_matrix("_w2.mat", head.best.w2);
        write_matrix("_b2.mat", as_row(head.best.b2));
    }

    nlohmann::json manifest;
    manifest["kind"] = to_string(head.config.kind);
    manifest["best_epoch"] = head.best_epoch;
    manifest["best_val_accuracy"] = head.best_val_accuracy;
    manifest["epochs"] = head.config.epochs;
    manifest["layers"] = head.config.kind == HeadKind::mlp2
                             ? nlohmann::json::array({"_w1.mat", "_b1.mat", "_w2.mat", "_b2.mat"})
                             : nlohmann::json::array({"_w1.mat", "_b1.mat"});
    std::ofstream mout(prefix + "_manifest.json");
    if (!mout) throw input_error("cannot write " + prefix + "_manifest.json");
    mout << manifest.dump(2) << '\n';

    std::ofstream lout(prefix + "_trainlog.csv");
    if (!lout) throw input_error("cannot write " + prefix + "_trainlog.csv");
    lout.precision(17);
    lout << "epoch,loss,val_acc\n";
    for (std::size_t e = 0; e < head.log.size(); ++e)
        lout << e << ',' << head.log[e].loss << ',' << head.log[e].val_accuracy << '\n';
}

} // namespace gadc
