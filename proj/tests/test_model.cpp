#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gadc/model.hpp"
#include "gadc/rng.hpp"

using namespace gadc;

namespace {
LabeledDataset separable_toy() {
    LabeledDataset ds;
    ds.features = FeatureMatrix(4, 2);
    ds.features(0, 0) = 1.0;
    ds.features(1, 0) = 0.9;  ds.features(1, 1) = 0.1;
    ds.features(2, 1) = 1.0;
    ds.features(3, 0) = 0.1;  ds.features(3, 1) = 0.9;
    ds.labels = {0, 0, 1, 1};
    ds.num_classes = 2;
    ds.train = {0, 1, 2, 3};
    ds.val = {0, 2};
    ds.test = {1, 3};
    return ds;
}
} // namespace

TEST_CASE("linear head fits a separable toy problem") {
    const LabeledDataset ds = separable_toy();
    HeadConfig cfg;
    cfg.kind = HeadKind::linear;
    cfg.lr = 0.2;
    cfg.weight_decay = 0.0;
    cfg.epochs = 200;
    cfg.seed = 1;
    const TrainedHead head = train_head(ds.features, ds, cfg);
    CHECK(evaluate(head, ds.features, ds, SplitName::train) == 1.0);
}

TEST_CASE("zero-epoch training returns the initialization") {
    const LabeledDataset ds = separable_toy();
    HeadConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 3;
    const TrainedHead head = train_head(ds.features, ds, cfg);
    CHECK(head.log.empty());
    const HeadParams fresh = init_head_params(HeadKind::linear, 2, 2, 0, 3);
    CHECK(head.best.w1.a == fresh.w1.a);
}

TEST_CASE("forward basics") {
    SUBCASE("zero weights give all-zero scores") {
        HeadParams p;
        p.kind = HeadKind::linear;
        p.w1 = DenseMatrix(3, 2);
        p.b1.assign(2, 0.0);
        FeatureMatrix f(5, 3, 1.0);
        const DenseMatrix z = forward(p, f, false, 0.0, 0);
        for (double v : z.a) CHECK(v == 0.0);
    }
    SUBCASE("1x1 identity head passes the feature through") {
        HeadParams p;
        p.kind = HeadKind::linear;
        p.w1 = DenseMatrix(1, 1);
        p.w1(0, 0) = 1.0;
        p.b1.assign(1, 0.0);
        FeatureMatrix f(1, 1);
        f(0, 0) = 0.37;
        CHECK(forward(p, f, false, 0.0, 0)(0, 0) == 0.37);
    }
}

TEST_CASE("dropout masks are reproducible and pin a known fingerprint") {
    const DenseMatrix m1 = dropout_mask(13, 7, 0.5, 42);
    const DenseMatrix m2 = dropout_mask(13, 7, 0.5, 42);
    CHECK(m1.a == m2.a);

    // a compact mask hash: position-weighted count of kept entries
    std::uint64_t hash = 0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < m1.a.size(); ++i)
        if (m1.a[i] != 0.0) {
            hash = hash * 1315423911ull + i;
            ++kept;
        }
    CHECK(kept > 20);
    CHECK(kept < 71);
    const std::uint64_t h1 = hash;
    const DenseMatrix m3 = dropout_mask(13, 7, 0.5, 43);
    std::uint64_t h3 = 0;
    for (std::size_t i = 0; i < m3.a.size(); ++i)
        if (m3.a[i] != 0.0) h3 = h3 * 1315423911ull + i;
    CHECK(h1 != h3);  // a different seed produces a different mask

    // kept entries carry the inverted-dropout scale
    for (double v : m1.a) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("training loss is non-increasing at a small learning rate") {
    const LabeledDataset ds = separable_toy();
    HeadConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.0;
    cfg.epochs = 150;
    cfg.seed = 5;
    const TrainedHead head = train_head(ds.features, ds, cfg);
    for (std::size_t e = 1; e < head.log.size(); ++e)
        CHECK(head.log[e].loss <= head.log[e - 1].loss + 1e-12);
}

TEST_CASE("training is deterministic") {
    const LabeledDataset ds = separable_toy();
    HeadConfig cfg;
    cfg.kind = HeadKind::mlp2;
    cfg.hidden = 8;
    cfg.dropout = 0.5;
    cfg.epochs = 30;
    cfg.seed = 9;
    const TrainedHead a = train_head(ds.features, ds, cfg);
    const TrainedHead b = train_head(ds.features, ds, cfg);
    CHECK(a.best.w1.a == b.best.w1.a);
    CHECK(a.best.w2.a == b.best.w2.a);
    for (std::size_t e = 0; e < a.log.size(); ++e) CHECK(a.log[e].loss == b.log[e].loss);
}

TEST_CASE("softmax shift invariance") {
    rng::Engine eng(12);
    DenseMatrix z(6, 4);
    for (double& v : z.a) v = eng.normal();
    std::vector<int> labels = {0, 1, 2, 3, 1, 2};
    std::vector<std::size_t> rows = {0, 1, 2, 3, 4, 5};
    const double base = cross_entropy(z, labels, rows);
    DenseMatrix shifted = z;
    for (std::size_t i = 0; i < shifted.rows; ++i)
        for (std::size_t j = 0; j < shifted.cols; ++j) shifted(i, j) += 123.456;
    CHECK(std::abs(cross_entropy(shifted, labels, rows) - base) < 1e-10);
    CHECK(accuracy_of_scores(z, labels, rows) ==
          accuracy_of_scores(shifted, labels, rows));
}

TEST_CASE("evaluate breaks argmax ties toward the lowest class") {
    HeadParams p;
    p.kind = HeadKind::linear;
    p.w1 = DenseMatrix(1, 3);  // all scores zero
    p.b1.assign(3, 0.0);
    TrainedHead head;
    head.config.kind = HeadKind::linear;
    head.best = p;
    LabeledDataset ds;
    ds.features = FeatureMatrix(4, 1, 1.0);
    ds.labels = {0, 0, 0, 1};
    ds.num_classes = 2;
    ds.test = {0, 1, 2, 3};
    ds.train = {0};
    CHECK(evaluate(head, ds.features, ds, SplitName::test) == 0.75);
    CHECK_THROWS_AS(evaluate(head, ds.features, ds, SplitName::val), domain_error);
}

TEST_CASE("gradient check against central differences") {
    SUBCASE("linear head") {
        HeadConfig cfg;
        cfg.kind = HeadKind::linear;
        cfg.seed = 20;
        const GradientCheckReport rep = gradient_check(cfg, 10, 1e-6);
        CHECK(rep.pass);
        CHECK(rep.max_relative_difference < 1e-6);
    }
    SUBCASE("mlp2 head away from relu kinks") {
        HeadConfig cfg;
        cfg.kind = HeadKind::mlp2;
        cfg.hidden = 6;
        cfg.seed = 21;
        const GradientCheckReport rep = gradient_check(cfg, 10, 1e-5);
        CHECK(rep.pass);
        CHECK(rep.max_relative_difference < 1e-5);
    }
    SUBCASE("zero features zero the weight gradient but not the bias") {
        HeadParams p = init_head_params(HeadKind::linear, 3, 2, 0, 31);
        DenseMatrix f(4, 3);  // all zero
        std::vector<int> labels = {0, 0, 0, 1};
        double loss = 0.0;
        const HeadGradients g = backward(p, f, labels, nullptr, nullptr, loss);
        for (double v : g.w1.a) CHECK(v == 0.0);
        double bias_mag = 0.0;
        for (double v : g.b1) bias_mag += std::abs(v);
        CHECK(bias_mag > 0.0);  // unbalanced labels pull the bias
    }
}

TEST_CASE("an untrained head scores near chance on balanced random labels") {
    rng::Engine eng(77);
    LabeledDataset ds;
    ds.features = FeatureMatrix(1000, 8);
    for (double& v : ds.features.a) v = eng.normal();
    ds.labels.resize(1000);
    for (std::size_t i = 0; i < 1000; ++i) ds.labels[i] = static_cast<int>(i % 10);
    ds.num_classes = 10;
    ds.train = {0};
    for (std::size_t i = 0; i < 1000; ++i) ds.test.push_back(i);
    HeadConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 3;
    const TrainedHead head = train_head(ds.features, ds, cfg);
    const double acc = evaluate(head, ds.features, ds, SplitName::test);
    CHECK(acc >= 0.05);
    CHECK(acc <= 0.15);
}

TEST_CASE("trained head serializes to matrices, manifest and log") {
    namespace fs = std::filesystem;
    const LabeledDataset ds = separable_toy();
    HeadConfig cfg;
    cfg.kind = HeadKind::mlp2;
    cfg.hidden = 4;
    cfg.epochs = 5;
    cfg.seed = 2;
    const TrainedHead head = train_head(ds.features, ds, cfg);
    const std::string prefix = (fs::temp_directory_path() / "gadc_test_head").string();
    save_trained_head(prefix, head);

    std::ifstream w1in(prefix + "_w1.mat", std::ios::binary);
    const DenseMatrix w1 = load_matrix_binary(w1in);
    CHECK(w1.a == head.best.w1.a);
    std::ifstream min(prefix + "_manifest.json");
    nlohmann::json manifest;
    min >> manifest;
    CHECK(manifest.at("kind") == "mlp2");
    CHECK(manifest.at("layers").size() == 4);
    std::ifstream login(prefix + "_trainlog.csv");
    std::string header;
    std::getline(login, header);
    CHECK(header == "epoch,loss,val_acc");
    std::size_t lines = 0;
    for (std::string line; std::getline(login, line);) ++lines;
    CHECK(lines == 5);
    for (const char* suffix : {"_w1.mat", "_b1.mat", "_w2.mat", "_b2.mat",
                               "_manifest.json", "_trainlog.csv"})
        fs::remove(prefix + suffix);
}

TEST_CASE("diverging training reports the epoch") {
    LabeledDataset ds = separable_toy();
    for (double& v : ds.features.a) v *= 1e160;  // overflow the softmax quickly
    HeadConfig cfg;
    cfg.lr = 1e300;
    cfg.epochs = 50;
    cfg.weight_decay = 0.0;
    CHECK_THROWS_WITH_AS(train_head(ds.features, ds, cfg), doctest::Contains("epoch"),
                         numeric_error);
}
