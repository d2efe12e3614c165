#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gadc/dense.hpp"
#include "gadc/errors.hpp"

namespace gadc {

// Scales each nonzero row to unit L1 norm; all-zero rows pass through.
inline FeatureMatrix row_normalize_features(const FeatureMatrix& x) {
    FeatureMatrix out = x;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) s += std::abs(x(i, j));
        if (s == 0.0) continue;
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(i, j) / s;
    }
    return out;
}

// ---- feature matrix I/O -------------------------------------------------

// Header-free CSV, one row per node.
inline FeatureMatrix load_features_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw input_error("features csv line " + std::to_string(lineno) +
                                  ": bad number \"" + cell + "\"");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw input_error("features csv line " + std::to_string(lineno) +
                              ": ragged row");
        rows.push_back(std::move(row));
    }
    FeatureMatrix x(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < x.cols; ++j) x(i, j) = rows[i][j];
    if (!x.all_finite()) throw input_error("features csv: non-finite entry");
    return x;
}

inline void save_features_csv(std::ostream& out, const FeatureMatrix& x) {
    out.precision(17);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            if (j) out << ',';
            out << x(i, j);
        }
        out << '\n';
    }
}

// Picks CSV vs binary container by sniffing the magic.
inline FeatureMatrix load_features_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open features file: " + path);
    char magic[8] = {};
    in.read(magic, 8);
    in.clear();
    in.seekg(0);
    if (std::memcmp(magic, kMatrixMagic, 8) == 0) return load_matrix_binary(in);
    return load_features_csv(in);
}

// ---- labels and splits --------------------------------------------------

struct LabeledDataset {
    FeatureMatrix features;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    std::vector<std::size_t> train, val, test;
};

// Throws unless the splits are disjoint subsets of [0, n) and every class in
// [0, C) appears at least once.
inline void validate_dataset(const LabeledDataset& ds) {
    const std::size_t n = ds.labels.size();
    if (ds.features.rows != n)
        throw input_error("dataset: feature rows != label count");
    std::vector<int> seen(ds.num_classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (ds.labels[i] < 0 || static_cast<std::size_t>(ds.labels[i]) >= ds.num_classes)
            throw input_error("dataset: label out of range at node " + std::to_string(i));
        seen[ds.labels[i]] = 1;
    }
    for (std::size_t c = 0; c < ds.num_classes; ++c)
        if (!seen[c]) throw input_error("dataset: class " + std::to_string(c) + " absent");
    std::vector<int> used(n, 0);
    auto mark = [&](const std::vector<std::size_t>& idx, const char* name) {
        for (std::size_t i : idx) {
            if (i >= n) throw input_error(std::string("dataset: ") + name + " index out of range");
            if (used[i]++) throw input_error("dataset: splits overlap at node " + std::to_string(i));
        }
    };
    mark(ds.train, "train");
    mark(ds.val, "val");
    mark(ds.test, "test");
}

// CSV with lines "node_id,label".
inline std::vector<int> load_labels_csv(std::istream& in, std::size_t n) {
    std::vector<int> labels(n, -1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b))
            throw input_error("labels csv line " + std::to_string(lineno) +
                              ": expected node_id,label");
        long long id, lab;
        try {
            id = std::stoll(a);
            lab = std::stoll(b);
        } catch (const std::exception&) {
            throw input_error("labels csv line " + std::to_string(lineno) + ": bad number");
        }
        if (id < 0 || static_cast<std::size_t>(id) >= n)
            throw input_error("labels csv line " + std::to_string(lineno) +
                              ": node id out of range");
        labels[static_cast<std::size_t>(id)] = static_cast<int>(lab);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] < 0)
            throw input_error("labels csv: node " + std::to_string(i) + " has no label");
    return labels;
}

// JSON object {"train": [...], "val": [...], "test": [...]}.
inline void load_splits_json(std::istream& in, LabeledDataset& ds) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw input_error(std::string("splits json: ") + e.what());
    }
    auto read = [&](const char* key) {
        std::vector<std::size_t> out;
        if (!j.contains(key)) throw input_error(std::string("splits json: missing key ") + key);
        for (const auto& v : j.at(key)) out.push_back(v.get<std::size_t>());
        return out;
    };
    ds.train = read("train");
    ds.val = read("val");
    ds.test = read("test");
}

} // namespace gadc
