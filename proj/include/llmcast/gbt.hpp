#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmcast/error.hpp"
#include "llmcast/features.hpp"

namespace llmcast {

/// Flat regression tree. Node i is a leaf when feature[i] < 0.
/// Internal nodes send x <= threshold (and missing when missing_left) to `left`.
struct RegressionTree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<std::uint8_t> missing_left;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    int add_leaf(double v) {
        feature.push_back(-1);
        threshold.push_back(0.0);
        missing_left.push_back(1);
        left.push_back(-1);
        right.push_back(-1);
        value.push_back(v);
        return static_cast<int>(feature.size()) - 1;
    }

    [[nodiscard]] double predict(std::span<const double> x) const {
        int node = 0;
        while (feature[static_cast<std::size_t>(node)] >= 0) {
            const auto i = static_cast<std::size_t>(node);
            const double v = x[static_cast<std::size_t>(feature[i])];
            const bool go_left = is_missing(v) ? missing_left[i] != 0 : v <= threshold[i];
            node = go_left ? left[i] : right[i];
        }
        return value[static_cast<std::size_t>(node)];
    }
};

struct GbtModel {
    std::vector<RegressionTree> trees;
    double learning_rate = 0.05;
    double base_score = 0.0;
    std::vector<std::string> feature_names;
    std::vector<double> training_mse;  // after base score, then after each tree

    [[nodiscard]] std::size_t feature_count() const { return feature_names.size(); }
};

struct GbtHyper {
    int trees = 200;
    int depth = 6;
    double learning_rate = 0.05;
    int min_leaf = 20;
    double subsample = 1.0;
    int max_bins = 255;
    std::uint64_t seed = 7;
};

namespace detail {

/// Per-feature quantized view: bins[row] in [0, edges.size()) or kMissingBin.
struct BinnedFeature {
    static constexpr std::uint16_t kMissingBin = 0xFFFF;
    std::vector<double> edges;  // upper edge (max value) of each bin
    std::vector<std::uint16_t> bins;
};

inline BinnedFeature bin_feature(std::span<const double> column, int max_bins) {
    BinnedFeature f;
    std::vector<double> vals;
    vals.reserve(column.size());
    for (double v : column) {
        if (!is_missing(v)) vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (vals.size() <= static_cast<std::size_t>(max_bins)) {
        f.edges = vals;
    } else {
        for (int b = 1; b <= max_bins; ++b) {
            const auto idx = static_cast<std::size_t>(
                std::ceil(static_cast<double>(b) * static_cast<double>(vals.size()) / max_bins)) - 1;
            const double edge = vals[std::min(idx, vals.size() - 1)];
            if (f.edges.empty() || edge > f.edges.back()) f.edges.push_back(edge);
        }
    }
    f.bins.resize(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
        const double v = column[i];
        f.bins[i] = is_missing(v) ? BinnedFeature::kMissingBin
                                  : static_cast<std::uint16_t>(
                                        std::lower_bound(f.edges.begin(), f.edges.end(), v) - f.edges.begin());
    }
    return f;
}

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;
    bool missing_left = true;
};

}  // namespace detail

/// Least-squares gradient boosting with level-wise trees on quantized features.
/// `x` is row-major rows x names.size().
inline GbtModel gbt_train(std::span<const double> x, std::span<const double> y, const std::vector<std::string>& names,
                          const GbtHyper& hyper = {}) {
    const std::size_t n = y.size();
    const std::size_t nf = names.size();
    if (n < 100) throw PreconditionError("gbt_train: need at least 100 rows");
    if (x.size() != n * nf) throw PreconditionError("gbt_train: feature matrix shape mismatch");
    if (hyper.depth < 1 || hyper.min_leaf < 1 || hyper.trees < 0 || !(hyper.learning_rate > 0.0)) {
        throw PreconditionError("gbt_train: invalid hyperparameters");
    }
    if (!(hyper.subsample > 0.0 && hyper.subsample <= 1.0)) throw PreconditionError("gbt_train: subsample in (0,1]");
    if (hyper.max_bins < 2 || hyper.max_bins > 4096) throw PreconditionError("gbt_train: max_bins in [2, 4096]");
    for (double t : y) {
        if (!std::isfinite(t)) throw PreconditionError("gbt_train: non-finite target");
    }

    GbtModel model;
    model.learning_rate = hyper.learning_rate;
    model.feature_names = names;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::vector<double> pred(n, model.base_score);
    auto mse = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
        return s / static_cast<double>(n);
    };
    model.training_mse.push_back(mse());
    if (model.training_mse.front() == 0.0) {
        std::clog << "warning: gbt_train: target is constant; returning base-score-only model\n";
        return model;
    }

    std::vector<detail::BinnedFeature> binned;
    binned.reserve(nf);
    {
        std::vector<double> col(n);
        for (std::size_t f = 0; f < nf; ++f) {
            for (std::size_t i = 0; i < n; ++i) col[i] = x[i * nf + f];
            binned.push_back(detail::bin_feature(col, hyper.max_bins));
        }
    }

    std::mt19937_64 rng(hyper.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> residual(n);
    const auto min_leaf = static_cast<std::size_t>(hyper.min_leaf);

    for (int t = 0; t < hyper.trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];

        std::vector<std::uint32_t> sample;
        for (std::size_t i = 0; i < n; ++i) {
            if (hyper.subsample >= 1.0 || unit(rng) < hyper.subsample) sample.push_back(static_cast<std::uint32_t>(i));
        }
        if (sample.empty()) continue;

        RegressionTree tree;
        struct Pending {
            int node;
            std::vector<std::uint32_t> rows;
        };
        auto mean_of = [&](const std::vector<std::uint32_t>& rows) {
            double s = 0.0;
            for (auto r : rows) s += residual[r];
            return s / static_cast<double>(rows.size());
        };
        std::vector<Pending> level;
        level.push_back({tree.add_leaf(mean_of(sample)), std::move(sample)});

        for (int depth = 0; depth < hyper.depth && !level.empty(); ++depth) {
            std::vector<Pending> next;
            for (auto& pending : level) {
                const auto& rows = pending.rows;
                if (rows.size() < 2 * min_leaf) continue;
                double total = 0.0;
                for (auto r : rows) total += residual[r];
                const double cnt = static_cast<double>(rows.size());
                const double parent_score = total * total / cnt;

                detail::SplitChoice best;
                std::vector<double> hist_sum;
                std::vector<std::size_t> hist_cnt;
                for (std::size_t f = 0; f < nf; ++f) {
                    const auto& bf = binned[f];
                    const std::size_t nb = bf.edges.size();
                    if (nb < 2) continue;
                    hist_sum.assign(nb, 0.0);
                    hist_cnt.assign(nb, 0);
                    double miss_sum = 0.0;
                    std::size_t miss_cnt = 0;
                    for (auto r : rows) {
                        const auto b = bf.bins[r];
                        if (b == detail::BinnedFeature::kMissingBin) {
                            miss_sum += residual[r];
                            ++miss_cnt;
                        } else {
                            hist_sum[b] += residual[r];
                            ++hist_cnt[b];
                        }
                    }
                    double left_sum = 0.0;
                    std::size_t left_cnt = 0;
                    for (std::size_t b = 0; b + 1 < nb; ++b) {
                        left_sum += hist_sum[b];
                        left_cnt += hist_cnt[b];
                        for (int side = 0; side < 2; ++side) {
                            const bool miss_left = side == 0;
                            if (miss_cnt == 0 && !miss_left) continue;
                            const double ls = left_sum + (miss_left ? miss_sum : 0.0);
                            const std::size_t lc = left_cnt + (miss_left ? miss_cnt : 0);
                            const std::size_t rc = rows.size() - lc;
                            if (lc < min_leaf || rc < min_leaf) continue;
                            const double rs = total - ls;
                            const double gain = ls * ls / static_cast<double>(lc) +
                                                rs * rs / static_cast<double>(rc) - parent_score;
                            if (gain > best.gain + 1e-12) {
                                bool mleft = miss_left;
                                if (miss_cnt == 0) mleft = lc >= rc;  // unseen missing follows the larger side
                                best = {gain, static_cast<int>(f), static_cast<int>(b), mleft};
                            }
                        }
                    }
                }
                if (best.feature < 0) continue;

                const auto& bf = binned[static_cast<std::size_t>(best.feature)];
                std::vector<std::uint32_t> lrows, rrows;
                for (auto r : rows) {
                    const auto b = bf.bins[r];
                    const bool go_left = b == detail::BinnedFeature::kMissingBin ? best.missing_left
                                                                                   : b <= best.bin;
                    (go_left ? lrows : rrows).push_back(r);
                }
                const int l = tree.add_leaf(mean_of(lrows));
                const int rr = tree.add_leaf(mean_of(rrows));
                const auto i = static_cast<std::size_t>(pending.node);
                tree.feature[i] = best.feature;
                tree.threshold[i] = bf.edges[static_cast<std::size_t>(best.bin)];
                tree.missing_left[i] = best.missing_left ? 1 : 0;
                tree.left[i] = l;
                tree.right[i] = rr;
                tree.value[i] = 0.0;
                next.push_back({l, std::move(lrows)});
                next.push_back({rr, std::move(rrows)});
            }
            level = std::move(next);
        }

        for (std::size_t i = 0; i < n; ++i) pred[i] += model.learning_rate * tree.predict(x.subspan(i * nf, nf));
        model.trees.push_back(std::move(tree));
        model.training_mse.push_back(mse());
    }
    return model;
}

inline GbtModel gbt_train(const FeatureMatrix& m, const GbtHyper& hyper = {}) {
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(m.rows.size() * m.columns.size());
    for (const auto& row : m.rows) {
        if (row.values.size() != m.columns.size()) throw PreconditionError("gbt_train: ragged feature rows");
        x.insert(x.end(), row.values.begin(), row.values.end());
        y.push_back(row.target);
    }
    return gbt_train(x, y, m.columns, hyper);
}

inline double gbt_predict(const GbtModel& model, std::span<const double> values) {
    if (values.size() != model.feature_count()) {
        throw PreconditionError("gbt_predict: row has " + std::to_string(values.size()) + " features, model expects " +
                                std::to_string(model.feature_count()));
    }
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict(values);
    return model.base_score + model.learning_rate * sum;
}

/// Predicts every row; the matrix schema must equal the training schema.
inline std::vector<double> gbt_predict(const GbtModel& model, const FeatureMatrix& m) {
    if (m.columns != model.feature_names) throw PreconditionError("gbt_predict: feature schema mismatch");
    std::vector<double> out;
    out.reserve(m.rows.size());
    for (const auto& row : m.rows) out.push_back(gbt_predict(model, row.values));
    return out;
}

inline constexpr int kGbtFormatVersion = 1;

inline nlohmann::json to_json(const GbtModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) {
        trees.push_back({{"feature", t.feature},
                         {"threshold", t.threshold},
                         {"missing_left", t.missing_left},
                         {"left", t.left},
                         {"right", t.right},
                         {"value", t.value}});
    }
    return {{"format", "llmcast.gbt"},
            {"version", kGbtFormatVersion},
            {"learning_rate", model.learning_rate},
            {"base_score", model.base_score},
            {"feature_names", model.feature_names},
            {"trees", trees}};
}

inline GbtModel gbt_model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "llmcast.gbt" || j.value("version", 0) != kGbtFormatVersion) {
        throw DataError("unsupported GBT model document");
    }
    GbtModel model;
    model.learning_rate = j.at("learning_rate").get<double>();
    model.base_score = j.at("base_score").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jt : j.at("trees")) {
        RegressionTree t;
        t.feature = jt.at("feature").get<std::vector<int>>();
        t.threshold = jt.at("threshold").get<std::vector<double>>();
        t.missing_left = jt.at("missing_left").get<std::vector<std::uint8_t>>();
        t.left = jt.at("left").get<std::vector<int>>();
        t.right = jt.at("right").get<std::vector<int>>();
        t.value = jt.at("value").get<std::vector<double>>();
        const auto nodes = t.feature.size();
        if (nodes == 0 || t.threshold.size() != nodes || t.missing_left.size() != nodes || t.left.size() != nodes ||
            t.right.size() != nodes || t.value.size() != nodes) {
            throw DataError("GBT model: inconsistent tree arrays");
        }
        for (std::size_t i = 0; i < nodes; ++i) {
            if (t.feature[i] >= static_cast<int>(model.feature_names.size())) {
                throw DataError("GBT model: split feature index out of range");
            }
            if (!std::isfinite(t.value[i])) throw DataError("GBT model: non-finite leaf value");
            if (t.feature[i] >= 0 && (t.left[i] <= static_cast<int>(i) || t.right[i] <= static_cast<int>(i) ||
                                      t.left[i] >= static_cast<int>(nodes) || t.right[i] >= static_cast<int>(nodes))) {
                throw DataError("GBT model: invalid child index");
            }
        }
        model.trees.push_back(std::move(t));
    }
    return model;
}

}  // namespace llmcast
