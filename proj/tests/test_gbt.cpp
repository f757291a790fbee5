#include <gtest/gtest.h>

#include <random>

#include "llmcast/baselines.hpp"

using namespace llmcast;

namespace {

struct Dataset {
    std::vector<double> x;
    std::vector<double> y;
    std::size_t n = 0;
};

Dataset linear_dataset(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Dataset d;
    d.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = z(rng), x2 = z(rng), x3 = z(rng);
        d.x.insert(d.x.end(), {x1, x2, x3});
        d.y.push_back(2.0 * x1 - x2 + 0.3 * z(rng));
    }
    return d;
}

const std::vector<std::string> kNames{"x1", "x2", "noise"};

}  // namespace

TEST(Gbt, FitsLinearSignal) {
    const auto train = linear_dataset(1000, 1);
    const auto test = linear_dataset(500, 2);
    GbtHyper h;
    const auto model = gbt_train(train.x, train.y, kNames, h);
    double mse = 0.0, mean = 0.0, var = 0.0;
    for (double v : test.y) mean += v / 500.0;
    for (std::size_t i = 0; i < test.n; ++i) {
        const double p = gbt_predict(model, std::span<const double>(test.x).subspan(i * 3, 3));
        mse += (p - test.y[i]) * (p - test.y[i]) / 500.0;
        var += (test.y[i] - mean) * (test.y[i] - mean) / 500.0;
    }
    EXPECT_LT(mse, 0.25 * var);
}

TEST(Gbt, TrainingMseIsMonotone) {
    const auto d = linear_dataset(400, 3);
    GbtHyper h;
    h.trees = 50;
    const auto model = gbt_train(d.x, d.y, kNames, h);
    ASSERT_EQ(model.training_mse.size(), 51u);
    for (std::size_t i = 1; i < model.training_mse.size(); ++i) {
        EXPECT_LE(model.training_mse[i], model.training_mse[i - 1] + 1e-12);
    }
}

TEST(Gbt, DeterministicForSeed) {
    const auto d = linear_dataset(300, 4);
    GbtHyper h;
    h.trees = 30;
    h.subsample = 0.7;
    const auto a = gbt_train(d.x, d.y, kNames, h);
    const auto b = gbt_train(d.x, d.y, kNames, h);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Gbt, LearnsMissingDirection) {
    // Missing x1 always comes with a high target; the trees should route it right.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x, y;
    for (int i = 0; i < 600; ++i) {
        const bool miss = i % 4 == 0;
        const double v = u(rng);
        x.push_back(miss ? kMissing : v);
        y.push_back(miss ? 10.0 : v);
    }
    GbtHyper h;
    h.trees = 100;
    h.learning_rate = 0.2;
    h.min_leaf = 5;
    const auto model = gbt_train(x, y, {"x"}, h);
    const double missing[] = {kMissing};
    const double low[] = {0.1};
    EXPECT_GT(gbt_predict(model, missing), 8.0);
    EXPECT_LT(gbt_predict(model, low), 1.0);
}

TEST(Gbt, ConstantTargetGivesBaseOnlyModel) {
    std::vector<double> x(100), y(100, 3.5);
    for (int i = 0; i < 100; ++i) x[static_cast<std::size_t>(i)] = i;
    const auto model = gbt_train(x, y, {"i"}, {});
    EXPECT_TRUE(model.trees.empty());
    const double q[] = {42.0};
    EXPECT_DOUBLE_EQ(gbt_predict(model, q), 3.5);
}

TEST(Gbt, Preconditions) {
    std::vector<double> x(99), y(99);
    EXPECT_THROW(gbt_train(x, y, {"a"}, {}), PreconditionError);
    const auto d = linear_dataset(200, 6);
    GbtHyper h;
    h.trees = 5;
    const auto model = gbt_train(d.x, d.y, kNames, h);
    const double two[] = {1.0, 2.0};
    EXPECT_THROW(gbt_predict(model, two), PreconditionError);
    FeatureMatrix m{{"x1", "x2", "other"}, {}};
    EXPECT_THROW(gbt_predict(model, m), PreconditionError);
    h.max_bins = 1;
    EXPECT_THROW(gbt_train(d.x, d.y, kNames, h), PreconditionError);
}

TEST(Gbt, JsonRoundTripPredictsIdentically) {
    const auto d = linear_dataset(300, 7);
    GbtHyper h;
    h.trees = 20;
    const auto model = gbt_train(d.x, d.y, kNames, h);
    const auto back = gbt_model_from_json(nlohmann::json::parse(to_json(model).dump()));
    for (std::size_t i = 0; i < 50; ++i) {
        const auto row = std::span<const double>(d.x).subspan(i * 3, 3);
        EXPECT_EQ(gbt_predict(model, row), gbt_predict(back, row));
    }
    auto bad = to_json(model);
    bad["version"] = 99;
    EXPECT_THROW(gbt_model_from_json(bad), DataError);
    bad = to_json(model);
    bad["trees"][0]["feature"][0] = 17;
    EXPECT_THROW(gbt_model_from_json(bad), DataError);
}

TEST(MostFrequent, ModeAndTies) {
    const auto W = BinScheme::weekly();
    auto bins = [&](std::initializer_list<const char*> v) {
        std::vector<ReturnBin> out;
        for (auto s : v) out.push_back(parse_bin(s, W));
        return out;
    };
    EXPECT_EQ(most_frequent_bin(bins({"U2", "D1", "U2", "D3"}), W).render(), "U2");
    EXPECT_EQ(most_frequent_bin(bins({"D1", "U1"}), W).render(), "U1");
    EXPECT_EQ(most_frequent_bin(bins({"D2", "U4"}), W).render(), "D2");
    EXPECT_EQ(most_frequent_bin(bins({"D2", "U3"}), W).render(), "U3");
    EXPECT_EQ(most_frequent_bin(bins({"D1", "U2"}), W).render(), "U2");
    EXPECT_THROW(most_frequent_bin({}, W), PreconditionError);
}
