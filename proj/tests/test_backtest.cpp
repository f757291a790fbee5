#include <gtest/gtest.h>

#include "llmcast/config.hpp"
#include "llmcast/pipeline.hpp"
#include "support/synthetic_world.hpp"

using namespace llmcast;

namespace {

RunConfig small_run(std::vector<std::string> models) {
    RunConfig cfg;
    cfg.universe = {"AAA", "BBB"};
    cfg.models = std::move(models);
    cfg.train_start = make_date(2020, 6, 1);
    cfg.train_end = make_date(2022, 6, 5);
    cfg.eval_start = make_date(2022, 6, 6);
    cfg.eval_end = make_date(2022, 7, 31);
    cfg.gbt.trees = 40;
    return cfg;
}

const ArtifactStore& world() {
    static const ArtifactStore store = synth::synthetic_store({});
    return store;
}

}  // namespace

TEST(Backtest, AllModelsProduceRecords) {
    FunctionClient llm(synth::scripted_reply);
    const auto cfg = small_run(known_models());
    const auto result = run_backtest(world(), cfg, &llm);
    EXPECT_EQ(result.attempted, 6u * 2u * 8u);
    EXPECT_TRUE(result.skipped.empty()) << (result.skipped.empty() ? "" : result.skipped.front().reason);
    EXPECT_EQ(result.records.size(), result.attempted);
    ASSERT_EQ(result.report.rows.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(result.report.rows[i].model, known_models()[i]);
    for (const auto& r : result.records) {
        EXPECT_TRUE(r.predicted.valid_for(BinScheme::weekly()));
        EXPECT_EQ(r.actual, world().realized_bins(r.symbol, Granularity::Weekly).at(r.period_start));
        EXPECT_EQ(r.predicted_summary.has_value(), is_llm_model(r.model));
        if (is_llm_model(r.model)) {
            EXPECT_EQ(*r.actual_summary, world().find_digest(r.symbol, r.period_start, 1)->summary);
        }
    }
    EXPECT_TRUE(result.report.rows.back().rouge1_summary.has_value());
}

TEST(Backtest, DeterministicAcrossRunsAndThreadCounts) {
    FunctionClient llm(synth::scripted_reply);
    auto cfg = small_run({"most_frequent", "arma_garch", "gbt", "llm_few_cot"});
    const auto a = to_json(run_backtest(world(), cfg, &llm), cfg.granularity).dump();
    const auto b = to_json(run_backtest(world(), cfg, &llm), cfg.granularity).dump();
    cfg.jobs = 4;
    const auto c = to_json(run_backtest(world(), cfg, &llm), cfg.granularity).dump();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Backtest, MonthlyBlocks) {
    FunctionClient llm(synth::scripted_reply);
    auto cfg = small_run({"most_frequent", "llm_zero"});
    cfg.granularity = Granularity::Monthly;
    const auto result = run_backtest(world(), cfg, &llm);
    EXPECT_EQ(result.attempted, 2u * 2u * 2u);  // 2022-06-06 and 2022-07-04
    for (const auto& r : result.records) EXPECT_TRUE(r.predicted.valid_for(BinScheme::monthly()));
    EXPECT_EQ(result.report.rows.front().granularity, Granularity::Monthly);
}

TEST(Backtest, UnparseableRepliesAreSkippedWithReason) {
    FunctionClient llm([](const CompletionRequest& r) {
        if (r.prompt.find("for BBB,") != std::string::npos) return std::string("I cannot help with that.");
        return synth::scripted_reply(r);
    });
    const auto result = run_backtest(world(), small_run({"llm_zero"}), &llm);
    EXPECT_EQ(result.attempted, 16u);
    ASSERT_EQ(result.skipped.size(), 8u);
    EXPECT_DOUBLE_EQ(result.skip_fraction(), 0.5);
    for (const auto& s : result.skipped) {
        EXPECT_EQ(s.symbol, "BBB");
        EXPECT_NE(s.reason.find("label"), std::string::npos) << s.reason;
    }
}

TEST(Backtest, LockedGarchUsesTrainingFit) {
    auto cfg = small_run({"arma_garch"});
    cfg.garch_expanding = false;
    const auto result = run_backtest(world(), cfg, nullptr);
    EXPECT_EQ(result.records.size(), 16u);
}

TEST(Backtest, InputErrors) {
    EXPECT_THROW(run_backtest(world(), small_run({"llm_zero"}), nullptr), UsageError);
    EXPECT_THROW(run_backtest(world(), small_run({}), nullptr), UsageError);
    EXPECT_THROW(run_backtest(world(), small_run({"oracle"}), nullptr), UsageError);
    auto cfg = small_run({"most_frequent"});
    cfg.universe.push_back("ZZZ");
    EXPECT_THROW(run_backtest(world(), cfg, nullptr), DataError);

    // A hole in the digests is reported up front, naming the artifact.
    ArtifactStore holes;
    holes.prices = world().prices;
    holes.profiles = world().profiles;
    holes.peers = world().peers;
    for (const auto& [key, d] : world().digests()) {
        if (!(key.scope == "AAA" && key.start == make_date(2022, 5, 2))) holes.add_digest(d);
    }
    FunctionClient llm(synth::scripted_reply);
    try {
        run_backtest(holes, small_run({"llm_zero"}), &llm);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("AAA digest 2022-05-02"), std::string::npos) << e.what();
    }
}

TEST(RunConfig, DefaultEvaluationYear) {
    const RunConfig cfg;
    const auto cal = cfg.calendar();
    EXPECT_EQ(period_starts_in(cfg.eval_start, cfg.eval_end, Granularity::Weekly, cal).size(), 52u);
    const auto months = period_starts_in(cfg.eval_start, cfg.eval_end, Granularity::Monthly, cal);
    ASSERT_EQ(months.size(), 13u);
    EXPECT_EQ(months.front(), make_date(2022, 6, 6));
    EXPECT_EQ(months.back(), make_date(2023, 5, 8));
}

TEST(RunConfig, Validation) {
    auto cfg = small_run({"gbt"});
    EXPECT_NO_THROW(cfg.validate());
    cfg.eval_start = make_date(2022, 6, 7);
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = small_run({"gbt"});
    cfg.train_end = cfg.eval_start;
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = small_run({"gbt"});
    cfg.jobs = 0;
    EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Config, ParsesKeysAndRejectsSecrets) {
    const auto c = parse_config(
        "# comment\n"
        "universe = AAPL, MSFT\n"
        "models = most_frequent,llm_few_cot\n"
        "granularity = monthly\n"
        "eval_start = 2022-06-06\n"
        "gbt.trees = 50\n"
        "llm.mode = replay\n"
        "llm.rpm = 30\n"
        "jobs = 2\n");
    EXPECT_EQ(c.run.universe, (std::vector<std::string>{"AAPL", "MSFT"}));
    EXPECT_EQ(c.run.models, (std::vector<std::string>{"most_frequent", "llm_few_cot"}));
    EXPECT_EQ(c.run.granularity, Granularity::Monthly);
    EXPECT_EQ(c.run.gbt.trees, 50);
    EXPECT_EQ(c.llm_mode, LlmMode::Replay);
    EXPECT_DOUBLE_EQ(c.http.rpm, 30.0);
    EXPECT_EQ(c.run.jobs, 2);
    EXPECT_THROW(parse_config("llm.api_key = sk-123\n"), UsageError);
    EXPECT_THROW(parse_config("colour = blue\n"), UsageError);
    EXPECT_THROW(parse_config("jobs = many\n"), UsageError);
    EXPECT_THROW(parse_config("no equals sign\n"), UsageError);
}
