#include <gtest/gtest.h>

#include "llmcast/prompt.hpp"
#include "support/synthetic_world.hpp"

using namespace llmcast;

namespace {

const Date kTarget = make_date(2023, 5, 1);

/// Small hand-built store: AAPL and MSFT, ten weeks of Friday closes before
/// the target, weekly digests for both and for the macro scope.
ArtifactStore tiny_store() {
    ArtifactStore s;
    const double aapl[] = {100.0, 100.0, 102.5, 101.5, 101.2, 104.0, 110.0, 109.0, 103.0, 103.5};
    const double msft[] = {200.0, 199.0, 201.0, 205.0, 203.0, 204.0, 210.0, 212.0, 211.0, 215.0};
    PriceSeries a{"AAPL", {}}, m{"MSFT", {}};
    for (int i = 0; i < 10; ++i) {
        const Date fri = kTarget - std::chrono::days{3 + 7 * (9 - i)};
        a.points.push_back({fri, aapl[i], aapl[i], aapl[i], aapl[i], 1000});
        m.points.push_back({fri, msft[i], msft[i], msft[i], msft[i], 1000});
    }
    // A post-target print, which must never reach the prompt.
    a.points.push_back({kTarget + std::chrono::days{4}, 120.0, 120.0, 120.0, 120.0, 1000});
    s.prices.emplace("AAPL", a);
    s.prices.emplace("MSFT", m);
    s.profiles.emplace("AAPL", CompanyProfile{"AAPL", "Apple designs phones and computers.",
                                              {"brand strength", "services growth"},
                                              {"supply chain risk", "regulation"},
                                              ""});
    s.profiles.emplace("MSFT", CompanyProfile{"MSFT", "Microsoft sells software and cloud services.",
                                              {"cloud demand"},
                                              {"competition"},
                                              ""});
    s.peers["AAPL"] = {"MSFT"};
    for (int k = 9; k >= 0; --k) {
        const Date w = kTarget - std::chrono::days{7 * k};
        const auto tag = std::to_string(k);
        s.add_digest({"AAPL", w, 1, "Apple news " + tag + ".", {"apple", "k" + tag}, true, ""});
        s.add_digest({"MSFT", w, 1, "Microsoft news " + tag + ".", {"msft", "k" + tag}, true, ""});
        s.add_digest({std::string(kMacroScope), w, 1, "Macro news " + tag + ".", {"rates", "k" + tag}, true, ""});
    }
    return s;
}

std::string golden_path(const std::string& name) { return std::string(LLMCAST_FIXTURE_DIR) + "/prompts/" + name; }

}  // namespace

TEST(Prompt, ZeroShotMatchesGolden) {
    const auto store = tiny_store();
    const auto p = build_prompt({"AAPL", kTarget, Granularity::Weekly}, store.truncated(kTarget), PromptConfig{});
    const auto path = golden_path("aapl_weekly_zero_shot.txt");
    if (std::getenv("LLMCAST_UPDATE_GOLDEN")) write_file_atomic(path, p.text);
    EXPECT_EQ(p.text, read_file(path));
    EXPECT_EQ(p.token_estimate, (p.text.size() + 3) / 4);
}

TEST(Prompt, HistoryIsChronological) {
    const auto store = tiny_store();
    const auto p = build_prompt({"AAPL", kTarget, Granularity::Weekly}, store.truncated(kTarget), PromptConfig{});
    EXPECT_EQ(extract_history_labels(p.text, Granularity::Weekly), (std::vector<int>{8, 7, 6, 5, 4, 3, 2, 1}));
    EXPECT_LT(p.text.find("Apple news 8."), p.text.find("Apple news 1."));
    EXPECT_EQ(p.text.find("Apple news 0."), std::string::npos);  // the target week itself
    EXPECT_EQ(p.text.find("Apple news 9."), std::string::npos);  // beyond the window
}

TEST(Prompt, RealizedBinsFollowPrices) {
    const auto store = tiny_store();
    const auto p = build_prompt({"AAPL", kTarget, Granularity::Weekly}, store.truncated(kTarget), PromptConfig{});
    // Week 8 ago: 100 -> 102.5 is +2.5%; 4 weeks ago: 104 -> 110 is +5.77%.
    const auto first = p.text.find("8 weeks ago.");
    const auto second = p.text.find("7 weeks ago.");
    EXPECT_NE(p.text.substr(first, second - first).find("Stock Return: U3"), std::string::npos);
    const auto four = p.text.find("4 weeks ago.");
    const auto three = p.text.find("3 weeks ago.");
    EXPECT_NE(p.text.substr(four, three - four).find("Stock Return: U5+"), std::string::npos);
}

TEST(Prompt, ChainOfThoughtOnlyAppendsSuffix) {
    const auto store = tiny_store().truncated(kTarget);
    PromptConfig plain;
    PromptConfig cot;
    cot.cot = true;
    const auto a = build_prompt({"AAPL", kTarget, Granularity::Weekly}, store, plain);
    const auto b = build_prompt({"AAPL", kTarget, Granularity::Weekly}, store, cot);
    EXPECT_EQ(b.text, a.text + "\n" + std::string(kCotSuffix));
}

TEST(Prompt, FewShotAddsPeerEpisode) {
    const auto store = tiny_store().truncated(kTarget);
    PromptConfig few;
    few.few_shot = true;
    const auto p = build_prompt({"AAPL", kTarget, Granularity::Weekly}, store, few);
    const auto ex = p.text.find("Forecasting Examples:");
    ASSERT_NE(ex, std::string::npos);
    EXPECT_NE(p.text.find("Example: MSFT", ex), std::string::npos);
    // The peer episode ends with last week's realized outcome, which is known at the cutoff.
    EXPECT_NE(p.text.find("Next week.\nSummary: Microsoft news 1.", ex), std::string::npos);
    EXPECT_EQ(p.text.find("Microsoft news 0."), std::string::npos);
    EXPECT_LT(ex, p.text.find("Now predict"));
    // Zero-shot history labels are unaffected by the examples section.
    EXPECT_EQ(extract_history_labels(p.text, Granularity::Weekly), (std::vector<int>{8, 7, 6, 5, 4, 3, 2, 1}));
}

TEST(Prompt, MissingArtifactsAreListed) {
    auto store = tiny_store();
    ArtifactStore partial;
    partial.prices = store.prices;
    partial.profiles = store.profiles;
    for (const auto& [key, d] : store.digests()) {
        if (!(d.scope == "AAPL" && (d.week_start == kTarget - std::chrono::days{14} ||
                                    d.week_start == kTarget - std::chrono::days{35}))) {
            partial.add_digest(d);
        }
    }
    try {
        build_prompt({"AAPL", kTarget, Granularity::Weekly}, partial.truncated(kTarget), PromptConfig{});
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("AAPL digest 2023-04-17"), std::string::npos) << msg;
        EXPECT_NE(msg.find("AAPL digest 2023-03-27"), std::string::npos) << msg;
    }
    ArtifactStore no_profile = store;
    no_profile.profiles.erase("AAPL");
    EXPECT_THROW(build_prompt({"AAPL", kTarget, Granularity::Weekly}, no_profile, PromptConfig{}), DataError);
    PromptConfig few;
    few.few_shot = true;
    ArtifactStore no_peers = store;
    no_peers.peers.clear();
    EXPECT_THROW(build_prompt({"AAPL", kTarget, Granularity::Weekly}, no_peers, few), DataError);
}

TEST(Prompt, TruncatedStoreGivesSamePrompt) {
    const auto full = tiny_store();
    PromptConfig few;
    few.few_shot = true;
    for (const auto& cfg : {PromptConfig{}, few}) {
        const auto a = build_prompt({"AAPL", kTarget, Granularity::Weekly}, full.truncated(kTarget), cfg);
        auto leaky = full.truncated(kTarget);
        leaky.add_digest({"AAPL", kTarget, 1, "FUTURE SHOCK.", {"leak"}, true, ""});
        leaky.add_digest({"AAPL", kTarget + std::chrono::days{7}, 1, "FUTURE SHOCK 2.", {"leak"}, true, ""});
        const auto b = build_prompt({"AAPL", kTarget, Granularity::Weekly}, leaky, cfg);
        EXPECT_EQ(a.text, b.text);
        EXPECT_EQ(a.text.find("FUTURE"), std::string::npos);
    }
}

TEST(Prompt, Preconditions) {
    const auto store = tiny_store();
    EXPECT_THROW(build_prompt({"AAPL", kTarget + std::chrono::days{1}, Granularity::Weekly}, store, PromptConfig{}),
                 PreconditionError);
    PromptConfig budget;
    budget.token_budget = 10;
    EXPECT_THROW(build_prompt({"AAPL", kTarget, Granularity::Weekly}, store.truncated(kTarget), budget), DataError);
    PromptConfig bad;
    bad.history_periods = 0;
    EXPECT_THROW(build_prompt({"AAPL", kTarget, Granularity::Weekly}, store, bad), PreconditionError);
}

TEST(Prompt, MonthlyUsesBlocks) {
    synth::WorldSpec spec;
    spec.symbols = {"AAA", "BBB"};
    const auto store = synth::synthetic_store(spec);
    const Date target = make_date(2022, 7, 4);
    const auto p = build_prompt({"AAA", target, Granularity::Monthly}, store.truncated(target), PromptConfig{});
    EXPECT_EQ(extract_history_labels(p.text, Granularity::Monthly), (std::vector<int>{8, 7, 6, 5, 4, 3, 2, 1}));
    EXPECT_NE(p.text.find("Forecast next month stock return"), std::string::npos);
    EXPECT_NE(p.text.find("\"U10+\" means price rising more than 10%"), std::string::npos);
    EXPECT_NE(p.text.find("AAA month"), std::string::npos);
}

TEST(BinLegend, WeeklyWording) {
    const auto legend = bin_legend(BinScheme::weekly());
    EXPECT_EQ(legend.rfind(std::string(kLegendLead), 0), 0u);
    EXPECT_NE(legend.find(R"("D5+", "D5", "D4", "D3", "D2", "D1", "U1", "U2", "U3", "U4", "U5", "U5+")"),
              std::string::npos);
    EXPECT_NE(legend.find(R"("D5+" means price dropping more than 5%)"), std::string::npos);
    EXPECT_NE(legend.find(R"("D5" means price dropping between 4% and 5%)"), std::string::npos);
    EXPECT_NE(legend.find(R"("U4" means price rising between 3% and 4%)"), std::string::npos);
}
