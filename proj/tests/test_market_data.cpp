#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "llmcast/market_data.hpp"

using namespace llmcast;

namespace {

const BinScheme W = BinScheme::weekly();
const BinScheme M = BinScheme::monthly();

std::string render(double pct, const BinScheme& s) { return bin_return(pct, s).render(); }

}  // namespace

TEST(Bins, DocumentedWeeklyExamples) {
    EXPECT_EQ(render(2.3, W), "U3");
    EXPECT_EQ(render(-0.4, W), "D1");
    EXPECT_EQ(render(7.2, W), "U5+");
    EXPECT_EQ(render(-5.0, W), "D5+");
    EXPECT_EQ(render(0.0, W), "U1");
}

TEST(Bins, BoundariesAreHalfOpenTowardZero) {
    EXPECT_EQ(render(1.0, W), "U2");
    EXPECT_EQ(render(0.999999, W), "U1");
    EXPECT_EQ(render(-1.0, W), "D1");
    EXPECT_EQ(render(-1.000001, W), "D2");
    EXPECT_EQ(render(4.999, W), "U5");
    EXPECT_EQ(render(5.0, W), "U5+");
    EXPECT_EQ(render(-4.999, W), "D5");
    EXPECT_EQ(render(9.99, M), "U10");
    EXPECT_EQ(render(10.0, M), "U10+");
    EXPECT_EQ(render(-10.0, M), "D10+");
}

TEST(Bins, SchemeSizes) {
    EXPECT_EQ(W.bin_count(), 12);
    EXPECT_EQ(M.bin_count(), 22);
    EXPECT_EQ(all_bins(W).size(), 12u);
    EXPECT_EQ(all_bins(M).size(), 22u);
    EXPECT_EQ(all_bins(W).front().render(), "D5+");
    EXPECT_EQ(all_bins(W).back().render(), "U5+");
}

TEST(Bins, OrdinalMapping) {
    EXPECT_EQ(bin_ordinal(parse_bin("D5+", W), W), -6);
    EXPECT_EQ(bin_ordinal(parse_bin("D1", W), W), -1);
    EXPECT_EQ(bin_ordinal(parse_bin("U1", W), W), 0);
    EXPECT_EQ(bin_ordinal(parse_bin("U5", W), W), 4);
    EXPECT_EQ(bin_ordinal(parse_bin("U5+", W), W), 5);
    EXPECT_EQ(bin_ordinal(parse_bin("D10+", M), M), -11);
    EXPECT_EQ(bin_ordinal(parse_bin("U10+", M), M), 10);
}

TEST(Bins, RoundTripEveryBin) {
    for (const auto& s : {W, M}) {
        for (const auto& b : all_bins(s)) {
            EXPECT_EQ(ordinal_to_bin(bin_ordinal(b, s), s), b);
            EXPECT_EQ(parse_bin(b.render(), s), b);
        }
    }
}

TEST(Bins, InvalidTokens) {
    EXPECT_THROW(parse_bin("U6", W), ParseError);
    EXPECT_THROW(parse_bin("U4+", W), ParseError);
    EXPECT_THROW(parse_bin("X1", W), ParseError);
    EXPECT_THROW(parse_bin("U0", W), ParseError);
    EXPECT_THROW(parse_bin("", W), ParseError);
    EXPECT_THROW(parse_bin("U1x", W), ParseError);
    EXPECT_THROW(bin_return(std::nan(""), W), PreconditionError);
    EXPECT_THROW(ordinal_to_bin(6, W), PreconditionError);
    EXPECT_THROW(ordinal_to_bin(-7, W), PreconditionError);
}

TEST(BinsProperty, OrdinalIsMonotoneInPercent) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (const auto& s : {W, M}) {
        for (int i = 0; i < 5000; ++i) {
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            EXPECT_LE(bin_ordinal(bin_return(a, s), s), bin_ordinal(bin_return(b, s), s));
        }
    }
}

TEST(BinsProperty, EveryBinIsReachable) {
    for (const auto& s : {W, M}) {
        std::set<int> seen;
        for (int i = -2000; i <= 2000; ++i) seen.insert(bin_ordinal(bin_return(i * 0.01, s), s));
        EXPECT_EQ(static_cast<int>(seen.size()), s.bin_count());
    }
}

TEST(Calendar, WeeksAndBlocks) {
    const PeriodCalendar cal;
    const Date anchor = make_date(2022, 6, 6);
    EXPECT_EQ(cal.period_start(make_date(2022, 6, 12), Granularity::Weekly), anchor);
    EXPECT_EQ(cal.period_start(make_date(2022, 6, 13), Granularity::Weekly), make_date(2022, 6, 13));
    EXPECT_EQ(cal.period_start(make_date(2022, 6, 5), Granularity::Weekly), make_date(2022, 5, 30));
    EXPECT_EQ(cal.period_start(make_date(2022, 7, 3), Granularity::Monthly), anchor);
    EXPECT_EQ(cal.period_start(make_date(2022, 7, 4), Granularity::Monthly), make_date(2022, 7, 4));
    EXPECT_EQ(cal.index_of(make_date(2022, 6, 5), Granularity::Monthly), -1);
    EXPECT_EQ(cal.end_of(0, Granularity::Monthly), make_date(2022, 7, 3));
    // The training window is whole weeks and whole blocks on this grid.
    EXPECT_EQ(cal.index_of(make_date(2017, 6, 12), Granularity::Weekly), -260);
    EXPECT_EQ(cal.index_of(make_date(2017, 6, 12), Granularity::Monthly), -65);
    EXPECT_EQ(cal.start_of(-65, Granularity::Monthly), make_date(2017, 6, 12));
}

TEST(Ingest, ParsesAndSorts) {
    const std::string csv =
        "date,symbol,open,high,low,close,volume\n"
        "2022-06-07,AAPL,10,11,9,10.5,100\n"
        "2022-06-06,AAPL,9,10,8,9.5,100\n"
        "2022-06-06,MSFT,20,21,19,20.5,50\n";
    const auto series = load_prices(csv);
    ASSERT_EQ(series.size(), 2u);
    EXPECT_EQ(series[0].symbol, "AAPL");
    ASSERT_EQ(series[0].points.size(), 2u);
    EXPECT_EQ(series[0].points[0].date, make_date(2022, 6, 6));
    EXPECT_DOUBLE_EQ(series[0].points[1].close, 10.5);
}

TEST(Ingest, RejectsBadRows) {
    const std::string head = "date,symbol,open,high,low,close,volume\n";
    try {
        load_prices(head + "2022-06-06,AAPL,1,2,1,1.5,10\n2022-06-06,AAPL,1,2,1,1.5,10\n");
        FAIL() << "duplicate accepted";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate row for AAPL on 2022-06-06"), std::string::npos);
    }
    EXPECT_THROW(load_prices(head + "2022-06-06,AAPL,0,2,1,1.5,10\n"), DataError);
    EXPECT_THROW(load_prices(head + "2022-06-06,AAPL,-1,2,1,1.5,10\n"), DataError);
    EXPECT_THROW(load_prices(head + "2022-13-06,AAPL,1,2,1,1.5,10\n"), DataError);
    EXPECT_THROW(load_prices(head + "2022-06-06,AAPL,1,2,1\n"), DataError);
    EXPECT_THROW(load_prices(head + "2022-06-06,AAPL,abc,2,1,1.5,10\n"), DataError);
    EXPECT_THROW(load_prices("date,open\n"), DataError);
}

TEST(Ingest, ErrorNamesLine) {
    const std::string csv = "date,symbol,open,high,low,close,volume\n2022-06-06,AAPL,1,2,1,1.5,10\n2022-06-07,AAPL,x,2,1,1.5,10\n";
    try {
        load_prices(csv);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Ingest, WriteThenReadRoundTrips) {
    const std::string csv =
        "date,symbol,open,high,low,close,volume\n"
        "2022-06-06,AAPL,9.000000,10.000000,8.000000,9.500000,100\n"
        "2022-06-07,AAPL,10.000000,11.000000,9.000000,10.500000,100\n";
    std::ostringstream out;
    write_prices(out, load_prices(csv));
    EXPECT_EQ(out.str(), csv);
}

namespace {

PriceSeries daily(const std::vector<std::pair<Date, double>>& closes) {
    PriceSeries s{"T", {}};
    for (auto [d, c] : closes) s.points.push_back({d, c, c, c, c, 1});
    return s;
}

}  // namespace

TEST(Returns, WeeklyPreviousClose) {
    const auto s = daily({{make_date(2022, 6, 10), 100.0},
                          {make_date(2022, 6, 13), 101.0},
                          {make_date(2022, 6, 17), 102.3},
                          {make_date(2022, 6, 24), 101.8908}});
    const auto r = period_returns(s, Granularity::Weekly);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].period_start, make_date(2022, 6, 13));
    EXPECT_EQ(r[0].period_end, make_date(2022, 6, 19));
    EXPECT_NEAR(r[0].pct_change, 2.3, 1e-9);
    EXPECT_EQ(bin_return(r[0].pct_change, W).render(), "U3");
    EXPECT_NEAR(r[1].pct_change, -0.4, 1e-9);
    EXPECT_EQ(bin_return(r[1].pct_change, W).render(), "D1");
}

TEST(Returns, SkipsWeeksWithoutTrading) {
    const auto s = daily({{make_date(2022, 6, 10), 100.0}, {make_date(2022, 6, 24), 110.0}});
    const auto r = period_returns(s, Granularity::Weekly);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].period_start, make_date(2022, 6, 20));
    EXPECT_NEAR(r[0].pct_change, 10.0, 1e-9);
}

TEST(Returns, PeriodOpenAnchor) {
    PriceSeries s{"T", {{make_date(2022, 6, 13), 100, 101, 99, 100, 1}, {make_date(2022, 6, 17), 101, 103, 100, 102, 1}}};
    const auto r = period_returns(s, Granularity::Weekly, PeriodCalendar{make_date(2022, 6, 6), ReturnAnchor::PeriodOpen});
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NEAR(r[0].pct_change, 2.0, 1e-9);
}

TEST(Returns, NeedsTwoPeriods) {
    EXPECT_THROW(period_returns(daily({{make_date(2022, 6, 13), 1.0}}), Granularity::Weekly), DataError);
}

TEST(Returns, TruncationDropsCutoffDay) {
    const auto s = daily({{make_date(2022, 6, 10), 1.0}, {make_date(2022, 6, 13), 2.0}});
    EXPECT_EQ(truncate_before(s, make_date(2022, 6, 13)).points.size(), 1u);
}
