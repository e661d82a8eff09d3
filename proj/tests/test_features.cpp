#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "revloc/features.hpp"

namespace {

using namespace revloc;
using Tokens = std::vector<std::string>;

constexpr Timestamp kDay = 24 * 3600;

TEST(CosSim, IdenticalAndDisjoint) {
  TfIdfModel m(std::vector<Tokens>{{"a", "b"}, {"c"}});
  EXPECT_NEAR(m.cos_sim({"a", "b", "b"}, {"a", "b", "b"}), 1.0, 1e-12);
  EXPECT_EQ(m.cos_sim({"a"}, {"c"}), 0.0);
  EXPECT_EQ(m.cos_sim({}, {"c"}), 0.0);
}

TEST(CosSim, ThreeDocumentFixture) {
  TfIdfModel m(std::vector<Tokens>{{"x", "y"}, {"x", "z"}, {"w"}});
  const double ix = std::log(4.0 / 3.0) + 1.0;
  const double iy = std::log(2.0) + 1.0;
  EXPECT_NEAR(m.idf("x"), ix, 1e-15);
  EXPECT_NEAR(m.idf("unseen"), std::log(4.0) + 1.0, 1e-15);
  EXPECT_NEAR(m.cos_sim({"x", "y"}, {"x", "z"}), ix * ix / (ix * ix + iy * iy), 1e-12);
}

PriorReport prior(std::string id, Timestamp t, std::set<std::string> ms, Tokens toks) {
  return PriorReport{std::move(id), t, t + kDay, std::move(ms), std::move(toks)};
}

HistoryContext context(std::vector<PriorReport> prev, Timestamp now, std::set<std::string> candidates) {
  HistoryContext ctx;
  ctx.query_time = now;
  ctx.previous = std::move(prev);
  ctx.candidates = std::move(candidates);
  for (const auto& p : ctx.previous) ctx.tfidf.add_document(p.tokens);
  return ctx;
}

TEST(Rcfs, EmptyHistoryIsZero) {
  auto ctx = context({}, 100, {"m1", "m2"});
  const Tokens ms{"m1", "m2"};
  for (const auto& [m, v] : rcfs({"crash"}, ms, ctx)) EXPECT_EQ(v, 0.0) << m;
}

TEST(Rcfs, SinglePreviousReport) {
  auto ctx = context({prior("b1", 0, {"m1"}, {"a", "b", "c", "d"})}, 10 * kDay, {"m1", "m2"});
  const Tokens q{"a"};
  ASSERT_NEAR(ctx.tfidf.cos_sim(ctx.previous[0].tokens, q), 0.5, 1e-15);
  const Tokens ms{"m1", "m2"};
  auto r = rcfs(q, ms, ctx);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r.at("m1"), 0.5, 1e-15);
  EXPECT_EQ(r.at("m2"), 0.0);
}

TEST(Rcfs, UnknownMethodRejected) {
  auto ctx = context({}, 100, {"m1"});
  const Tokens ms{"m1", "zz"};
  EXPECT_THROW(rcfs({"a"}, ms, ctx), UnresolvedReferenceError);
}

TEST(Rcfs, MatchesAlgorithmOracle) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const int nb = 1 + static_cast<int>(rng() % 5);
    const auto h = oracle::random_fix_history(rng, nb, 6, 0.35);
    const auto reports = fixture::random_reports(rng, h);
    std::set<std::string> cands;
    for (int m = 0; m < 6; ++m) cands.insert("m" + std::to_string(m));
    auto ctx = make_history_context(h, fixture::report_index(reports), 1000 * nb + 1000, cands, SimRankConfig{});
    const Tokens methods(cands.begin(), cands.end());
    const Tokens query{"crash", "save", "file", "file"};
    const auto got = rcfs(query, methods, ctx);
    const auto want = oracle::rcfs(query, methods, ctx);
    for (const auto& m : methods) EXPECT_NEAR(got.at(m), want.at(m), 1e-9) << trial << " " << m;
  }
}

TEST(Rcfs, MonotoneInTextualSimilarity) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = oracle::random_fix_history(rng, 5, 6, 0.4);
    std::set<std::string> cands;
    for (int m = 0; m < 6; ++m) cands.insert("m" + std::to_string(m));
    auto ctx = make_history_context(h, {}, 100000, cands, SimRankConfig{});
    const Tokens methods(cands.begin(), cands.end());
    std::map<std::string, double> cos;
    for (const auto& p : ctx.previous) cos[p.id] = u(rng);
    const auto base = rcfs_from_cosines(cos, methods, ctx);
    auto raised = cos;
    auto& target = raised[ctx.previous[rng() % ctx.previous.size()].id];
    target += (1.0 - target) * u(rng);
    const auto more = rcfs_from_cosines(raised, methods, ctx);
    for (const auto& m : methods) EXPECT_GE(more.at(m), base.at(m));
  }
}

TEST(Bfrs, RecencyMonths) {
  const Timestamp now = 400 * kDay;
  auto ctx = context({prior("b1", now - 95 * kDay, {"old"}, {"x"}), prior("b2", now - 3 * kDay, {"fresh"}, {"x"}),
                      prior("b3", now - 200 * kDay, {"fresh"}, {"x"})},
                     now, {"old", "fresh", "never"});
  EXPECT_EQ(bfrs("fresh", ctx), 1.0);
  EXPECT_EQ(bfrs("never", ctx), 0.0);
  EXPECT_EQ(bfrs("old", ctx), 0.25);
}

TEST(Bffs, CountsPriorFixesOnly) {
  FixHistory h;
  for (int i = 0; i < 3; ++i) h.events.push_back({"b" + std::to_string(i), i * kDay, "c", i * kDay + 5, {"m"}});
  h.events.push_back({"late", 20 * kDay, "c9", 30 * kDay, {"m", "n"}});
  auto ctx = make_history_context(h, {}, 25 * kDay, {"m", "n", "q"}, SimRankConfig{});
  EXPECT_EQ(bffs("m", ctx), 3.0);
  EXPECT_EQ(bffs("q", ctx), 0.0);
  EXPECT_EQ(bffs("n", ctx), 0.0);
}

TEST(Bffs, NondecreasingAlongTimeline) {
  std::mt19937 rng(12);
  auto h = oracle::random_fix_history(rng, 10, 4, 0.5);
  double last = 0;
  for (Timestamp t = 0; t <= 12000; t += 250) {
    auto ctx = make_history_context(h, {}, t, {"m0"}, SimRankConfig{});
    const double v = bffs("m0", ctx);
    EXPECT_GE(v, last);
    last = v;
    const double r = bfrs("m0", ctx);
    EXPECT_TRUE(r == 0.0 || (r > 0.0 && r <= 1.0));
  }
}

TEST(Leakage, FutureDecoysDoNotChangeFeatures) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto h = oracle::random_fix_history(rng, 5, 6, 0.4);
    auto reports = fixture::random_reports(rng, h);
    const Timestamp now = 3200;
    std::set<std::string> cands;
    for (int m = 0; m < 6; ++m) cands.insert("m" + std::to_string(m));
    const Tokens methods(cands.begin(), cands.end());
    const Tokens q{"crash", "file"};
    auto clean_ctx = make_history_context(h, fixture::report_index(reports), now, cands, SimRankConfig{});
    auto clean = fixing_features(q, methods, clean_ctx);

    FixHistory poisoned = h;
    std::vector<BugReportRecord> more = reports;
    for (int k = 0; k < 4; ++k) {
      FixEvent e{"decoy" + std::to_string(k), now - 100 + k, "cd" + std::to_string(k), now + static_cast<Timestamp>(rng() % 5000),
                 {"m" + std::to_string(rng() % 6), "m0"}};
      poisoned.events.push_back(e);
      BugReportRecord r;
      r.id = e.report;
      r.created_at = e.report_time;
      r.tokens = q;
      more.push_back(r);
    }
    std::shuffle(poisoned.events.begin(), poisoned.events.end(), rng);
    auto dirty_ctx = make_history_context(poisoned, fixture::report_index(more), now, cands, SimRankConfig{});
    EXPECT_EQ(fixing_features(q, methods, dirty_ctx), clean);
  }
}

TEST(FeatureDump, NineDecimals) {
  std::ostringstream out;
  const FeatureRow rows[] = {{"7", "A::f()", {1.0 / 3.0, 2.0, 0.5}}};
  write_feature_rows(out, rows);
  EXPECT_EQ(out.str(), "report\tmethod\trcfs\tbffs\tbfrs\n7\tA::f()\t0.333333333\t2.000000000\t0.500000000\n");
}

}  // namespace
