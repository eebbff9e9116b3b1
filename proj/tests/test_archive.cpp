#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "smashy/archive.hpp"

using namespace smashy;

namespace {

ParamSpace line_space() { return ParamSpace({ParamDef::continuous("x", 0.0, 10.0)}); }

EvalRecord rec(double x, double cost, double r = 1.0, double t = 0.0) {
  EvalRecord e;
  e.config = Config{{x}, {true}};
  e.fidelity = r;
  e.cost = cost;
  e.budget_at = t;
  return e;
}

}  // namespace

TEST(Archive, AppendGrowsByOne) {
  Archive a;
  a.append(rec(1, 3));
  EXPECT_EQ(a.size(), 1u);
}

TEST(Archive, AppendPreservesEarlierRecords) {
  const auto space = line_space();
  Archive a;
  a.append(rec(1, 3));
  a.append(rec(2, 4));
  const auto before = record_to_json(space, a[0]).dump();
  a.append(rec(3, 5));
  EXPECT_EQ(record_to_json(space, a[0]).dump(), before);
}

TEST(Archive, ChronologyIsInsertionOrder) {
  Archive a;
  for (int i = 0; i < 1000; ++i) a.append(rec(i % 10, i, 1.0, i / 1000.0));
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a[static_cast<std::size_t>(i)].cost, i);
}

TEST(Archive, RejectsInvalidRecords) {
  Archive a;
  EXPECT_THROW(a.append(rec(1, 1, 0.0)), ArchiveError);
  EXPECT_THROW(a.append(rec(1, 1, 1.5)), ArchiveError);
  a.append(rec(1, 1, 1.0, 0.5));
  EXPECT_THROW(a.append(rec(1, 1, 1.0, 0.25)), ArchiveError);
}

TEST(Archive, BestPicksMinimum) {
  Archive a;
  for (double y : {3.0, 1.0, 2.0}) a.append(rec(y, y));
  EXPECT_EQ(a.best()->cost, 1.0);
}

TEST(Archive, BestAtFullFidelityNoneWhenOnlyLowFidelity) {
  Archive a;
  a.append(rec(1, 1, 0.5));
  a.append(rec(2, 0, 0.25));
  EXPECT_FALSE(a.best(true).has_value());
  EXPECT_TRUE(a.best(false).has_value());
  EXPECT_FALSE(Archive{}.best().has_value());
}

TEST(Archive, BestTieGoesToEarliest) {
  Archive a;
  const double ys[] = {4, 3, 1, 5, 6, 1, 2};
  for (std::size_t i = 0; i < 7; ++i) a.append(rec(static_cast<double>(i), ys[i]));
  EXPECT_EQ(*a.best_index(), 2u);
}

TEST(Archive, BestIsMonotoneUnderAppend) {
  Archive a;
  Rng rng(5);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 300; ++i) {
    a.append(rec(rng.uniform(0, 10), rng.normal()));
    EXPECT_LE(a.best()->cost, prev);
    prev = a.best()->cost;
  }
}

TEST(Archive, SplitCeilingRule) {
  Archive a;
  for (int i = 0; i < 10; ++i) a.append(rec(i, 10 - i));
  const auto s = a.split_good_bad(0.2, 1);
  EXPECT_EQ(s.good.size(), 2u);
  EXPECT_EQ(s.bad.size(), 8u);
}

TEST(Archive, SplitClampsToDistinctCount) {
  Archive a;
  for (int i = 0; i < 3; ++i) a.append(rec(i, i));
  const auto s = a.split_good_bad(0.15, 4);
  EXPECT_EQ(s.good.size(), 3u);
  EXPECT_TRUE(s.bad.empty());
}

TEST(Archive, SplitUsesHighestFidelityPerConfig) {
  Archive a;
  a.append(rec(1, 0.1, 0.25));  // looks best at low fidelity
  a.append(rec(2, 0.5, 1.0));
  a.append(rec(3, 0.7, 1.0));
  a.append(rec(1, 0.9, 1.0));  // same config, worse at full fidelity
  const auto s = a.split_good_bad(0.3, 1);
  ASSERT_EQ(s.good.size(), 1u);
  EXPECT_EQ(s.good[0], 1u);

  // Oracle: group records by config, keep the highest fidelity.
  std::map<double, std::size_t> by_config;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double key = a[i].config.values[0];
    auto it = by_config.find(key);
    if (it == by_config.end() || a[i].fidelity > a[it->second].fidelity) by_config[key] = i;
  }
  std::set<std::size_t> expected;
  for (const auto& [k, i] : by_config) expected.insert(i);
  std::set<std::size_t> got(s.good.begin(), s.good.end());
  got.insert(s.bad.begin(), s.bad.end());
  EXPECT_EQ(got, expected);
}

TEST(Archive, SplitPartitionsAndOrders) {
  Archive a;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) a.append(rec(static_cast<double>(rng.below(60)), rng.uniform(), i % 3 ? 0.5 : 1.0));
  const auto s = a.split_good_bad(0.15, 3);
  EXPECT_EQ(s.good.size() + s.bad.size(), a.distinct_configs());
  double worst_good = -1.0, best_bad = 2.0;
  for (auto i : s.good) worst_good = std::max(worst_good, a[i].cost);
  for (auto i : s.bad) best_bad = std::min(best_bad, a[i].cost);
  EXPECT_LE(worst_good, best_bad);
}

TEST(Archive, JsonlRoundTrip) {
  const ParamSpace space({ParamDef::categorical("k", {"a", "b"}), ParamDef::continuous("x", 0, 1).when("k", {"a"}),
                          ParamDef::integer("n", 1, 10)});
  Archive a;
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    EvalRecord e;
    e.config = space.sample_one(rng);
    e.fidelity = i % 2 ? 1.0 : 1.0 / 3.0;
    e.cost = i == 5 ? std::numeric_limits<double>::infinity() : rng.normal();
    e.budget_at = i / 20.0;
    e.batch_id = i / 4;
    e.bracket_id = 1 + i % 2;
    e.stage_id = i % 3;
    e.seed_tag = rng.next();
    a.append(e);
  }
  const auto text = to_jsonl(space, a);
  const auto back = archive_from_jsonl(space, text);
  EXPECT_EQ(to_jsonl(space, back), text);
  EXPECT_TRUE(std::isinf(back[5].cost));
  EXPECT_EQ(back[7].config, a[7].config);
}

TEST(Archive, JsonlKeysInDocumentedOrder) {
  const auto space = line_space();
  Archive a;
  a.append(rec(1, 2));
  EXPECT_EQ(to_jsonl(space, a),
            "{\"config\":{\"x\":1.0},\"fidelity\":1.0,\"cost\":2.0,\"budget_at\":0.0,\"batch_id\":0,"
            "\"bracket_id\":0,\"stage_id\":0,\"seed_tag\":0}\n");
}

TEST(Archive, MalformedJsonlIsParseError) {
  const auto space = line_space();
  EXPECT_THROW(archive_from_jsonl(space, "{not json}\n"), ParseError);
  EXPECT_THROW(archive_from_jsonl(space, "{\"config\":{\"x\":1}}\n"), ParseError);
}

TEST(Archive, CsvHasOneColumnPerParameter) {
  const ParamSpace space({ParamDef::categorical("k", {"a", "b"}), ParamDef::continuous("x", 0, 1).when("k", {"a"})});
  Archive a;
  EvalRecord e;
  e.config = Config{{1.0, kInactive}, {true, false}};
  e.cost = 0.5;
  a.append(e);
  EXPECT_EQ(to_csv(space, a),
            "index,k,x,fidelity,cost,budget_at,batch_id,bracket_id,stage_id,seed_tag\n"
            "0,b,,1,0.5,0,0,0,0,0\n");
}
