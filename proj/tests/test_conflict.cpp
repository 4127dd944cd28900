#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "schemaref/conflict.hpp"
#include "schemaref/error.hpp"
#include "random_plans.hpp"

using namespace schemaref;
using namespace schemaref::testing;

namespace {

ColumnRef column(std::string name, bool pk = false) {
  ColumnRef c;
  c.name = std::move(name);
  c.data_type = "TEXT";
  c.is_pk = pk;
  return c;
}

// t(a, b, c) plus u(k, fk -> t.a).
SchemaModel small_schema() {
  std::vector<TableDef> tables{{"t", {column("a", true), column("b"), column("c")}},
                               {"u", {column("k", true), column("fk")}}};
  return SchemaModel("small", tables, {{{1, 1}, {0, 0}}});
}

RefinementDecision committed(ColumnId id, const SchemaModel& s, std::string selected, double delta,
                             std::vector<std::pair<std::string, double>> runners = {}) {
  std::vector<CandidateScore> scores{{s.column(id).name, 0, 0.1}, {std::move(selected), 1, 0.1 + delta}};
  for (const auto& [name, d] : runners) scores.push_back({name, scores.size(), 0.1 + d});
  auto decision = decide(id, s.qualified_name(id), scores, 0.05);
  EXPECT_EQ(decision.status, DecisionStatus::Committed);
  return decision;
}

}  // namespace

TEST(Resolve, HigherDeltaKeepsContestedName) {
  auto s = small_schema();
  std::vector<RefinementDecision> d{committed({0, 1}, s, "name", 0.8),
                                    committed({0, 2}, s, "name", 0.3, {{"label", 0.2}})};
  auto plan = resolve(d, s);
  EXPECT_EQ(plan.find({0, 1})->final_name, "name");
  EXPECT_EQ(plan.find({0, 1})->provenance, Provenance::Kept);
  const auto* loser = plan.find({0, 2});
  EXPECT_EQ(loser->final_name, "label");
  EXPECT_EQ(loser->provenance, Provenance::Demoted);
  EXPECT_NEAR(*loser->delta, 0.2, 1e-12);
  ASSERT_EQ(plan.events.size(), 1u);
  EXPECT_EQ(plan.events[0].loser, (ColumnId{0, 2}));
  EXPECT_EQ(plan.iterations, 1);
  EXPECT_FALSE(plan.revert_pass);
  EXPECT_TRUE(check_admissible(s, plan.mapping()).ok());
}

TEST(Resolve, NoCollisionLeavesDecisionsUntouched) {
  auto s = small_schema();
  std::vector<RefinementDecision> d{committed({0, 1}, s, "name", 0.8), committed({0, 2}, s, "label", 0.3)};
  auto plan = resolve(d, s);
  EXPECT_EQ(plan.iterations, 0);
  EXPECT_TRUE(plan.events.empty());
  ASSERT_EQ(plan.entries.size(), 2u);
  for (const auto& e : plan.entries) {
    EXPECT_EQ(e.provenance, Provenance::Kept);
  }
  EXPECT_EQ(plan.renamed_count(), 2u);
}

TEST(Resolve, LoserWithoutRunnerUpReverts) {
  auto s = small_schema();
  std::vector<RefinementDecision> d{committed({0, 1}, s, "name", 0.8), committed({0, 2}, s, "name", 0.3)};
  auto plan = resolve(d, s);
  const auto* loser = plan.find({0, 2});
  EXPECT_EQ(loser->final_name, "c");
  EXPECT_EQ(loser->provenance, Provenance::Reverted);
  EXPECT_FALSE(loser->delta);
  EXPECT_TRUE(plan.events.at(0).reverted);
  EXPECT_EQ(plan.renamed_count(), 1u);
}

TEST(Resolve, UnrenamedColumnAlwaysWins) {
  auto s = small_schema();
  std::vector<RefinementDecision> d{committed({0, 1}, s, "c", 0.9, {{"bee", 0.5}})};
  auto plan = resolve(d, s);
  EXPECT_EQ(plan.find({0, 1})->final_name, "bee");
  EXPECT_FALSE(plan.events.at(0).winner_delta);
}

TEST(Resolve, CrossTableNamesOutsideScopeDoNotCollide) {
  auto s = small_schema();
  std::vector<RefinementDecision> d{committed({0, 1}, s, "name", 0.8), committed({1, 0}, s, "name", 0.3)};
  auto plan = resolve(d, s);
  EXPECT_EQ(plan.renamed_count(), 2u);
  EXPECT_TRUE(plan.events.empty());
}

TEST(Resolve, IgnoresRetainedDecisionsAndRejectsUnknownColumns) {
  auto s = small_schema();
  auto retained = decide({0, 1}, "t.b", {{"b", 0, 0.5}, {"bee", 1, 0.51}}, 0.05);
  EXPECT_TRUE(resolve({retained}, s).entries.empty());
  auto bogus = committed({0, 1}, s, "name", 0.8);
  bogus.column = {7, 7};
  EXPECT_THROW(resolve({bogus}, s), Error);
}

TEST(Crd, TriangleWithTwoNamesIsInfeasible) {
  CrdInstance tri{{"p", "q", "r"}, {{"x", "y"}, {"x", "y"}, {"x", "y"}}, {{0, 1}, {1, 2}, {0, 2}}, {true, true, true}};
  EXPECT_FALSE(crd_feasible_bruteforce(tri).feasible);
  tri.lists = {{"x", "y", "z"}, {"x", "y", "z"}, {"x", "y", "z"}};
  auto r = crd_feasible_bruteforce(tri);
  ASSERT_TRUE(r.feasible);
  EXPECT_TRUE(crd_check(tri, r.witness));
  EXPECT_FALSE(crd_check(tri, {"x", "x", "y"}));
  EXPECT_FALSE(crd_check(tri, {"x", "y"}));
}

TEST(Crd, PathWithTwoNamesIsFeasible) {
  CrdInstance path{{"a", "b", "c", "d"},
                   {{"x", "y"}, {"x", "y"}, {"x", "y"}, {"x", "y"}},
                   {{0, 1}, {1, 2}, {2, 3}},
                   {true, true, true, true}};
  auto r = crd_feasible_bruteforce(path);
  ASSERT_TRUE(r.feasible);
  EXPECT_TRUE(crd_check(path, r.witness));
}

TEST(Crd, ForcedNodeMayNotKeepItsOriginal) {
  CrdInstance one{{"x"}, {{"x"}}, {}, {true}};
  EXPECT_FALSE(crd_feasible_bruteforce(one).feasible);
  one.forced = {false};
  EXPECT_TRUE(crd_feasible_bruteforce(one).feasible);
}

TEST(Crd, RefusesHugeInstances) {
  CrdInstance big;
  for (int i = 0; i < 7; ++i) {
    big.original.push_back("o" + std::to_string(i));
    big.lists.push_back({"a", "b", "c", "d", "e", "f", "g", "h"});
    big.forced.push_back(true);
  }
  EXPECT_THROW(crd_feasible_bruteforce(big), Error);
  big.lists[0] = {};
  EXPECT_THROW(crd_feasible_bruteforce(big), Error);
}

TEST(Crd, InducedInstanceFollowsScope) {
  auto s = small_schema();
  std::vector<RefinementDecision> d{committed({0, 1}, s, "name", 0.8, {{"label", 0.2}})};
  auto inst = induced_crd_instance(d, s);
  ASSERT_EQ(inst.lists.size(), 5u);
  EXPECT_EQ(inst.lists[1], (std::vector<std::string>{"name", "label"}));
  EXPECT_TRUE(inst.forced[1]);
  EXPECT_EQ(inst.lists[0], std::vector<std::string>{"a"});
  // t.a-u.fk is an FK pair; t.b meets u.fk inside the scope of t.a.
  std::set<std::pair<std::size_t, std::size_t>> edges(inst.edges.begin(), inst.edges.end());
  EXPECT_TRUE(edges.count({0, 1}));
  EXPECT_TRUE(edges.count({1, 2}));
  EXPECT_FALSE(edges.count({0, 4}));
  EXPECT_TRUE(edges.count({3, 4}));
  EXPECT_TRUE(edges.count({1, 4}));
}

TEST(ResolveProperty, RandomDecisionSetsStayAdmissible) {
  std::mt19937_64 rng(2024);
  int all_kept_or_demoted = 0, with_reverts = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_schema(rng);
    const auto check = check_resolution(s, random_decisions(s, rng));
    SCOPED_TRACE("trial " + std::to_string(trial));
    EXPECT_LE(check.max_scope, 8u);
    EXPECT_TRUE(check.admissible);
    EXPECT_TRUE(check.within_iterations);
    EXPECT_TRUE(check.demotions_ordered);
    EXPECT_TRUE(check.oracle_consistent);
    ++(check.reverted ? with_reverts : all_kept_or_demoted);
  }
  // Both branches of the property must actually be exercised.
  EXPECT_GT(all_kept_or_demoted, 20);
  EXPECT_GT(with_reverts, 5);
}
