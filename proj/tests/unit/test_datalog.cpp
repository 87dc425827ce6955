#include "iirs/datalog.hpp"
#include "iirs/netmodel.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace iirs;
using namespace iirs::datalog;

namespace {

Program testbed_program() {
  auto m = netmodel::load_topology(oracle::read_text(oracle::data_path("scenarios/paper-testbed.json")));
  Program p = netmodel::to_datalog(m).program();
  p.rules = builtin_rules().rules;
  return p;
}

} // namespace

TEST(Parser, SingleFact) {
  auto p = parse_program("hacl(a,b,tcp,80).");
  EXPECT_EQ(p.facts.size(), 1u);
  EXPECT_TRUE(p.rules.empty());
  EXPECT_EQ(p.facts.begin()->str(), "hacl(a, b, tcp, 80)");
}

TEST(Parser, RangeRestriction) {
  EXPECT_THROW(parse_program("p(X) :- q(Y)."), ParseError);
}

TEST(Parser, ErrorCarriesPosition) {
  try {
    parse_program("p(a).\nq(b,.");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_GT(e.column(), 0);
  }
}

TEST(Parser, BuiltinRulesPlusTestbed) {
  auto p = testbed_program();
  EXPECT_EQ(p.rules.size(), 3u);
  EXPECT_EQ(p.rules[0].label, "R1");
  EXPECT_EQ(p.rules[2].label, "R3");
}

TEST(Parser, QuotedConstantsRoundTrip) {
  Atom a = parse_atom("vulExists(win7, 'ZBOT-DROP', browser, remote, privEscalation).");
  EXPECT_EQ(a.str(), "vulExists(win7, 'ZBOT-DROP', browser, remote, privEscalation)");
  EXPECT_EQ(parse_atom(a.str()), a);
}

TEST(Unify, AnyPortIsWildcard) {
  EXPECT_TRUE(constants_unify("80", "anyPort"));
  EXPECT_TRUE(constants_unify("anyPort", "443"));
  EXPECT_FALSE(constants_unify("80", "443"));
}

TEST(Solve, FactsOnly) {
  auto g = solve(parse_program("a(x). b(y)."));
  EXPECT_EQ(g.facts.size(), 2u);
  EXPECT_TRUE(g.derived.empty());
  EXPECT_TRUE(g.instantiations.empty());
}

TEST(Solve, AnyPortOneStep) {
  Program p = parse_program("attackerLocated(internet). hacl(internet, win7, tcp, anyPort).");
  p.rules.push_back(builtin_rules().rules[0]);
  auto g = solve(p);
  EXPECT_TRUE(g.holds(parse_atom("netAccess(win7, tcp, anyPort)")));
  EXPECT_EQ(g.instantiations.size(), 1u);
}

TEST(Solve, TestbedDerivesGoalAndAgreesWithNaive) {
  auto p = testbed_program();
  auto g = solve(p);
  Atom goal = parse_atom("execCode(win7, user)");
  EXPECT_TRUE(g.holds(goal));
  EXPECT_TRUE(oracle::naive_fixpoint(p).holds.contains(goal));
}

TEST(Solve, Deterministic) {
  auto p = testbed_program();
  auto a = solve(p);
  auto b = solve(p);
  EXPECT_EQ(a.derived, b.derived);
  EXPECT_EQ(a.instantiations, b.instantiations);
}

TEST(Lag, UnreachableGoal) {
  auto g = solve(parse_program("a(x)."));
  auto lag = build_lag(g, {parse_atom("execCode(win7, user)")});
  EXPECT_TRUE(lag.empty());
  EXPECT_TRUE(lag.unreachable());
  ASSERT_EQ(lag.unreachable_goals.size(), 1u);
}

TEST(Lag, SingleDerivationShape) {
  auto g = solve(parse_program("a(x). b(x). c(X) :- a(X), b(X)."));
  auto lag = build_lag(g, {parse_atom("c(x)")});
  int ands = 0, ors = 0, leaves = 0;
  for (const auto& n : lag.nodes)
    (n.kind == NodeKind::AND ? ands : n.kind == NodeKind::OR ? ors : leaves)++;
  EXPECT_EQ(ands, 1);
  EXPECT_EQ(ors, 1);
  EXPECT_EQ(leaves, 2);
  EXPECT_EQ(lag.edges.size(), 3u);
  EXPECT_FALSE(check_lag(lag));
}

TEST(Lag, TestbedStructure) {
  auto lag = build_lag(solve(testbed_program()), {parse_atom("execCode(win7, user)")});
  EXPECT_FALSE(check_lag(lag)) << *check_lag(lag);
  ASSERT_EQ(lag.goal_ids.size(), 1u);
  for (std::size_t i = 0; i < lag.nodes.size(); ++i)
    EXPECT_EQ(lag.nodes[i].id, static_cast<int>(i));
  for (const auto& n : lag.nodes) {
    for (int p : lag.parents(n.id)) {
      auto pk = lag.nodes[p].kind;
      if (n.kind == NodeKind::AND)
        EXPECT_NE(pk, NodeKind::AND);
      else
        EXPECT_EQ(pk, NodeKind::AND);
    }
    if (n.kind == NodeKind::LEAF)
      EXPECT_TRUE(lag.parents(n.id).empty());
  }
}

TEST(Lag, GoalThatIsInputFactIsNotDerived) {
  auto g = solve(parse_program("a(x)."));
  auto lag = build_lag(g, {parse_atom("a(x)")});
  EXPECT_TRUE(lag.goal_ids.empty());
  EXPECT_EQ(lag.unreachable_goals.size(), 1u);
}

TEST(Dot, EmptyLag) { EXPECT_EQ(export_dot(Lag{}), "digraph lag { }\n"); }

TEST(Dot, LineCountsAndDeterminism) {
  auto g = solve(parse_program("a(x). b(x). c(X) :- a(X), b(X)."));
  auto lag = build_lag(g, {parse_atom("c(x)")});
  std::string dot = export_dot(lag);
  int node_lines = 0, edge_lines = 0;
  std::istringstream in(dot);
  for (std::string line; std::getline(in, line);) {
    if (line.find("->") != std::string::npos)
      ++edge_lines;
    else if (line.find("[label=") != std::string::npos)
      ++node_lines;
  }
  EXPECT_EQ(node_lines, 4);
  EXPECT_EQ(edge_lines, 3);
  EXPECT_EQ(dot, export_dot(lag));
}
