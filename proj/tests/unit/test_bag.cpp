#include "iirs/bag.hpp"
#include "iirs/datalog.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace iirs;
using namespace iirs::bag;
using datalog::NodeKind;

namespace {

constexpr double kTol = 1e-12;

} // namespace

TEST(AndProb, ClosedForms) {
  EXPECT_NEAR(and_prob(std::vector<double>{1, 1}, 0.6), 0.6, kTol);
  EXPECT_EQ(and_prob(std::vector<double>{0, 0.7}, 0.9), 0.0);
  EXPECT_NEAR(and_prob(std::vector<double>{0.5, 0.5}, 1.0), 0.25, kTol);
}

TEST(OrProb, ClosedForms) {
  EXPECT_NEAR(or_prob(std::vector<double>{0.3}), 0.3, kTol);
  EXPECT_EQ(or_prob(std::vector<double>{}), 0.0);
  EXPECT_NEAR(or_prob(std::vector<double>{0.5, 0.5}), 0.75, kTol);
}

TEST(BayesUpdate, ClosedForms) {
  EXPECT_NEAR(bayes_update(0.5, 9.0), 0.9, kTol);
  EXPECT_NEAR(bayes_update(0.3, 1.0), 0.3, kTol);
  EXPECT_EQ(bayes_update(0.0, 9.0), 0.0);
  EXPECT_EQ(bayes_update(1.0, 0.1), 1.0);
}

TEST(PriorPropagate, Chain) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::OR}, {{0, 1}, {1, 2}}, {{1, 0.8}});
  auto b = prior_propagate(bag);
  EXPECT_NEAR(b.at(2), 0.8, kTol);
  EXPECT_EQ(b.at(0), 1.0);
}

TEST(PriorPropagate, ZeroLeavesGiveZero) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::LEAF, NodeKind::AND, NodeKind::OR},
                              {{0, 2}, {1, 2}, {2, 3}}, {{2, 0.9}});
  auto b = prior_propagate(bag, {{0, 0.0}, {1, 0.0}});
  EXPECT_EQ(b.at(3), 0.0);
  EXPECT_EQ(b.at(0), 0.0);
}

TEST(PriorPropagate, Diamond) {
  // leaf -> two ANDs -> one OR
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::AND, NodeKind::OR},
                              {{0, 1}, {0, 2}, {1, 3}, {2, 3}}, {{1, 0.5}, {2, 0.5}});
  EXPECT_NEAR(prior_propagate(bag).at(3), 0.75, kTol);
}

TEST(PriorPropagate, FiveNodeClosedForm) {
  // L0(0.6), L1(0.5) -> A2(e=0.7) -> O3 ; L1 -> A4(e=0.4) -> O3
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::LEAF, NodeKind::AND, NodeKind::OR, NodeKind::AND},
                              {{0, 2}, {1, 2}, {2, 3}, {1, 4}, {4, 3}}, {{2, 0.7}, {4, 0.4}});
  auto b = prior_propagate(bag, {{0, 0.6}, {1, 0.5}});
  double a2 = 0.6 * 0.5 * 0.7;
  double a4 = 0.5 * 0.4;
  EXPECT_NEAR(b.at(2), a2, 1e-9);
  EXPECT_NEAR(b.at(4), a4, 1e-9);
  EXPECT_NEAR(b.at(3), 1 - (1 - a2) * (1 - a4), 1e-9);
}

TEST(PosteriorUpdate, UnitRatioIsNoop) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::OR}, {{0, 1}, {1, 2}}, {{1, 0.3}});
  auto prior = prior_propagate(bag);
  auto post = posterior_update(bag, prior, 1, 1.0);
  EXPECT_NEAR(post.at(2), prior.at(2), kTol);
}

TEST(PosteriorUpdate, BayesOnContribution) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::OR}, {{0, 1}, {1, 2}}, {{1, 0.5}});
  auto post = posterior_update(bag, prior_propagate(bag), 1, 9.0);
  EXPECT_NEAR(post.at(1), 0.9, kTol);
  EXPECT_NEAR(post.at(2), 0.9, kTol);
}

TEST(PosteriorUpdate, ZeroAbsorbs) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::OR}, {{0, 1}, {1, 2}}, {{1, 0.0}});
  auto post = posterior_update(bag, prior_propagate(bag), 1, 9.0);
  EXPECT_EQ(post.at(2), 0.0);
}

TEST(PosteriorUpdate, Errors) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::OR}, {{0, 1}, {1, 2}}, {{1, 0.5}});
  auto prior = prior_propagate(bag);
  EXPECT_THROW(posterior_update(bag, prior, 7, 2.0), Error);
  EXPECT_THROW(posterior_update(bag, prior, 2, 2.0), Error);
  EXPECT_THROW(posterior_update(bag, prior, 1, 0.0), Error);
  EXPECT_THROW(posterior_update(bag, prior, 1, -1.0), Error);
}

TEST(LagToBag, AcyclicKeepsStructure) {
  auto g = datalog::solve(datalog::parse_program("a(x). b(x). c(X) :- a(X), b(X)."));
  auto lag = datalog::build_lag(g, {datalog::parse_atom("c(x)")});
  auto bag = lag_to_bag(lag, {});
  EXPECT_EQ(bag.lag.edges, lag.edges);
  EXPECT_EQ(bag.topo_order.size(), 4u);
  EXPECT_TRUE(bag.removed_edges.empty());
  for (auto& [id, e] : bag.exploit_prob)
    EXPECT_EQ(e, 1.0);
}

TEST(LagToBag, MissingVulnProbability) {
  auto p = datalog::parse_program(
      "attackerLocated(internet). hacl(internet, h, tcp, 80). networkServiceInfo(h, web, tcp, 80, root)."
      "vulExists(h, 'CVE-1', web, remote, privEscalation).");
  p.rules = datalog::builtin_rules().rules;
  auto lag = datalog::build_lag(datalog::solve(p), {datalog::parse_atom("execCode(h, root)")});
  try {
    lag_to_bag(lag, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("CVE-1"), std::string::npos);
  }
  auto bag = lag_to_bag(lag, {{"vulExists(h, 'CVE-1', web, remote, privEscalation)", 0.3}});
  for (const auto& n : bag.lag.nodes)
    if (n.kind == NodeKind::AND)
      EXPECT_EQ(bag.exploit_prob.at(n.id), n.rule_label == "R3" ? 0.3 : 1.0) << n.fact;
}

namespace {

bool has_cycle(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> ch(n);
  for (auto [f, t] : edges) {
    ch[f].push_back(t);
    ++indeg[t];
  }
  std::vector<int> q;
  for (std::size_t i = 0; i < n; ++i)
    if (!indeg[i])
      q.push_back(static_cast<int>(i));
  std::size_t seen = 0;
  while (!q.empty()) {
    int x = q.back();
    q.pop_back();
    ++seen;
    for (int c : ch[x])
      if (!--indeg[c])
        q.push_back(c);
  }
  return seen != n;
}

} // namespace

TEST(LagToBag, MutualReachabilityCycleBroken) {
  auto p = datalog::parse_program(
      "attackerLocated(internet). hacl(internet, a, tcp, 22). hacl(a, b, tcp, 22). hacl(b, a, tcp, 22)."
      "networkServiceInfo(a, ssh, tcp, 22, root). networkServiceInfo(b, ssh, tcp, 22, root)."
      "vulExists(a, 'V', ssh, remote, privEscalation). vulExists(b, 'V', ssh, remote, privEscalation).");
  p.rules = datalog::builtin_rules().rules;
  auto lag = datalog::build_lag(datalog::solve(p), {datalog::parse_atom("execCode(b, root)")});
  ASSERT_TRUE(has_cycle(lag.nodes.size(), lag.edges));
  auto bag = lag_to_bag(lag, {{"vulExists(a, 'V', ssh, remote, privEscalation)", 0.5},
                              {"vulExists(b, 'V', ssh, remote, privEscalation)", 0.5}});
  EXPECT_FALSE(bag.removed_edges.empty());
  EXPECT_FALSE(has_cycle(bag.lag.nodes.size(), bag.lag.edges));
  EXPECT_EQ(bag.topo_order.size(), bag.lag.nodes.size());
  auto b = prior_propagate(bag);
  for (const auto& [id, v] : b.p) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(BeliefTable, OneLinePerCondition) {
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::OR}, {{0, 1}, {1, 2}}, {{1, 0.25}});
  EXPECT_EQ(belief_table(bag, prior_propagate(bag)), "n0\t1.000000000\nn2\t0.250000000\n");
}

TEST(PriorPropagate, SharedAncestorTreatedAsIndependent) {
  // One uncertain leaf feeding two exploits of the same condition: the marginal
  // pass combines them as if independent, enumeration does not.
  auto bag = oracle::make_bag({NodeKind::LEAF, NodeKind::AND, NodeKind::AND, NodeKind::OR},
                              {{0, 1}, {0, 2}, {1, 3}, {2, 3}}, {{1, 1.0}, {2, 1.0}});
  std::map<int, double> priors{{0, 0.5}};
  EXPECT_NEAR(prior_propagate(bag, priors).at(3), 0.75, kTol);
  EXPECT_NEAR(oracle::brute_force_marginals(bag, priors).at(3), 0.5, kTol);
}
