#pragma once

// One-step belief-greedy response policy: fold matched alerts into the BAG
// belief, then pick the action with the lowest expected cost.

#include "iirs/action.hpp"
#include "iirs/alerts.hpp"
#include "iirs/bag.hpp"
#include "iirs/mitigation.hpp"
#include "iirs/netmodel.hpp"

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace iirs::defender {

struct CostModel {
  double goal_loss = 100.0;
  double block_cost_specific = 1.0;
  double block_cost_general = 5.0;

  /// Throws iirs::Error unless all costs are positive and general > specific.
  void validate() const;
  CostModel scaled(double k) const { return {goal_loss * k, block_cost_specific * k, block_cost_general * k}; }
};

/// Immutable graph-side context shared by every defender state.
struct Context {
  bag::Bag bag;
  netmodel::HostMap hostmap;
  std::vector<alerts::ExploitSite> sites;
  alerts::LikelihoodRatios ratios;

  Context(bag::Bag bag, netmodel::HostMap hostmap, alerts::LikelihoodRatios ratios = {});
  const std::vector<int>& goal_ids() const { return bag.lag.goal_ids; }
};

struct DefenderState {
  std::shared_ptr<const Context> context;
  bag::Belief belief;
  mitigation::FirewallState firewall;
  Tick tick = 0;
  CostModel costs;
};

using Matched = std::vector<std::pair<alerts::Alert, alerts::MatchResult>>;

/// Starts from the prior belief with an empty firewall.
DefenderState initial_state(std::shared_ptr<const Context> context, CostModel costs = {});

/// Applies the level's likelihood ratio to every matched AND node, then advances
/// the tick. Informative alerts and level-none matches are ignored.
DefenderState observe(const DefenderState& state, const Matched& matched);

/// noop, block_specific for every alert whose port the graph models (L1/L2),
/// block_general for every internal endpoint of a matched alert. Sorted, without
/// duplicates or actions the firewall already enforces.
std::vector<Action> candidate_actions(const DefenderState& state, const Matched& matched);

/// AND nodes whose reachability (hacl) precondition the firewall plus `action`
/// would cut.
std::set<int> severed_exploits(const DefenderState& state, const Action& action);

/// Summed goal-node belief after the action takes effect.
double goal_belief_after(const DefenderState& state, const Action& action);

double expected_cost(const DefenderState& state, const Action& action);

/// Argmin of expected_cost over candidate_actions; ties go to the smaller Action.
Action select_action(const DefenderState& state, const Matched& matched);

struct Decision {
  Tick tick = 0;
  std::string belief_digest;
  std::vector<std::pair<Action, double>> candidates;
  Action chosen;
};

/// observe + select in one step, with the record the decision log needs.
std::pair<DefenderState, Decision> step(const DefenderState& state, const Matched& matched);

/// Stable hex digest of the belief table.
std::string belief_digest(const bag::Bag& bag, const bag::Belief& belief);

/// One JSON object per line.
std::string decision_line(const Decision& d);

} // namespace iirs::defender
