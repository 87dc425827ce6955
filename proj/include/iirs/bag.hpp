#pragma once

// Bayesian attack graph over the logical attack graph.
//
// Every LEAF is an independent Bernoulli variable with its prior. An AND node is
// true when all of its parents are true and its exploit succeeds (independently,
// with probability exploit_prob). An OR node is true when any parent AND is true,
// which gives the noisy-OR over the AND marginals. Beliefs are kept as per-node
// marginals; the forward pass is exact on singly connected graphs.

#include "iirs/datalog.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace iirs::bag {

struct Bag {
  datalog::Lag lag; // acyclic: back edges already removed
  std::map<int, double> exploit_prob; // AND id -> success probability
  std::vector<int> topo_order;
  std::vector<std::pair<int, int>> removed_edges;

  std::vector<int> parents(int id) const { return parents_.at(id); }
  const std::vector<int>& parents_ref(int id) const { return parents_.at(id); }
  const std::vector<int>& children_ref(int id) const { return children_.at(id); }
  bool is_and(int id) const { return lag.nodes.at(id).kind == datalog::NodeKind::AND; }
  bool is_leaf(int id) const { return lag.nodes.at(id).kind == datalog::NodeKind::LEAF; }

  /// Rebuilds adjacency and topological order from lag.edges; throws if cyclic.
  void index();

private:
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

/// Probabilities of the security conditions plus the exploit evidence that has
/// been folded in so far.
struct Belief {
  std::map<int, double> p; // OR and LEAF nodes; LEAF entries are the priors
  std::map<int, double> exploit; // AND nodes: posterior contribution
  std::map<int, double> log_odds; // AND nodes with evidence: accumulated log likelihood ratio

  double at(int id) const;
};

/// Key: canonical vulExists atom text.
using VulnProbs = std::map<std::string, double>;

/// Breaks cycles (DFS from attackerLocated leaves, ascending id; back edges
/// removed) and assigns each AND node the success probability of its vulExists
/// parent, or 1.0 when the rule uses no vulnerability.
Bag lag_to_bag(const datalog::Lag& lag, const VulnProbs& vuln_probs);

double and_prob(std::span<const double> parent_beliefs, double e);
double or_prob(std::span<const double> incoming);

/// Bayes re-weighting of a probability by a likelihood ratio.
double bayes_update(double q, double likelihood_ratio);

/// Leaves missing from leaf_priors default to 1.0 (facts known to hold).
Belief prior_propagate(const Bag& bag, const std::map<int, double>& leaf_priors = {});

/// Recomputes every non-LEAF node in topological order from the LEAF priors and
/// accumulated evidence held in `belief`. AND nodes in `severed` contribute 0.
Belief propagate(const Bag& bag, const Belief& belief, const std::set<int>& severed = {});

/// Folds one observation into the exploit contribution of `and_node_id` and
/// recomputes descendants. Throws iirs::Error for an unknown or non-AND node, or a
/// non-positive ratio.
Belief posterior_update(const Bag& bag, const Belief& belief, int and_node_id, double likelihood_ratio);

/// `fact<TAB>probability` per OR/LEAF node in id order.
std::string belief_table(const Bag& bag, const Belief& belief);

} // namespace iirs::bag
