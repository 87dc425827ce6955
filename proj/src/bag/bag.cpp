#include "iirs/bag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

namespace iirs::bag {

using datalog::NodeKind;

double Belief::at(int id) const {
  if (auto it = p.find(id); it != p.end())
    return it->second;
  if (auto it = exploit.find(id); it != exploit.end())
    return it->second;
  throw Error("belief has no entry for node " + std::to_string(id));
}

void Bag::index() {
  const std::size_t n = lag.nodes.size();
  parents_.assign(n, {});
  children_.assign(n, {});
  for (auto [from, to] : lag.edges) {
    children_[from].push_back(to);
    parents_[to].push_back(from);
  }
  // Kahn with a min-heap so the order is unique.
  std::vector<int> indegree(n, 0);
  for (auto [from, to] : lag.edges)
    ++indegree[to];
  std::vector<int> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0)
      ready.push_back(static_cast<int>(i));
  std::make_heap(ready.begin(), ready.end(), std::greater<>{});
  topo_order.clear();
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
    int id = ready.back();
    ready.pop_back();
    topo_order.push_back(id);
    for (int c : children_[id])
      if (--indegree[c] == 0) {
        ready.push_back(c);
        std::push_heap(ready.begin(), ready.end(), std::greater<>{});
      }
  }
  if (topo_order.size() != n)
    throw Error("attack graph still contains a cycle");
}

namespace {

std::vector<std::pair<int, int>> back_edges(const datalog::Lag& lag) {
  const std::size_t n = lag.nodes.size();
  std::vector<std::vector<int>> children(n);
  for (auto [from, to] : lag.edges)
    children[from].push_back(to);
  for (auto& c : children)
    std::sort(c.begin(), c.end());

  enum class Colour { white, grey, black };
  std::vector<Colour> colour(n, Colour::white);
  std::vector<std::pair<int, int>> back;
  // Iterative DFS; each frame is (node, next child index).
  auto visit = [&](int root) {
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    colour[root] = Colour::grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next == children[node].size()) {
        colour[node] = Colour::black;
        stack.pop_back();
        continue;
      }
      int child = children[node][next++];
      if (colour[child] == Colour::grey) {
        back.emplace_back(node, child);
      } else if (colour[child] == Colour::white) {
        colour[child] = Colour::grey;
        stack.emplace_back(child, 0);
      }
    }
  };
  for (const auto& node : lag.nodes)
    if (node.kind == NodeKind::LEAF && node.atom.predicate == "attackerLocated" && colour[node.id] == Colour::white)
      visit(node.id);
  for (const auto& node : lag.nodes)
    if (colour[node.id] == Colour::white)
      visit(node.id);
  std::sort(back.begin(), back.end());
  return back;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

} // namespace

Bag lag_to_bag(const datalog::Lag& lag, const VulnProbs& vuln_probs) {
  Bag bag;
  bag.lag = lag;
  bag.removed_edges = back_edges(lag);
  if (!bag.removed_edges.empty()) {
    std::vector<std::pair<int, int>> kept;
    std::set_difference(lag.edges.begin(), lag.edges.end(), bag.removed_edges.begin(), bag.removed_edges.end(),
                        std::back_inserter(kept));
    bag.lag.edges = std::move(kept);
  }
  for (const auto& node : lag.nodes) {
    if (node.kind != NodeKind::AND)
      continue;
    double e = 1.0;
    for (const auto& b : node.body) {
      if (b.predicate != "vulExists")
        continue;
      auto it = vuln_probs.find(b.str());
      if (it == vuln_probs.end())
        throw Error("no success probability for " + b.str());
      if (!(it->second >= 0.0 && it->second <= 1.0))
        throw Error("success probability for " + b.str() + " is outside [0,1]");
      e *= it->second;
    }
    bag.exploit_prob[node.id] = e;
  }
  bag.index();
  return bag;
}

double and_prob(std::span<const double> parent_beliefs, double e) {
  double p = e;
  for (double q : parent_beliefs)
    p *= q;
  return clamp01(p);
}

double or_prob(std::span<const double> incoming) {
  double none = 1.0;
  for (double q : incoming)
    none *= 1.0 - q;
  return clamp01(1.0 - none);
}

double bayes_update(double q, double likelihood_ratio) {
  if (q <= 0.0)
    return 0.0;
  if (q >= 1.0)
    return 1.0;
  return clamp01(q * likelihood_ratio / (q * likelihood_ratio + (1.0 - q)));
}

namespace {

// Same as repeated bayes_update, but stable for very long evidence runs.
double apply_log_odds(double q, double log_lr) {
  if (q <= 0.0)
    return 0.0;
  if (q >= 1.0)
    return 1.0;
  double x = std::log(q) - std::log1p(-q) + log_lr;
  return clamp01(x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
}

} // namespace

Belief propagate(const Bag& bag, const Belief& belief, const std::set<int>& severed) {
  Belief out;
  out.log_odds = belief.log_odds;
  std::vector<double> value(bag.lag.nodes.size(), 0.0);
  std::vector<double> scratch;
  for (int id : bag.topo_order) {
    const auto& node = bag.lag.nodes[id];
    const auto& parents = bag.parents_ref(id);
    scratch.clear();
    for (int p : parents)
      scratch.push_back(value[p]);
    switch (node.kind) {
    case NodeKind::LEAF: {
      auto it = belief.p.find(id);
      value[id] = it == belief.p.end() ? 1.0 : clamp01(it->second);
      out.p[id] = value[id];
      break;
    }
    case NodeKind::AND: {
      double q = and_prob(scratch, bag.exploit_prob.at(id));
      if (auto it = belief.log_odds.find(id); it != belief.log_odds.end())
        q = apply_log_odds(q, it->second);
      if (severed.contains(id))
        q = 0.0;
      value[id] = q;
      out.exploit[id] = q;
      break;
    }
    case NodeKind::OR:
      // A condition whose only derivations were cut by cycle breaking keeps 0.
      value[id] = or_prob(scratch);
      out.p[id] = value[id];
      break;
    }
  }
  return out;
}

Belief prior_propagate(const Bag& bag, const std::map<int, double>& leaf_priors) {
  Belief seed;
  for (const auto& node : bag.lag.nodes) {
    if (node.kind != NodeKind::LEAF)
      continue;
    auto it = leaf_priors.find(node.id);
    seed.p[node.id] = it == leaf_priors.end() ? 1.0 : it->second;
  }
  return propagate(bag, seed);
}

Belief posterior_update(const Bag& bag, const Belief& belief, int and_node_id, double likelihood_ratio) {
  if (and_node_id < 0 || and_node_id >= static_cast<int>(bag.lag.nodes.size()))
    throw Error("unknown node id " + std::to_string(and_node_id));
  if (!bag.is_and(and_node_id))
    throw Error("node " + std::to_string(and_node_id) + " is not an AND node");
  if (!(likelihood_ratio > 0.0) || !std::isfinite(likelihood_ratio))
    throw Error("likelihood ratio must be positive and finite");
  Belief next = belief;
  next.log_odds[and_node_id] += std::log(likelihood_ratio);
  return propagate(bag, next);
}

std::string belief_table(const Bag& bag, const Belief& belief) {
  std::string out;
  char buf[32];
  for (const auto& node : bag.lag.nodes) {
    if (node.kind == NodeKind::AND)
      continue;
    std::snprintf(buf, sizeof buf, "%.9f", belief.at(node.id));
    out += node.fact + "\t" + buf + "\n";
  }
  return out;
}

} // namespace iirs::bag
