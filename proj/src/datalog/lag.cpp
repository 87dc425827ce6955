#include "iirs/datalog.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

namespace iirs::datalog {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
  case NodeKind::AND: return "AND";
  case NodeKind::OR: return "OR";
  case NodeKind::LEAF: return "LEAF";
  }
  return "?";
}

const LagNode* Lag::find(std::string_view fact) const {
  for (const auto& n : nodes)
    if (n.fact == fact)
      return &n;
  return nullptr;
}

std::vector<int> Lag::parents(int id) const {
  std::vector<int> out;
  for (auto [from, to] : edges)
    if (to == id)
      out.push_back(from);
  return out;
}

std::vector<int> Lag::children(int id) const {
  std::vector<int> out;
  for (auto [from, to] : edges)
    if (from == id)
      out.push_back(to);
  return out;
}

namespace {

int kind_rank(NodeKind k) {
  switch (k) {
  case NodeKind::LEAF: return 0;
  case NodeKind::OR: return 1;
  case NodeKind::AND: return 2;
  }
  return 3;
}

std::string and_text(const std::string& label, const Instantiation& inst) {
  std::string out = label + "(";
  for (std::size_t i = 0; i < inst.binding.size(); ++i) {
    if (i)
      out += ", ";
    out += inst.binding[i].first + "=" + render_constant(inst.binding[i].second);
  }
  return out + ")";
}

} // namespace

Lag build_lag(const DerivationGraph& graph, const std::vector<Atom>& goals) {
  Lag lag;
  std::map<Atom, std::vector<const Instantiation*>> by_head;
  for (const auto& inst : graph.instantiations)
    by_head[inst.head].push_back(&inst);

  std::set<Atom> or_atoms;
  std::set<Atom> leaf_atoms;
  std::set<const Instantiation*> and_insts;
  std::deque<Atom> work;
  std::set<std::string> seen_goals;

  for (const Atom& g : goals) {
    if (!seen_goals.insert(g.str()).second)
      continue;
    if (!graph.derived.contains(g)) {
      lag.unreachable_goals.push_back(g.str());
      continue;
    }
    if (or_atoms.insert(g).second)
      work.push_back(g);
  }
  while (!work.empty()) {
    Atom atom = std::move(work.front());
    work.pop_front();
    for (const Instantiation* inst : by_head[atom]) {
      if (!and_insts.insert(inst).second)
        continue;
      for (const Atom& b : inst->body) {
        if (graph.facts.contains(b)) {
          leaf_atoms.insert(b);
        } else if (or_atoms.insert(b).second) {
          work.push_back(b);
        }
      }
    }
  }

  std::vector<LagNode> nodes;
  for (const Atom& a : leaf_atoms)
    nodes.push_back({0, NodeKind::LEAF, a.str(), a, {}, {}});
  for (const Atom& a : or_atoms)
    nodes.push_back({0, NodeKind::OR, a.str(), a, {}, {}});
  std::vector<const Instantiation*> ordered(and_insts.begin(), and_insts.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const Instantiation* a, const Instantiation* b) { return *a < *b; });
  std::map<std::string, int> text_uses;
  std::map<const Instantiation*, std::string> and_fact;
  for (const Instantiation* inst : ordered) {
    const std::string& label = graph.rules[inst->rule_index].label;
    std::string text = and_text(label, *inst);
    // Distinct bodies can share a binding when anyPort meets a concrete port.
    if (int n = ++text_uses[text]; n > 1)
      text += "#" + std::to_string(n);
    and_fact[inst] = text;
    nodes.push_back({0, NodeKind::AND, text, inst->head, label, inst->body});
  }
  std::stable_sort(nodes.begin(), nodes.end(), [](const LagNode& a, const LagNode& b) {
    return std::make_tuple(kind_rank(a.kind), std::cref(a.fact)) <
           std::make_tuple(kind_rank(b.kind), std::cref(b.fact));
  });

  std::map<std::string, int> or_leaf_id;
  std::map<std::string, int> and_id;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].id = static_cast<int>(i);
    (nodes[i].kind == NodeKind::AND ? and_id : or_leaf_id)[nodes[i].fact] = static_cast<int>(i);
  }
  std::set<std::pair<int, int>> edges;
  for (const Instantiation* inst : ordered) {
    int a = and_id.at(and_fact.at(inst));
    for (const Atom& b : inst->body)
      edges.emplace(or_leaf_id.at(b.str()), a);
    edges.emplace(a, or_leaf_id.at(inst->head.str()));
  }
  lag.nodes = std::move(nodes);
  lag.edges.assign(edges.begin(), edges.end());
  std::set<std::string> emitted;
  for (const Atom& g : goals) {
    std::string text = g.str();
    if (graph.derived.contains(g) && emitted.insert(text).second)
      lag.goal_ids.push_back(or_leaf_id.at(text));
  }
  return lag;
}

std::optional<std::string> check_lag(const Lag& lag) {
  for (std::size_t i = 0; i < lag.nodes.size(); ++i)
    if (lag.nodes[i].id != static_cast<int>(i))
      return "node " + std::to_string(i) + " has id " + std::to_string(lag.nodes[i].id);
  std::set<std::pair<NodeKind, std::string>> keys;
  for (const auto& n : lag.nodes)
    if (!keys.emplace(n.kind, n.fact).second)
      return "duplicate node " + n.fact;
  const int n = static_cast<int>(lag.nodes.size());
  for (auto [from, to] : lag.edges) {
    if (from < 0 || from >= n || to < 0 || to >= n)
      return "edge references unknown node";
    NodeKind fk = lag.nodes[from].kind;
    NodeKind tk = lag.nodes[to].kind;
    if (tk == NodeKind::LEAF)
      return "LEAF " + lag.nodes[to].fact + " has a parent";
    if (tk == NodeKind::AND && fk == NodeKind::AND)
      return "AND " + lag.nodes[to].fact + " has an AND parent";
    if (tk == NodeKind::OR && fk != NodeKind::AND)
      return "OR " + lag.nodes[to].fact + " has a non-AND parent";
  }
  for (int g : lag.goal_ids)
    if (g < 0 || g >= n || lag.nodes[g].kind != NodeKind::OR)
      return "goal " + std::to_string(g) + " is not an OR node";
  return std::nullopt;
}

std::string export_dot(const Lag& lag) {
  if (lag.nodes.empty())
    return "digraph lag { }\n";
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\')
        out += '\\';
      out += c;
    }
    return out;
  };
  std::string out = "digraph lag {\n";
  for (const auto& node : lag.nodes) {
    const char* shape = node.kind == NodeKind::AND ? "ellipse"
                        : node.kind == NodeKind::OR ? "diamond"
                                                     : "box";
    out += "  " + std::to_string(node.id) + " [label=\"" + escape(node.fact) + "\", shape=" + shape + "];\n";
  }
  for (auto [from, to] : lag.edges)
    out += "  " + std::to_string(from) + " -> " + std::to_string(to) + ";\n";
  out += "}\n";
  return out;
}

} // namespace iirs::datalog
