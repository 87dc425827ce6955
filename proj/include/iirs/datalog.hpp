#pragma once

// Forward-chaining Datalog with proof recording, and the logical attack graph
// built from the recorded proofs.

#include "iirs/common.hpp"

#include <compare>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iirs::datalog {

/// Constant that unifies with any other constant in argument position.
inline constexpr std::string_view kAnyPort = "anyPort";

struct Term {
  enum class Kind { constant, variable };
  Kind kind = Kind::constant;
  std::string text;

  static Term constant(std::string text) { return {Kind::constant, std::move(text)}; }
  static Term variable(std::string name) { return {Kind::variable, std::move(name)}; }
  bool is_variable() const { return kind == Kind::variable; }

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  bool ground() const;
  /// Canonical text: `pred(a, 'Quoted-Atom', 80)`. Used as node identity.
  std::string str() const;

  friend auto operator<=>(const Atom&, const Atom&) = default;
};

/// Renders a constant, quoting it when it is not a bare identifier or integer.
std::string render_constant(std::string_view text);

struct Rule {
  std::string label;
  Atom head;
  std::vector<Atom> body;

  std::string str() const;
};

struct Program {
  std::set<Atom> facts;
  std::vector<Rule> rules;
};

/// Parses facts and rules. Rules are labelled R1, R2, ... in order of appearance.
/// Throws ParseError on malformed text or a rule that is not range-restricted.
Program parse_program(std::string_view text);

/// Parses a single ground atom, optionally terminated by '.'.
Atom parse_atom(std::string_view text);

class ParseError : public Error {
public:
  ParseError(std::string message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

/// The minimal remote-exploitation rule set used when no rule file is supplied.
std::string_view builtin_rules_text();
Program builtin_rules();

/// Two constants unify when equal or when either is kAnyPort.
bool constants_unify(std::string_view a, std::string_view b);

/// One firing of a rule: the ground body atoms it consumed and the head it produced.
struct Instantiation {
  std::size_t rule_index = 0;
  std::vector<Atom> body;
  Atom head;
  /// Variable bindings, sorted by variable name; anonymous variables omitted.
  std::vector<std::pair<std::string, std::string>> binding;

  friend bool operator==(const Instantiation& a, const Instantiation& b) {
    return a.rule_index == b.rule_index && a.body == b.body;
  }
  friend auto operator<=>(const Instantiation& a, const Instantiation& b) {
    if (auto c = a.rule_index <=> b.rule_index; c != 0)
      return c;
    return a.body <=> b.body;
  }
};

/// Least fixpoint plus the proof hypergraph. Atoms that are input facts are never
/// re-derived: instantiations whose head is an input fact are not recorded.
struct DerivationGraph {
  std::vector<Rule> rules;
  std::set<Atom> facts;
  std::set<Atom> derived;
  std::vector<Instantiation> instantiations; // sorted, unique

  bool holds(const Atom& atom) const { return facts.contains(atom) || derived.contains(atom); }
  std::vector<const Instantiation*> derivations_of(const Atom& atom) const;
};

/// Semi-naive evaluation. Deterministic; terminates because there are no function
/// symbols.
DerivationGraph solve(const Program& program);

enum class NodeKind { AND, OR, LEAF };
std::string_view to_string(NodeKind kind);

struct LagNode {
  int id = 0;
  NodeKind kind = NodeKind::LEAF;
  /// Ground atom text for OR/LEAF; `label(Var=value, ...)` for AND.
  std::string fact;
  /// OR/LEAF: the atom. AND: the head atom.
  Atom atom;
  /// AND only.
  std::string rule_label;
  std::vector<Atom> body;
};

struct Lag {
  std::vector<LagNode> nodes; // nodes[i].id == i
  std::vector<std::pair<int, int>> edges; // sorted (from, to)
  std::vector<int> goal_ids;
  std::vector<std::string> unreachable_goals;

  bool empty() const { return nodes.empty(); }
  /// True when no goal could be derived.
  bool unreachable() const { return goal_ids.empty() && !unreachable_goals.empty(); }
  const LagNode* find(std::string_view fact) const;
  std::vector<int> parents(int id) const;
  std::vector<int> children(int id) const;
};

/// Backward slice of the proof graph from the goals: derived atoms become OR nodes,
/// input facts LEAF nodes and rule instantiations AND nodes. Edges run
/// precondition -> AND -> postcondition. Node ids follow (kind, fact) order with
/// LEAF < OR < AND.
Lag build_lag(const DerivationGraph& graph, const std::vector<Atom>& goals);

/// Checks the structural discipline; returns a description of the first violation.
std::optional<std::string> check_lag(const Lag& lag);

std::string export_dot(const Lag& lag);

} // namespace iirs::datalog
