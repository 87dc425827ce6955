#include "iirs/datalog.hpp"

#include <algorithm>
#include <unordered_map>

namespace iirs::datalog {

bool constants_unify(std::string_view a, std::string_view b) {
  return a == b || a == kAnyPort || b == kAnyPort;
}

namespace {

using Binding = std::map<std::string, std::string>;

// Greatest lower bound of two constants where anyPort is top; order independent,
// so join order never changes which head gets produced.
std::optional<std::string> meet(const std::string& a, const std::string& b) {
  if (a == b || b == kAnyPort)
    return a;
  if (a == kAnyPort)
    return b;
  return std::nullopt;
}

bool match_atom(const Atom& pattern, const Atom& fact, Binding& binding) {
  if (pattern.predicate != fact.predicate || pattern.args.size() != fact.args.size())
    return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const Term& p = pattern.args[i];
    const std::string& value = fact.args[i].text;
    if (!p.is_variable()) {
      if (!constants_unify(p.text, value))
        return false;
      continue;
    }
    auto it = binding.find(p.text);
    if (it == binding.end()) {
      binding.emplace(p.text, value);
      continue;
    }
    auto m = meet(it->second, value);
    if (!m)
      return false;
    it->second = *m;
  }
  return true;
}

Atom substitute(const Atom& pattern, const Binding& binding) {
  Atom out;
  out.predicate = pattern.predicate;
  out.args.reserve(pattern.args.size());
  for (const Term& t : pattern.args)
    out.args.push_back(t.is_variable() ? Term::constant(binding.at(t.text)) : t);
  return out;
}

using Index = std::unordered_map<std::string, std::vector<Atom>>;

class Evaluator {
public:
  Evaluator(const Program& program) : program_(program) {
    for (const Atom& f : program.facts) {
      all_.insert(f);
      full_[f.predicate].push_back(f);
    }
  }

  DerivationGraph run() {
    Index delta = full_;
    while (!delta.empty()) {
      std::set<Atom> fresh;
      for (std::size_t r = 0; r < program_.rules.size(); ++r) {
        const Rule& rule = program_.rules[r];
        for (std::size_t pos = 0; pos < rule.body.size(); ++pos) {
          auto it = delta.find(rule.body[pos].predicate);
          if (it == delta.end())
            continue;
          std::vector<Atom> chosen(rule.body.size());
          for (const Atom& seed : it->second) {
            Binding binding;
            if (!match_atom(rule.body[pos], seed, binding))
              continue;
            chosen[pos] = seed;
            join(r, pos, 0, binding, chosen, fresh);
          }
        }
      }
      delta.clear();
      for (const Atom& a : fresh) {
        all_.insert(a);
        derived_.insert(a);
        full_[a.predicate].push_back(a);
        delta[a.predicate].push_back(a);
      }
    }
    DerivationGraph graph;
    graph.rules = program_.rules;
    graph.facts = program_.facts;
    graph.derived = std::move(derived_);
    graph.instantiations.assign(insts_.begin(), insts_.end());
    return graph;
  }

private:
  void join(std::size_t r, std::size_t seed_pos, std::size_t pos, const Binding& binding,
            std::vector<Atom>& chosen, std::set<Atom>& fresh) {
    const Rule& rule = program_.rules[r];
    if (pos == seed_pos) {
      join(r, seed_pos, pos + 1, binding, chosen, fresh);
      return;
    }
    if (pos == rule.body.size()) {
      record(r, binding, chosen, fresh);
      return;
    }
    auto it = full_.find(rule.body[pos].predicate);
    if (it == full_.end())
      return;
    // Index by position: vector may grow only between rounds.
    const auto& candidates = it->second;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Binding next = binding;
      if (!match_atom(rule.body[pos], candidates[i], next))
        continue;
      chosen[pos] = candidates[i];
      join(r, seed_pos, pos + 1, next, chosen, fresh);
    }
  }

  void record(std::size_t r, const Binding& binding, const std::vector<Atom>& chosen,
              std::set<Atom>& fresh) {
    const Rule& rule = program_.rules[r];
    Atom head = substitute(rule.head, binding);
    if (program_.facts.contains(head))
      return;
    Instantiation inst;
    inst.rule_index = r;
    inst.body = chosen;
    if (insts_.contains(inst))
      return;
    inst.head = head;
    for (const auto& [name, value] : binding)
      if (!name.starts_with("_#"))
        inst.binding.emplace_back(name, value);
    insts_.insert(std::move(inst));
    if (!all_.contains(head))
      fresh.insert(std::move(head));
  }

  const Program& program_;
  std::set<Atom> all_;
  std::set<Atom> derived_;
  Index full_;
  std::set<Instantiation> insts_;
};

} // namespace

std::vector<const Instantiation*> DerivationGraph::derivations_of(const Atom& atom) const {
  std::vector<const Instantiation*> out;
  for (const auto& inst : instantiations)
    if (inst.head == atom)
      out.push_back(&inst);
  return out;
}

DerivationGraph solve(const Program& program) { return Evaluator(program).run(); }

} // namespace iirs::datalog
