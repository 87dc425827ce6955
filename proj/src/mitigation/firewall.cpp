#include "iirs/mitigation.hpp"

#include <algorithm>
#include <fstream>

namespace iirs {

std::string Action::str() const {
  switch (kind) {
  case Kind::noop: return "noop";
  case Kind::block_specific: return "block_specific(" + src.str() + ", " + dst.str() + ")";
  case Kind::block_general: return "block_general(" + src.str() + ")";
  }
  return "?";
}

} // namespace iirs

namespace iirs::mitigation {

namespace {

const char* chain_name(Chain c) {
  switch (c) {
  case Chain::INPUT: return "INPUT";
  case Chain::OUTPUT: return "OUTPUT";
  case Chain::FORWARD: return "FORWARD";
  }
  return "?";
}

bool blocks(const FirewallRule& r, const alerts::TrafficEvent& ev) {
  if (r.chain == Chain::FORWARD)
    return ev.src_ip == r.src && (!r.dst || ev.dst_ip == *r.dst);
  // INPUT/OUTPUT pairs isolate the address in both directions.
  bool touches = ev.src_ip == r.src || ev.dst_ip == r.src;
  return touches && (!r.dst || ev.dst_ip == *r.dst || ev.src_ip == *r.dst);
}

} // namespace

std::string FirewallRule::str() const {
  std::string out = "iptables -A ";
  out += chain_name(chain);
  out += " -s " + src.str();
  if (dst)
    out += " -d " + dst->str();
  out += " -j DROP";
  return out;
}

std::vector<FirewallRule> rules_for(const Action& action) {
  switch (action.kind) {
  case Action::Kind::noop: return {};
  case Action::Kind::block_general:
    return {{Chain::INPUT, action.src, std::nullopt, Target::DROP},
            {Chain::OUTPUT, action.src, std::nullopt, Target::DROP}};
  case Action::Kind::block_specific: return {{Chain::FORWARD, action.src, action.dst, Target::DROP}};
  }
  return {};
}

std::vector<std::string> render_iptables(const Action& action) {
  std::vector<std::string> out;
  for (const auto& r : rules_for(action))
    out.push_back(r.str());
  return out;
}

bool FirewallState::contains(const FirewallRule& rule) const {
  return std::find(rules_.begin(), rules_.end(), rule) != rules_.end();
}

bool FirewallState::enforces(const Action& action) const {
  auto rules = rules_for(action);
  return std::all_of(rules.begin(), rules.end(), [&](const FirewallRule& r) { return contains(r); });
}

FirewallState apply(const FirewallState& state, const Action& action) {
  FirewallState next = state;
  for (auto& r : rules_for(action))
    if (!next.contains(r))
      next.rules_.push_back(std::move(r));
  return next;
}

bool permits(const FirewallState& state, const alerts::TrafficEvent& ev) {
  return std::none_of(state.rules().begin(), state.rules().end(),
                      [&](const FirewallRule& r) { return blocks(r, ev); });
}

void write_rules_file(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write rules file '" + path + "'");
  out << "#!/bin/sh\n";
  for (const auto& l : lines)
    out << l << '\n';
}

} // namespace iirs::mitigation
