#pragma once

// iptables rendering and the virtual firewall that enforces it.

#include "iirs/action.hpp"
#include "iirs/alerts.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iirs::mitigation {

enum class Chain { INPUT, OUTPUT, FORWARD };
enum class Target { DROP };

struct FirewallRule {
  Chain chain = Chain::INPUT;
  Ipv4 src;
  std::optional<Ipv4> dst;
  Target target = Target::DROP;

  /// `iptables -A <chain> -s <src> [-d <dst>] -j DROP`
  std::string str() const;

  friend auto operator<=>(const FirewallRule&, const FirewallRule&) = default;
};

/// Append-only, duplicate-free rule list with first-match semantics.
class FirewallState {
public:
  const std::vector<FirewallRule>& rules() const { return rules_; }
  bool contains(const FirewallRule& rule) const;
  /// True when every rule the action would add is already present.
  bool enforces(const Action& action) const;

  friend bool operator==(const FirewallState&, const FirewallState&) = default;

private:
  friend FirewallState apply(const FirewallState& state, const Action& action);
  std::vector<FirewallRule> rules_;
};

std::vector<FirewallRule> rules_for(const Action& action);
std::vector<std::string> render_iptables(const Action& action);

/// Copy-on-apply; re-applying an action is a no-op.
FirewallState apply(const FirewallState& state, const Action& action);

/// INPUT/OUTPUT rules drop every event touching their source address in either
/// direction; FORWARD rules drop src->dst only.
bool permits(const FirewallState& state, const alerts::TrafficEvent& ev);

/// Writes a shell-sourceable file with one rule per line.
void write_rules_file(const std::string& path, const std::vector<std::string>& lines);

} // namespace iirs::mitigation
