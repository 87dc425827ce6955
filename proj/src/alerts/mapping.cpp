#include "iirs/alerts.hpp"

#include <algorithm>
#include <cctype>

namespace iirs::alerts {

using datalog::NodeKind;

std::string_view to_string(MatchLevel level) {
  switch (level) {
  case MatchLevel::L1: return "L1";
  case MatchLevel::L2: return "L2";
  case MatchLevel::L3: return "L3";
  case MatchLevel::none: return "none";
  }
  return "?";
}

double LikelihoodRatios::for_level(MatchLevel level) const {
  switch (level) {
  case MatchLevel::L1: return l1;
  case MatchLevel::L2: return l2;
  case MatchLevel::L3: return l3;
  case MatchLevel::none: return 1.0;
  }
  return 1.0;
}

namespace {

bool is_port_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

} // namespace

std::vector<ExploitSite> exploit_sites(const bag::Bag& bag) {
  std::vector<ExploitSite> sites;
  for (const auto& node : bag.lag.nodes) {
    if (node.kind != NodeKind::AND || node.atom.args.empty())
      continue;
    ExploitSite site;
    site.and_id = node.id;
    site.host = node.atom.args[0].text;
    auto take = [&](const datalog::Atom& a, std::size_t proto_at, std::size_t port_at) {
      site.proto = a.args[proto_at].text;
      site.port = a.args[port_at].text;
    };
    if (node.atom.predicate == "netAccess" && node.atom.args.size() == 3) {
      take(node.atom, 1, 2);
    } else {
      for (const auto& b : node.body) {
        if (b.predicate == "netAccess" && b.args.size() == 3 && b.args[0].text == site.host) {
          take(b, 1, 2);
          break;
        }
        if (b.predicate == "hacl" && b.args.size() == 4 && b.args[1].text == site.host) {
          take(b, 2, 3);
          break;
        }
      }
    }
    sites.push_back(std::move(site));
  }
  return sites;
}

MatchResult map_alert(const bag::Bag& bag, const netmodel::HostMap& hostmap, const Alert& alert,
                      MatchTrace* trace) {
  MatchResult result;
  auto dst_host = hostmap.host_of(alert.dst_ip);
  auto src_host = hostmap.host_of(alert.src_ip);
  if (!dst_host && !src_host)
    return result;
  // A hostname that names a different model host than the address disqualifies
  // the destination from the specific levels.
  bool dst_named = dst_host.has_value();
  if (dst_host && alert.hostname && hostmap.is_host(*alert.hostname) && *alert.hostname != *dst_host)
    dst_named = false;

  const auto sites = exploit_sites(bag);
  const std::string proto(to_string(alert.proto));
  const std::string port = std::to_string(alert.dst_port);
  auto level = [&](MatchLevel lvl, auto&& pred) {
    if (trace)
      trace->consulted.push_back(lvl);
    for (const auto& s : sites)
      if (pred(s))
        result.and_node_ids.push_back(s.and_id);
    if (result.and_node_ids.empty())
      return false;
    result.level = lvl;
    return true;
  };
  if (level(MatchLevel::L1, [&](const ExploitSite& s) {
        return dst_named && s.host == *dst_host && s.proto == proto && s.port == port;
      }))
    return result;
  if (level(MatchLevel::L2, [&](const ExploitSite& s) {
        return dst_named && s.host == *dst_host && s.proto == proto && is_port_number(s.port) && s.port != port;
      }))
    return result;
  level(MatchLevel::L3, [&](const ExploitSite& s) {
    return (dst_host && s.host == *dst_host) || (src_host && s.host == *src_host);
  });
  return result;
}

} // namespace iirs::alerts
