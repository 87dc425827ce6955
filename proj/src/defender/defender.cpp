#include "iirs/defender.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>

namespace iirs::defender {

using alerts::MatchLevel;

void CostModel::validate() const {
  if (!(goal_loss > 0) || !(block_cost_specific > 0) || !(block_cost_general > 0))
    throw Error("cost model: all costs must be positive");
  if (!(block_cost_general > block_cost_specific))
    throw Error("cost model: block_cost_general must exceed block_cost_specific");
}

Context::Context(bag::Bag b, netmodel::HostMap h, alerts::LikelihoodRatios r)
    : bag(std::move(b)), hostmap(std::move(h)), sites(alerts::exploit_sites(bag)), ratios(r) {}

DefenderState initial_state(std::shared_ptr<const Context> context, CostModel costs) {
  costs.validate();
  DefenderState s;
  s.belief = bag::prior_propagate(context->bag);
  s.context = std::move(context);
  s.costs = costs;
  return s;
}

DefenderState observe(const DefenderState& state, const Matched& matched) {
  DefenderState next = state;
  for (const auto& [alert, match] : matched) {
    if (alert.kind != alerts::SignatureKind::alert || match.level == MatchLevel::none)
      continue;
    double lr = state.context->ratios.for_level(match.level);
    for (int id : match.and_node_ids)
      next.belief = bag::posterior_update(state.context->bag, next.belief, id, lr);
  }
  ++next.tick;
  return next;
}

std::vector<Action> candidate_actions(const DefenderState& state, const Matched& matched) {
  const auto& hostmap = state.context->hostmap;
  std::set<Action> out{Action::noop()};
  for (const auto& [alert, match] : matched) {
    if (alert.kind != alerts::SignatureKind::alert || match.level == MatchLevel::none)
      continue;
    if (match.level == MatchLevel::L1 || match.level == MatchLevel::L2)
      out.insert(Action::block_specific(alert.src_ip, alert.dst_ip));
    for (Ipv4 ip : {alert.src_ip, alert.dst_ip})
      if (hostmap.is_internal(ip))
        out.insert(Action::block_general(ip));
  }
  std::vector<Action> result;
  for (const auto& a : out)
    if (a.kind == Action::Kind::noop || !state.firewall.enforces(a))
      result.push_back(a);
  return result;
}

std::set<int> severed_exploits(const DefenderState& state, const Action& action) {
  const auto& ctx = *state.context;
  auto rules = state.firewall.rules();
  for (auto& r : mitigation::rules_for(action))
    rules.push_back(r);

  auto named = [&](const std::string& name, const std::optional<std::string>& host) {
    return host && (name == *host || name == ctx.hostmap.zone_of(*host));
  };
  auto cuts = [&](const datalog::Atom& hacl) {
    const std::string& from = hacl.args[0].text;
    const std::string& to = hacl.args[1].text;
    for (const auto& r : rules) {
      auto src_host = ctx.hostmap.host_of(r.src);
      if (!src_host)
        continue;
      if (r.chain != mitigation::Chain::FORWARD) {
        if (from == *src_host || to == *src_host)
          return true;
      } else if (r.dst && named(from, src_host) && named(to, ctx.hostmap.host_of(*r.dst))) {
        return true;
      }
    }
    return false;
  };

  std::set<int> severed;
  for (const auto& node : ctx.bag.lag.nodes) {
    if (node.kind != datalog::NodeKind::AND)
      continue;
    for (const auto& b : node.body)
      if (b.predicate == "hacl" && b.args.size() == 4 && cuts(b)) {
        severed.insert(node.id);
        break;
      }
  }
  return severed;
}

double goal_belief_after(const DefenderState& state, const Action& action) {
  const auto& bag = state.context->bag;
  bag::Belief after = bag::propagate(bag, state.belief, severed_exploits(state, action));
  double total = 0.0;
  for (int g : state.context->goal_ids())
    total += after.at(g);
  return total;
}

double expected_cost(const DefenderState& state, const Action& action) {
  double availability = 0.0;
  switch (action.kind) {
  case Action::Kind::noop: break;
  case Action::Kind::block_specific: availability = state.costs.block_cost_specific; break;
  case Action::Kind::block_general: availability = state.costs.block_cost_general; break;
  }
  return state.costs.goal_loss * goal_belief_after(state, action) + availability;
}

namespace {

// Costs within a relative hair of each other are ties.
bool cheaper(double a, double b) {
  return a < b && (b - a) > 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

std::vector<std::pair<Action, double>> costed(const DefenderState& state, const Matched& matched) {
  std::vector<std::pair<Action, double>> out;
  for (const auto& a : candidate_actions(state, matched))
    out.emplace_back(a, expected_cost(state, a));
  return out;
}

Action argmin(const std::vector<std::pair<Action, double>>& options) {
  Action best = Action::noop();
  double best_cost = 0.0;
  bool first = true;
  // options are sorted by Action, so keeping the first of equal costs applies the tie rule.
  for (const auto& [a, c] : options) {
    if (first || cheaper(c, best_cost)) {
      best = a;
      best_cost = c;
      first = false;
    }
  }
  return best;
}

} // namespace

Action select_action(const DefenderState& state, const Matched& matched) {
  return argmin(costed(state, matched));
}

std::pair<DefenderState, Decision> step(const DefenderState& state, const Matched& matched) {
  Decision d;
  d.tick = state.tick;
  DefenderState next = observe(state, matched);
  d.belief_digest = belief_digest(next.context->bag, next.belief);
  d.candidates = costed(next, matched);
  d.chosen = argmin(d.candidates);
  next.firewall = mitigation::apply(next.firewall, d.chosen);
  return {std::move(next), std::move(d)};
}

std::string belief_digest(const bag::Bag& bag, const bag::Belief& belief) {
  std::string table = bag::belief_table(bag, belief);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (EVP_Digest(table.data(), table.size(), md, &n, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < 8; ++i) {
    out += digits[md[i] >> 4];
    out += digits[md[i] & 0xF];
  }
  return out;
}

std::string decision_line(const Decision& d) {
  nlohmann::ordered_json j;
  j["tick"] = d.tick;
  j["belief_digest"] = d.belief_digest;
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const auto& [a, c] : d.candidates)
    cands.push_back({{"action", a.str()}, {"cost", c}});
  j["candidates"] = cands;
  j["chosen"] = d.chosen.str();
  return j.dump();
}

} // namespace iirs::defender
