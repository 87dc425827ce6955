#include "iirs/harness.hpp"

namespace iirs::harness {

bag::VulnProbs vuln_probs(const netmodel::NetworkModel& model) {
  bag::VulnProbs out;
  for (const auto& v : model.vulns) {
    datalog::Atom a;
    a.predicate = "vulExists";
    for (std::string s : {v.host, v.vuln_id, v.program, std::string(netmodel::to_string(v.range)),
                          std::string(netmodel::to_string(v.consequence))})
      a.args.push_back(datalog::Term::constant(std::move(s)));
    out[a.str()] = v.success_prob;
  }
  return out;
}

Model build_model(netmodel::NetworkModel network, alerts::LikelihoodRatios ratios) {
  Model m;
  m.tuples = netmodel::to_datalog(network);
  datalog::Program program = m.tuples.program();
  for (auto& r : datalog::builtin_rules().rules)
    program.rules.push_back(std::move(r));
  m.derivation = datalog::solve(program);
  datalog::Lag lag = datalog::build_lag(m.derivation, network.goal_atoms());
  bag::Bag bag = bag::lag_to_bag(lag, vuln_probs(network));
  netmodel::HostMap hostmap(network);
  m.network = std::move(network);
  m.context = std::make_shared<const defender::Context>(std::move(bag), std::move(hostmap), ratios);
  return m;
}

std::vector<defender::Decision> replay_alerts(const Model& model, const std::vector<alerts::Alert>& alerts,
                                              const defender::CostModel& costs) {
  std::vector<defender::Decision> out;
  defender::DefenderState state = defender::initial_state(model.context, costs);
  const auto& bag = model.bag();
  const auto& hostmap = model.context->hostmap;
  for (std::size_t i = 0; i < alerts.size();) {
    defender::Matched batch;
    std::size_t j = i;
    for (; j < alerts.size() && alerts[j].ts == alerts[i].ts; ++j)
      batch.emplace_back(alerts[j], alerts::map_alert(bag, hostmap, alerts[j]));
    auto [next, decision] = defender::step(state, batch);
    state = std::move(next);
    out.push_back(std::move(decision));
    i = j;
  }
  return out;
}

} // namespace iirs::harness
