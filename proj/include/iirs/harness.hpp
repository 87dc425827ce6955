#pragma once

// Scenario runner: topology -> attack graph -> BAG, emulated traffic -> virtual
// firewall -> IDS -> defender, one tick at a time, summarised in a JSON report.

#include "iirs/alerts.hpp"
#include "iirs/bag.hpp"
#include "iirs/datalog.hpp"
#include "iirs/defender.hpp"
#include "iirs/emulators.hpp"
#include "iirs/netmodel.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace iirs::harness {

/// Everything derived from a topology before any traffic is seen.
struct Model {
  netmodel::NetworkModel network;
  netmodel::TupleSet tuples;
  datalog::DerivationGraph derivation;
  std::shared_ptr<const defender::Context> context;

  const bag::Bag& bag() const { return context->bag; }
  const datalog::Lag& lag() const { return context->bag.lag; }
};

/// vulExists atom text -> success probability.
bag::VulnProbs vuln_probs(const netmodel::NetworkModel& model);

Model build_model(netmodel::NetworkModel network, alerts::LikelihoodRatios ratios = {});

enum class Variation { none, infection_download, pre_infected };

struct ZitmoSetup {
  emulators::ZitmoClientConfig client;
  std::vector<emulators::ZitmoScriptItem> script;
  std::vector<std::string> url_update; // queued on the C&C before the run when non-empty
};

struct EmotetSetup {
  emulators::EmotetTrafficConfig traffic;
  std::filesystem::path public_key;
  std::optional<std::filesystem::path> private_key;
};

struct Scenario {
  std::string name;
  std::filesystem::path topology_path;
  std::filesystem::path signatures_path;
  bool include_inert_hosts = false;
  Variation variation = Variation::none;
  Tick ticks = 1;
  std::uint64_t seed = 0;
  std::optional<Ipv4> infected_host;
  std::optional<Ipv4> cnc;
  std::optional<emulators::ZeusBotConfig> zeus;
  emulators::ZeusCncConfig zeus_cnc;
  std::optional<ZitmoSetup> zitmo;
  std::optional<EmotetSetup> emotet;
  defender::CostModel costs;
  alerts::LikelihoodRatios ratios;
  nlohmann::ordered_json expect; // null when the scenario asserts nothing
};

/// Relative paths resolve against `base_dir`. Throws iirs::Error naming the field.
Scenario parse_scenario(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Accepts a path, or a bare name looked up as `<dir>/<name>.json` under
/// ./scenarios and the installed data directory.
std::filesystem::path resolve_scenario(const std::string& name_or_path);

/// Runs the loop and returns the report. Deterministic for a fixed scenario.
nlohmann::ordered_json run_scenario(const Scenario& scenario);

/// Differences between a report and an expectation block; empty when it holds.
/// Keys: alerts, signature_alerts, informative_alerts, signature_sids (multiset),
/// rules (ordered), verdict.
std::vector<std::string> check_expectations(const nlohmann::ordered_json& report,
                                            const nlohmann::ordered_json& expect);

/// Defender decisions for a pre-recorded alert stream, one tick per distinct ts.
std::vector<defender::Decision> replay_alerts(const Model& model, const std::vector<alerts::Alert>& alerts,
                                              const defender::CostModel& costs = {});

} // namespace iirs::harness
