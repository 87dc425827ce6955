#include "iirs/harness.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace iirs;
using namespace iirs::harness;
using nlohmann::ordered_json;

namespace {

Scenario shipped(const std::string& name) {
  return load_scenario_file(oracle::data_path("scenarios/" + name + ".json"));
}

const std::vector<std::string> kShipped{"zeus-variation1", "zeus-variation2", "zitmo-demo", "emotet-demo"};

std::vector<std::string> rules(const ordered_json& report) { return report["rules"].get<std::vector<std::string>>(); }

} // namespace

TEST(Model, TestbedGraphShape) {
  auto m = build_model(netmodel::load_topology_file(oracle::data_path("scenarios/paper-testbed.json").string()));
  EXPECT_EQ(m.lag().nodes.size(), 8u);
  EXPECT_EQ(m.lag().edges.size(), 7u);
  EXPECT_EQ(m.context->goal_ids().size(), 1u);
  EXPECT_NEAR(bag::prior_propagate(m.bag()).at(m.context->goal_ids()[0]), 0.02, 1e-12);
  EXPECT_EQ(vuln_probs(m.network).at("vulExists(win7, 'ZBOT-DROP', browser, remote, privEscalation)"), 0.02);
}

TEST(Model, InertHostsLeaveGraphUnchanged) {
  auto path = oracle::data_path("scenarios/paper-testbed.json").string();
  auto a = build_model(netmodel::load_topology_file(path));
  auto b = build_model(netmodel::load_topology_file(path, {.include_inert_hosts = true}));
  EXPECT_EQ(datalog::export_dot(a.lag()), datalog::export_dot(b.lag()));
}

TEST(Scenario, ShippedScenariosMeetExpectations) {
  for (const auto& name : kShipped) {
    auto report = run_scenario(shipped(name));
    auto diffs = check_expectations(report, shipped(name).expect);
    EXPECT_TRUE(diffs.empty()) << name << ": " << (diffs.empty() ? "" : diffs.front());
  }
}

TEST(Scenario, InfectionDownload) {
  auto report = run_scenario(shipped("zeus-variation1"));
  EXPECT_EQ(report["alert_counts"]["total"], 7);
  EXPECT_EQ(report["alert_counts"]["signature"], 5);
  EXPECT_EQ(rules(report), (std::vector<std::string>{"iptables -A INPUT -s 192.168.0.17 -j DROP",
                                                     "iptables -A OUTPUT -s 192.168.0.17 -j DROP"}));
  EXPECT_TRUE(report["verdict"]["goal_traffic_blocked"].get<bool>());
}

TEST(Scenario, PreInfectedBlocksLaterCheckIns) {
  auto report = run_scenario(shipped("zeus-variation2"));
  EXPECT_EQ(report["alert_counts"]["total"], 17);
  EXPECT_TRUE(report["verdict"]["goal_traffic_blocked"].get<bool>());
  EXPECT_GT(report["events"]["blocked"].get<int>(), 0);
  Tick mitigated = report["mitigation_tick"].get<Tick>();
  for (const auto& e : report["event_log"])
    if (e["ts"].get<Tick>() > mitigated && e.contains("uri") && e["uri"] == "/gate.php")
      EXPECT_FALSE(e["permitted"].get<bool>());
  auto beliefs = report["beliefs"];
  ASSERT_GE(beliefs.size(), 2u);
  double before = beliefs.front()["goals"].begin().value().get<double>();
  double after = beliefs.back()["goals"].begin().value().get<double>();
  EXPECT_GT(after, before);
}

TEST(Scenario, NoTrafficYetMeansNoop) {
  auto sc = shipped("zeus-variation2");
  sc.ticks = 3;
  auto report = run_scenario(sc);
  EXPECT_EQ(report["alert_counts"]["total"], 0);
  EXPECT_TRUE(report["alerts"].empty());
  for (const auto& d : report["decisions"])
    EXPECT_EQ(d["chosen"], "noop");
  EXPECT_TRUE(report["rules"].empty());
}

TEST(Scenario, Deterministic) {
  for (const auto& name : kShipped)
    EXPECT_EQ(run_scenario(shipped(name)).dump(), run_scenario(shipped(name)).dump()) << name;
}

TEST(Scenario, ParseErrors) {
  auto base = oracle::data_path("scenarios");
  auto doc = ordered_json::parse(oracle::read_text(base / "zeus-variation1.json"));
  doc["bogus"] = 1;
  EXPECT_THROW(parse_scenario(doc, base), Error);
  doc.erase("bogus");
  doc["ticks"] = 0;
  EXPECT_THROW(parse_scenario(doc, base), Error);
  doc["ticks"] = 10;
  doc["topology"] = "missing.json";
  EXPECT_THROW(parse_scenario(doc, base), Error);
}

TEST(Scenario, ResolveByName) {
  EXPECT_TRUE(std::filesystem::exists(resolve_scenario("zeus-variation1")));
  EXPECT_THROW(resolve_scenario("no-such-scenario"), Error);
}

TEST(Expectations, ReportsDifferences) {
  auto report = run_scenario(shipped("zeus-variation1"));
  ordered_json expect = {{"alerts", 8}, {"verdict", true}};
  auto diffs = check_expectations(report, expect);
  ASSERT_EQ(diffs.size(), 1u);
  EXPECT_NE(diffs[0].find("alerts"), std::string::npos);
  EXPECT_TRUE(check_expectations(report, ordered_json{}).empty());
}

TEST(Replay, AlertsGroupedByTick) {
  auto sc = shipped("zeus-variation1");
  auto report = run_scenario(sc);
  std::vector<alerts::Alert> as;
  for (const auto& a : report["alerts"])
    as.push_back(alerts::parse_eve_line(a.dump()));
  auto m = build_model(netmodel::load_topology_file(sc.topology_path.string()));
  auto decisions = replay_alerts(m, as);
  ASSERT_FALSE(decisions.empty());
  EXPECT_EQ(decisions.back().chosen, Action::block_general(Ipv4::from_string("192.168.0.17")));
}
