#include "iirs/harness.hpp"
#include "iirs/mitigation.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace iirs::harness {

using alerts::TrafficEvent;
using nlohmann::ordered_json;

namespace {

enum class Source { zeus, zitmo, emotet };

struct Pending {
  TrafficEvent event;
  Source source;
  std::size_t local = 0;
  std::optional<emulators::HttpResponse> recorded; // zitmo replies captured at generation
};

std::string_view source_name(Source s) {
  switch (s) {
  case Source::zeus: return "zeus";
  case Source::zitmo: return "zitmo";
  case Source::emotet: return "emotet";
  }
  return "?";
}

ordered_json event_json(const TrafficEvent& ev, std::string_view source, bool response, bool permitted) {
  ordered_json j;
  j["ts"] = ev.ts;
  j["seq"] = ev.seq;
  j["source"] = source;
  j["direction"] = response ? "response" : "request";
  j["src"] = ev.src_ip.str() + ":" + std::to_string(ev.src_port);
  j["dst"] = ev.dst_ip.str() + ":" + std::to_string(ev.dst_port);
  j["method"] = ev.http_method ? ordered_json(*ev.http_method) : ordered_json(nullptr);
  j["uri"] = ev.uri ? ordered_json(*ev.uri) : ordered_json(nullptr);
  j["permitted"] = permitted;
  return j;
}

std::vector<Pending> generate(const Scenario& s) {
  std::vector<Pending> out;
  if (s.zeus) {
    emulators::ZeusBotConfig bot = *s.zeus;
    if (s.variation == Variation::infection_download) {
      out.push_back({emulators::zeus_dropper_fetch(bot, bot.start_tick, bot.first_src_port), Source::zeus, 0, {}});
      bot.start_tick += 1;
      bot.first_src_port = static_cast<std::uint16_t>(bot.first_src_port + 1);
    }
    Tick remaining = s.ticks - bot.start_tick;
    for (auto& ev : emulators::zeus_bot_run(bot, remaining))
      out.push_back({std::move(ev), Source::zeus, out.size(), {}});
  }
  if (s.zitmo) {
    emulators::ZitmoCnc cnc(s.zitmo->client.key16);
    if (!s.zitmo->url_update.empty())
      cnc.queue_url_update(s.zitmo->url_update);
    emulators::Transport transport = [&cnc](const emulators::HttpRequest& r) { return cnc.serve(r); };
    emulators::ZitmoSettings settings;
    auto exchanges = emulators::zitmo_client_run(s.zitmo->client, s.zitmo->script, s.ticks, transport, settings);
    for (std::size_t i = 0; i < exchanges.size(); ++i)
      out.push_back({std::move(exchanges[i].request), Source::zitmo, i, std::move(exchanges[i].response)});
  }
  if (s.emotet) {
    auto key = codecs::RsaKey::from_pem_file(s.emotet->public_key.string());
    auto run = emulators::emotet_traffic(s.emotet->traffic, key, s.ticks - s.emotet->traffic.start_tick, s.seed);
    for (std::size_t i = 0; i < run.events.size(); ++i)
      out.push_back({std::move(run.events[i]), Source::emotet, i, {}});
  }
  std::stable_sort(out.begin(), out.end(), [](const Pending& a, const Pending& b) {
    if (a.event.ts != b.event.ts)
      return a.event.ts < b.event.ts;
    if (a.source != b.source)
      return a.source < b.source;
    return a.local < b.local;
  });
  return out;
}

} // namespace

ordered_json run_scenario(const Scenario& s) {
  netmodel::LoadOptions opts;
  opts.include_inert_hosts = s.include_inert_hosts;
  Model model = build_model(netmodel::load_topology_file(s.topology_path.string(), opts), s.ratios);
  alerts::SignatureSet signatures = alerts::load_signatures_file(s.signatures_path.string());

  std::vector<Pending> queue = generate(s);

  emulators::ZeusCnc zeus_cnc(s.zeus_cnc);
  std::optional<emulators::EmotetCnc> emotet_cnc;
  if (s.emotet && s.emotet->private_key)
    emotet_cnc.emplace(codecs::RsaKey::from_pem_file(s.emotet->private_key->string()));

  std::set<Ipv4> cnc_hosts;
  if (s.cnc)
    cnc_hosts.insert(*s.cnc);
  if (s.emotet)
    cnc_hosts.insert(s.emotet->traffic.cnc_ip);
  for (const auto& p : queue)
    if (p.source == Source::zitmo)
      cnc_hosts.insert(p.event.dst_ip);

  defender::DefenderState state = defender::initial_state(model.context, s.costs);
  const auto& bag = model.bag();
  const auto& hostmap = model.context->hostmap;

  ordered_json alert_log = ordered_json::array();
  ordered_json beliefs = ordered_json::array();
  ordered_json decisions = ordered_json::array();
  ordered_json event_log = ordered_json::array();
  std::vector<std::string> rule_lines;
  std::optional<Tick> mitigation_tick;
  std::size_t permitted = 0, blocked = 0, post_mitigation_cnc = 0;
  std::size_t signature_alerts = 0, informative_alerts = 0;
  std::map<std::uint32_t, std::size_t> by_sid;
  std::uint64_t next_seq = 0;

  auto pass = [&](TrafficEvent ev, std::string_view source, bool response, std::vector<alerts::Alert>& batch) {
    ev.seq = next_seq++;
    bool ok = mitigation::permits(state.firewall, ev);
    event_log.push_back(event_json(ev, source, response, ok));
    if (!ok) {
      ++blocked;
      return false;
    }
    ++permitted;
    if (mitigation_tick && ev.ts > *mitigation_tick && s.infected_host && ev.src_ip == *s.infected_host &&
        cnc_hosts.contains(ev.dst_ip))
      ++post_mitigation_cnc;
    for (auto& a : alerts::match_traffic(signatures, ev))
      batch.push_back(std::move(a));
    return true;
  };

  std::size_t qi = 0;
  if (!queue.empty() && queue.front().event.ts < 0)
    throw Error("emulator produced an event before tick 0");
  for (Tick t = 0; t < s.ticks; ++t) {
    std::vector<alerts::Alert> batch;
    for (; qi < queue.size() && queue[qi].event.ts == t; ++qi) {
      Pending& p = queue[qi];
      if (!pass(p.event, source_name(p.source), false, batch))
        continue;
      std::optional<emulators::HttpResponse> reply;
      switch (p.source) {
      case Source::zeus: reply = zeus_cnc.serve(emulators::to_http_request(p.event)); break;
      case Source::zitmo: reply = p.recorded; break;
      case Source::emotet:
        if (emotet_cnc)
          reply = emotet_cnc->serve(emulators::to_http_request(p.event));
        break;
      }
      if (reply)
        pass(emulators::response_event(p.event, *reply), source_name(p.source), true, batch);
    }

    defender::Matched matched;
    for (auto& a : batch) {
      if (a.kind == alerts::SignatureKind::alert)
        ++signature_alerts;
      else
        ++informative_alerts;
      ++by_sid[a.sid];
      alert_log.push_back(ordered_json::parse(alerts::to_eve_line(a)));
      alerts::MatchResult m = alerts::map_alert(bag, hostmap, a);
      alert_log.back()["match_level"] = alerts::to_string(m.level);
      matched.emplace_back(std::move(a), std::move(m));
    }

    auto [next, decision] = defender::step(state, matched);
    if (decision.chosen.kind != Action::Kind::noop && !state.firewall.enforces(decision.chosen)) {
      for (auto& line : mitigation::render_iptables(decision.chosen))
        rule_lines.push_back(std::move(line));
      if (!mitigation_tick)
        mitigation_tick = t;
    }
    state = std::move(next);
    decisions.push_back(ordered_json::parse(defender::decision_line(decision)));

    ordered_json snap;
    snap["tick"] = t;
    snap["digest"] = decision.belief_digest;
    ordered_json goals = ordered_json::object();
    for (int g : model.context->goal_ids())
      goals[bag.lag.nodes.at(static_cast<std::size_t>(g)).fact] = state.belief.at(g);
    snap["goals"] = goals;
    beliefs.push_back(std::move(snap));
  }

  ordered_json report;
  report["scenario"] = s.name;
  report["seed"] = s.seed;
  report["ticks"] = s.ticks;
  report["graph"] = {{"nodes", bag.lag.nodes.size()},
                     {"edges", bag.lag.edges.size()},
                     {"unreachable_goals", bag.lag.unreachable_goals}};
  ordered_json sids = ordered_json::object();
  for (const auto& [sid, n] : by_sid)
    sids[std::to_string(sid)] = n;
  report["alert_counts"] = {{"total", signature_alerts + informative_alerts},
                            {"signature", signature_alerts},
                            {"informative", informative_alerts},
                            {"by_sid", sids}};
  report["alerts"] = alert_log;
  report["beliefs"] = beliefs;
  report["decisions"] = decisions;
  report["rules"] = rule_lines;
  report["mitigation_tick"] = mitigation_tick ? ordered_json(*mitigation_tick) : ordered_json(nullptr);
  report["events"] = {{"total", permitted + blocked}, {"permitted", permitted}, {"blocked", blocked}};
  report["event_log"] = event_log;
  report["cnc_reports"] = zeus_cnc.report_log().size();
  report["verdict"] = {{"goal_traffic_blocked", mitigation_tick.has_value() && post_mitigation_cnc == 0},
                       {"post_mitigation_cnc_events", post_mitigation_cnc}};
  return report;
}

std::vector<std::string> check_expectations(const ordered_json& report, const ordered_json& expect) {
  std::vector<std::string> diffs;
  if (expect.is_null())
    return diffs;
  auto compare = [&](const std::string& what, const ordered_json& want, const ordered_json& got) {
    if (want != got)
      diffs.push_back(what + ": expected " + want.dump() + ", got " + got.dump());
  };
  const auto& counts = report.at("alert_counts");
  for (const auto& [key, want] : expect.items()) {
    if (key == "alerts")
      compare(key, want, counts.at("total"));
    else if (key == "signature_alerts")
      compare(key, want, counts.at("signature"));
    else if (key == "informative_alerts")
      compare(key, want, counts.at("informative"));
    else if (key == "signature_sids") {
      std::vector<std::uint32_t> w = want.get<std::vector<std::uint32_t>>();
      std::vector<std::uint32_t> g;
      for (const auto& a : report.at("alerts"))
        if (a.at("kind") == "alert")
          g.push_back(a.at("sid").get<std::uint32_t>());
      std::sort(w.begin(), w.end());
      std::sort(g.begin(), g.end());
      compare(key, ordered_json(w), ordered_json(g));
    } else if (key == "rules")
      compare(key, want, report.at("rules"));
    else if (key == "verdict")
      compare(key, want, report.at("verdict").at("goal_traffic_blocked"));
    else
      diffs.push_back(key + ": unknown expectation");
  }
  return diffs;
}

} // namespace iirs::harness
