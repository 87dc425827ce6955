// iirs command-line front end.

#include "iirs/harness.hpp"
#include "iirs/mitigation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

using namespace iirs;
using nlohmann::ordered_json;

namespace {

std::string read_stdin() {
  return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
}

std::string chomp(std::string s) {
  if (!s.empty() && s.back() == '\n')
    s.pop_back();
  if (!s.empty() && s.back() == '\r')
    s.pop_back();
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write '" + path + "'");
  out << content;
}

void sleep_ticks(Tick n, int tick_ms) {
  if (n > 0 && tick_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(n * tick_ms));
}

// Runs `tmpl` once per rule line, with every "{}" replaced by the line.
int exec_rules(const std::string& tmpl, const std::vector<std::string>& lines) {
  for (const auto& line : lines) {
    std::string cmd = tmpl;
    for (std::size_t pos = cmd.find("{}"); pos != std::string::npos; pos = cmd.find("{}", pos + line.size()))
      cmd.replace(pos, 2, line);
    std::cerr << "exec: " << cmd << "\n";
    if (int rc = std::system(cmd.c_str()); rc != 0) {
      std::cerr << "error: command exited with status " << rc << "\n";
      return 1;
    }
  }
  return 0;
}

ordered_json message_json(const codecs::ZitmoMessage& m) {
  ordered_json j;
  static const char* names[] = {"timer", "login", "sms"};
  j["services"] = names[static_cast<int>(m.services)];
  j["login"] = m.login;
  if (m.services != codecs::ZitmoService::sms) {
    j["phone"] = m.phone;
    j["devid"] = m.devid;
  }
  if (m.dd)
    j["dd"] = *m.dd;
  if (m.flag)
    j["flag"] = *m.flag;
  if (!m.urls.empty())
    j["urls"] = m.urls;
  if (m.text)
    j["text"] = *m.text;
  if (m.number)
    j["number"] = *m.number;
  return j;
}

codecs::ZitmoMessage message_from_json(const ordered_json& j) {
  codecs::ZitmoMessage m;
  std::string s = j.at("services").get<std::string>();
  if (s == "timer")
    m.services = codecs::ZitmoService::timer;
  else if (s == "login")
    m.services = codecs::ZitmoService::login;
  else if (s == "sms")
    m.services = codecs::ZitmoService::sms;
  else
    throw Error("services: expected timer, login or sms");
  m.login = j.value("login", std::string());
  m.phone = j.value("phone", std::string());
  m.devid = j.value("devid", std::string());
  if (j.contains("dd"))
    m.dd = j["dd"].get<std::string>();
  if (j.contains("flag"))
    m.flag = j["flag"].get<int>();
  if (j.contains("urls"))
    m.urls = j["urls"].get<std::vector<std::string>>();
  if (j.contains("text"))
    m.text = j["text"].get<std::string>();
  if (j.contains("number"))
    m.number = j["number"].get<std::string>();
  return m;
}

codecs::SessionKey session_key_from_hex(const std::string& hex) {
  codecs::Bytes b = codecs::from_hex(hex);
  if (b.size() != 16)
    throw Error("--session-key must be 32 hex digits");
  codecs::SessionKey k{};
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

std::vector<emulators::ZitmoScriptItem> default_zitmo_script(const std::string& account) {
  using K = emulators::ZitmoScriptItem::Kind;
  return {{0, K::boot, "", ""},
          {1, K::account_entry, account, ""},
          {2, K::incoming_sms, "OTP for transaction #5356323274 is 163572.", "3085550174"}};
}

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

void serve_until_interrupted(emulators::Endpoint endpoint, emulators::Transport handler) {
  emulators::LiveServer server(endpoint, std::move(handler));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  int port = server.start();
  std::cerr << "listening on " << endpoint.host << ":" << port << " (Ctrl-C to stop)" << std::endl;
  while (!g_interrupted)
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intrusion response simulator: attack graphs, belief-driven defender, C&C traffic emulators"};
  app.require_subcommand(1);
  std::function<int()> action;

  // ---------------------------------------------------------------- graph
  auto* graph = app.add_subcommand("graph", "Build the attack graph for a topology; print DOT and prior beliefs");
  std::string g_topology, g_dot, g_priors, g_tuples;
  bool g_inert = false;
  graph->add_option("--topology", g_topology, "Topology file")->required();
  graph->add_option("--dot", g_dot, "Write the LAG as DOT here");
  graph->add_option("--priors", g_priors, "Write the prior belief table here (default: stdout)");
  graph->add_option("--tuples", g_tuples, "Write the Datalog input tuples here");
  graph->add_flag("--inert", g_inert, "Include inert hosts");
  graph->callback([&] {
    action = [&] {
      netmodel::LoadOptions opts;
      opts.include_inert_hosts = g_inert;
      harness::Model m = harness::build_model(netmodel::load_topology_file(g_topology, opts));
      for (const auto& g : m.lag().unreachable_goals)
        std::cerr << "warning: goal not derivable: " << g << "\n";
      if (!g_tuples.empty())
        write_file(g_tuples, m.tuples.text());
      if (!g_dot.empty())
        write_file(g_dot, datalog::export_dot(m.lag()));
      std::string table = bag::belief_table(m.bag(), bag::prior_propagate(m.bag()));
      if (g_priors.empty())
        std::cout << table;
      else
        write_file(g_priors, table);
      return 0;
    };
  });

  // ---------------------------------------------------------------- run
  auto* run = app.add_subcommand("run", "Run a scenario and write its report");
  std::string r_scenario, r_report, r_rules, r_exec;
  std::optional<std::uint64_t> r_seed;
  bool r_no_check = false;
  run->add_option("--scenario", r_scenario, "Scenario file or shipped scenario name")->required();
  run->add_option("--report", r_report, "Write the JSON report here (default: stdout)");
  run->add_option("--emit-rules", r_rules, "Write the selected iptables lines to a shell file");
  run->add_option("--exec", r_exec, "Run this command per rule line, '{}' replaced by the line (lab use)");
  run->add_option("--seed", r_seed, "Override the scenario seed");
  run->add_flag("--no-check", r_no_check, "Skip the scenario's expect block");
  run->callback([&] {
    action = [&] {
      harness::Scenario s = harness::load_scenario_file(harness::resolve_scenario(r_scenario));
      if (r_seed)
        s.seed = *r_seed;
      ordered_json report = harness::run_scenario(s);
      std::string text = report.dump(2) + "\n";
      if (r_report.empty())
        std::cout << text;
      else
        write_file(r_report, text);
      auto rules = report["rules"].get<std::vector<std::string>>();
      if (!r_rules.empty())
        mitigation::write_rules_file(r_rules, rules);
      const auto& counts = report["alert_counts"];
      std::cerr << s.name << ": " << counts["total"] << " alerts (" << counts["signature"] << " signature, "
                << counts["informative"] << " informative), " << rules.size() << " rule lines, verdict "
                << report["verdict"]["goal_traffic_blocked"] << "\n";
      if (!r_exec.empty())
        if (int rc = exec_rules(r_exec, rules); rc != 0)
          return rc;
      if (r_no_check)
        return 0;
      auto diffs = harness::check_expectations(report, s.expect);
      for (const auto& d : diffs)
        std::cerr << "MISMATCH " << d << "\n";
      return diffs.empty() ? 0 : 1;
    };
  });

  // ---------------------------------------------------------------- replay
  auto* replay = app.add_subcommand("replay", "Feed a recorded alert or event stream to the defender");
  std::string p_topology, p_alerts, p_events, p_signatures, p_rules;
  bool p_inert = false;
  replay->add_option("--topology", p_topology, "Topology file")->required();
  auto* alerts_opt = replay->add_option("--alerts", p_alerts, "Line-delimited alert log (EVE subset)");
  auto* events_opt = replay->add_option("--events", p_events, "Line-delimited traffic events");
  alerts_opt->excludes(events_opt);
  replay->add_option("--signatures", p_signatures, "Signature file (with --events)");
  replay->add_option("--emit-rules", p_rules, "Write the selected iptables lines to a shell file");
  replay->add_flag("--inert", p_inert, "Include inert hosts");
  replay->callback([&] {
    if (p_alerts.empty() == p_events.empty())
      throw CLI::ValidationError("replay", "exactly one of --alerts or --events is required");
    if (!p_events.empty() && p_signatures.empty())
      throw CLI::ValidationError("replay", "--events needs --signatures");
    action = [&] {
      netmodel::LoadOptions opts;
      opts.include_inert_hosts = p_inert;
      harness::Model m = harness::build_model(netmodel::load_topology_file(p_topology, opts));
      std::vector<alerts::Alert> stream;
      if (!p_alerts.empty()) {
        stream = alerts::read_eve_file(p_alerts);
      } else {
        auto sigs = alerts::load_signatures_file(p_signatures);
        mitigation::FirewallState fw;
        for (const auto& ev : alerts::read_event_file(p_events))
          for (auto& a : alerts::match_traffic(sigs, ev))
            stream.push_back(std::move(a));
      }
      std::vector<std::string> rules;
      mitigation::FirewallState fw;
      for (const auto& d : harness::replay_alerts(m, stream)) {
        std::cout << defender::decision_line(d) << "\n";
        if (!fw.enforces(d.chosen))
          for (auto& line : mitigation::render_iptables(d.chosen))
            rules.push_back(std::move(line));
        fw = mitigation::apply(fw, d.chosen);
      }
      if (!p_rules.empty())
        mitigation::write_rules_file(p_rules, rules);
      return 0;
    };
  });

  // ---------------------------------------------------------------- codec
  auto* codec = app.add_subcommand("codec", "Wire-format codecs (stdin -> stdout)");
  codec->require_subcommand(1);
  std::string c_key, c_pem, c_session;
  bool c_hex = false;

  auto* zeus = codec->add_subcommand("zeus", "RC4 + XOR chaining");
  zeus->require_subcommand(1);
  auto* zeus_seal = zeus->add_subcommand("seal", "Seal stdin bytes");
  auto* zeus_open = zeus->add_subcommand("open", "Open a sealed blob from stdin");
  for (auto* sc : {zeus_seal, zeus_open}) {
    sc->add_option("--key", c_key, "RC4 key")->required();
    sc->add_flag("--hex", c_hex, "Blob is uppercase hex text instead of raw bytes");
  }
  zeus_seal->callback([&] {
    action = [&] {
      auto out = codecs::zeus_seal(codecs::to_bytes(c_key), codecs::to_bytes(read_stdin()));
      if (c_hex)
        std::cout << codecs::hex_upper(out) << "\n";
      else
        std::cout << codecs::to_string(out);
      return 0;
    };
  });
  zeus_open->callback([&] {
    action = [&] {
      std::string in = read_stdin();
      codecs::Bytes blob = c_hex ? codecs::from_hex(chomp(in)) : codecs::to_bytes(in);
      std::cout << codecs::to_string(codecs::zeus_open(codecs::to_bytes(c_key), blob));
      return 0;
    };
  });

  auto* zitmo = codec->add_subcommand("zitmo", "AES-128-ECB + Base64 and the message format");
  zitmo->require_subcommand(1);
  c_key = std::string(codecs::kZitmoDefaultKey);
  auto* z_enc = zitmo->add_subcommand("enc", "Encrypt one line of plaintext");
  auto* z_dec = zitmo->add_subcommand("dec", "Decrypt Base64 text");
  auto* z_fmt = zitmo->add_subcommand("fmt", "Format a JSON message object");
  auto* z_parse = zitmo->add_subcommand("parse", "Parse a message into JSON");
  for (auto* sc : {z_enc, z_dec})
    sc->add_option("--key", c_key, "16-byte key")->capture_default_str();
  z_enc->callback([&] {
    action = [&] {
      std::cout << codecs::zitmo_encrypt(c_key, chomp(read_stdin())) << "\n";
      return 0;
    };
  });
  z_dec->callback([&] {
    action = [&] {
      std::cout << codecs::zitmo_decrypt(c_key, chomp(read_stdin())) << "\n";
      return 0;
    };
  });
  z_fmt->callback([&] {
    action = [&] {
      std::cout << codecs::zitmo_format(message_from_json(ordered_json::parse(read_stdin()))) << "\n";
      return 0;
    };
  });
  z_parse->callback([&] {
    action = [&] {
      std::cout << message_json(codecs::zitmo_parse(chomp(read_stdin()))).dump() << "\n";
      return 0;
    };
  });

  auto* emotet = codec->add_subcommand("emotet", "RSA-wrapped AES cookie envelope");
  emotet->require_subcommand(1);
  auto* e_seal = emotet->add_subcommand("seal", "Seal stdin into a cookie value");
  auto* e_open = emotet->add_subcommand("open", "Open a cookie value from stdin");
  e_seal->add_option("--public", c_pem, "RSA public key (PEM)")->required();
  e_seal->add_option("--session-key", c_session, "32 hex digits")->required();
  e_open->add_option("--private", c_pem, "RSA private key (PEM)")->required();
  e_seal->callback([&] {
    action = [&] {
      auto key = codecs::RsaKey::from_pem_file(c_pem);
      std::cout << codecs::emotet_seal(key, session_key_from_hex(c_session), codecs::to_bytes(read_stdin()))
                << "\n";
      return 0;
    };
  });
  e_open->callback([&] {
    action = [&] {
      auto key = codecs::RsaKey::from_pem_file(c_pem);
      auto opened = codecs::emotet_open(key, chomp(read_stdin()));
      std::cerr << "session key " << codecs::hex_upper(opened.session_key) << "\n";
      std::cout << codecs::to_string(opened.payload);
      return 0;
    };
  });

  auto* crc = codec->add_subcommand("crc32", "CRC-32 of stdin bytes");
  crc->callback([&] {
    action = [&] {
      std::cout << codecs::crc32_hex(read_stdin()) << "\n";
      return 0;
    };
  });

  // ---------------------------------------------------------------- emulate
  auto* emulate = app.add_subcommand("emulate", "C&C traffic emulators (live over loopback, or scripted)");
  emulate->require_subcommand(1);
  std::string m_bind = "127.0.0.1:8080", m_connect = "127.0.0.1:8080", m_out, m_pem, m_account = "123456789";
  std::string m_key;
  std::vector<std::string> m_urls;
  bool m_lab = false;
  Tick m_ticks = 60;
  int m_tick_ms = 0;
  std::uint64_t m_seed = 1;

  auto add_common = [&](CLI::App* sc, const std::string& role) {
    if (role == "serve") {
      sc->add_option("--bind", m_bind, "host:port to listen on")->capture_default_str();
      sc->add_flag("--i-know-this-is-a-lab", m_lab, "Allow binding a non-loopback address");
    } else {
      sc->add_option("--ticks", m_ticks, "Ticks to simulate")->capture_default_str()->check(CLI::PositiveNumber);
      if (role == "client") {
        sc->add_option("--connect", m_connect, "host:port of a running emulated C&C")->capture_default_str();
        sc->add_option("--tick-ms", m_tick_ms, "Wall-clock milliseconds per tick")->check(CLI::NonNegativeNumber);
        sc->add_flag("--i-know-this-is-a-lab", m_lab, "Allow connecting to a non-loopback address");
      } else {
        sc->add_option("--out", m_out, "Write events here (default: stdout)");
      }
    }
  };
  auto emit_events = [&](const std::vector<alerts::TrafficEvent>& events) {
    std::ostringstream os;
    for (const auto& ev : events)
      os << alerts::to_event_line(ev) << "\n";
    if (m_out.empty())
      std::cout << os.str();
    else
      write_file(m_out, os.str());
  };

  // Zeus
  auto* ez = emulate->add_subcommand("zeus", "Zeus 2.x bot and C&C");
  ez->require_subcommand(1);
  emulators::ZeusBotConfig zcfg;
  zcfg.bot_ip = Ipv4::from_string("192.168.0.17");
  zcfg.cnc_ip = Ipv4::from_string("172.16.4.67");
  for (const char* role : {"client", "serve", "script"}) {
    auto* sc = ez->add_subcommand(role, std::string("Zeus ") + role);
    add_common(sc, role);
    sc->add_option("--key", zcfg.rc4_key, "RC4 key")->capture_default_str();
    if (std::string(role) != "serve")
      sc->add_option("--interval", zcfg.ping_interval_ticks, "Ticks between check-ins")->capture_default_str();
    std::string r = role;
    sc->callback([&, r] {
      action = [&, r] {
        if (r == "serve") {
          emulators::ZeusCncConfig cc;
          cc.rc4_key = zcfg.rc4_key;
          auto cnc = std::make_shared<emulators::ZeusCnc>(cc);
          serve_until_interrupted(emulators::parse_bind(m_bind, m_lab), [cnc](const emulators::HttpRequest& q) {
            auto resp = cnc->serve(q);
            if (q.uri == cnc->config().gate_uri && resp.status == 200)
              std::cerr << "report: " << cnc->report_log().back() << "\n";
            return resp;
          });
          return 0;
        }
        auto events = emulators::zeus_bot_run(zcfg, m_ticks);
        if (r == "script") {
          emit_events(events);
          return 0;
        }
        auto transport = emulators::http_transport(emulators::parse_bind(m_connect, m_lab));
        Tick prev = 0;
        for (const auto& ev : events) {
          sleep_ticks(ev.ts - prev, m_tick_ms);
          prev = ev.ts;
          auto resp = transport(emulators::to_http_request(ev));
          std::string body = resp.status == 200 && resp.body != emulators::zeus_download_placeholder()
                                 ? codecs::to_string(codecs::zeus_open(codecs::to_bytes(zcfg.rc4_key),
                                                                       codecs::to_bytes(resp.body)))
                                 : resp.body;
          std::cout << ev.ts << " " << *ev.http_method << " " << *ev.uri << " -> " << resp.status << " " << body
                    << "\n";
        }
        return 0;
      };
    });
  }

  // ZitMo
  auto* ezm = emulate->add_subcommand("zitmo", "ZitMo Android client and C&C");
  ezm->require_subcommand(1);
  emulators::ZitmoClientConfig zmcfg;
  for (const char* role : {"client", "serve", "script"}) {
    auto* sc = ezm->add_subcommand(role, std::string("ZitMo ") + role);
    add_common(sc, role);
    sc->add_option("--key", zmcfg.key16, "16-byte AES key")->capture_default_str();
    if (std::string(role) == "serve")
      sc->add_option("--url-update", m_urls, "Queue this URL list for the next ping");
    else
      sc->add_option("--account", m_account, "Account number typed at account entry")->capture_default_str();
    std::string r = role;
    sc->callback([&, r] {
      action = [&, r] {
        if (r == "serve") {
          auto cnc = std::make_shared<emulators::ZitmoCnc>(zmcfg.key16);
          if (!m_urls.empty())
            cnc->queue_url_update(m_urls);
          serve_until_interrupted(emulators::parse_bind(m_bind, m_lab), [cnc](const emulators::HttpRequest& q) {
            auto resp = cnc->serve(q);
            if (!resp.body.empty())
              std::cerr << "message: " << codecs::zitmo_format(cnc->received().back()) << "\n";
            return resp;
          });
          return 0;
        }
        auto script = default_zitmo_script(m_account);
        emulators::ZitmoSettings settings;
        std::vector<emulators::ZitmoExchange> exchanges;
        if (r == "script") {
          emulators::ZitmoCnc cnc(zmcfg.key16);
          emulators::Transport t = [&cnc](const emulators::HttpRequest& q) { return cnc.serve(q); };
          exchanges = emulators::zitmo_client_run(zmcfg, script, m_ticks, t, settings);
          std::vector<alerts::TrafficEvent> events;
          for (auto& x : exchanges)
            events.push_back(x.request);
          emit_events(events);
          return 0;
        }
        auto http = emulators::http_transport(emulators::parse_bind(m_connect, m_lab));
        int tick_ms = m_tick_ms;
        emulators::Transport t = [http, tick_ms](const emulators::HttpRequest& q) {
          sleep_ticks(1, tick_ms);
          return http(q);
        };
        exchanges = emulators::zitmo_client_run(zmcfg, script, m_ticks, t, settings);
        for (const auto& x : exchanges) {
          std::string reply = x.response.body.empty() ? "" : codecs::zitmo_decrypt(zmcfg.key16, x.response.body);
          std::cout << x.request.ts << " " << codecs::zitmo_format(x.message) << " -> " << reply << "\n";
        }
        return 0;
      };
    });
  }

  // Emotet
  auto* ee = emulate->add_subcommand("emotet", "Emotet-shaped bot traffic and C&C");
  ee->require_subcommand(1);
  emulators::EmotetTrafficConfig ecfg;
  ecfg.bot_ip = Ipv4::from_string("192.168.0.17");
  ecfg.cnc_ip = Ipv4::from_string("172.16.4.67");
  for (const char* role : {"client", "serve", "script"}) {
    auto* sc = ee->add_subcommand(role, std::string("Emotet ") + role);
    add_common(sc, role);
    std::string r = role;
    if (r == "serve") {
      sc->add_option("--private", m_pem, "RSA private key (PEM)")->required();
    } else {
      sc->add_option("--public", m_pem, "RSA public key (PEM)")->required();
      sc->add_option("--seed", m_seed, "Seed for the session key")->capture_default_str();
      sc->add_option("--interval", ecfg.checkin_interval_ticks, "Ticks between check-ins")->capture_default_str();
    }
    sc->callback([&, r] {
      action = [&, r] {
        if (r == "serve") {
          auto cnc = std::make_shared<emulators::EmotetCnc>(codecs::RsaKey::from_pem_file(m_pem));
          serve_until_interrupted(emulators::parse_bind(m_bind, m_lab), [cnc](const emulators::HttpRequest& q) {
            auto resp = cnc->serve(q);
            if (resp.status == 200)
              std::cerr << "check-in: " << cnc->received().back() << "\n";
            return resp;
          });
          return 0;
        }
        auto key = codecs::RsaKey::from_pem_file(m_pem);
        auto run = emulators::emotet_traffic(ecfg, key, m_ticks, m_seed);
        if (r == "script") {
          emit_events(run.events);
          return 0;
        }
        auto transport = emulators::http_transport(emulators::parse_bind(m_connect, m_lab));
        Tick prev = 0;
        for (std::size_t i = 0; i < run.events.size(); ++i) {
          const auto& ev = run.events[i];
          sleep_ticks(ev.ts - prev, m_tick_ms);
          prev = ev.ts;
          auto resp = transport(emulators::to_http_request(ev));
          std::string reply = resp.status == 200
                                  ? codecs::to_string(codecs::emotet_session_decrypt(run.session_key, resp.body))
                                  : std::to_string(resp.status);
          std::cout << ev.ts << " " << run.payloads[i] << " -> " << reply << "\n";
        }
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "run with --help for usage\n";
    return 2;
  }
  try {
    return action ? action() : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
