#include "iirs/alerts.hpp"
#include "iirs/codecs.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace iirs::alerts {

using nlohmann::ordered_json;

namespace {

Transport parse_transport(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "tcp")
    return Transport::tcp;
  if (s == "udp")
    return Transport::udp;
  throw Error("unsupported transport '" + s + "'");
}

std::uint16_t parse_port(const ordered_json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 1 || j.get<long long>() > 65535)
    throw Error(std::string(what) + ": expected a port in 1..65535");
  return static_cast<std::uint16_t>(j.get<long long>());
}

template <typename T, typename F>
std::vector<T> read_lines(const std::string& path, F&& parse) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open '" + path + "'");
  std::vector<T> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      parse(line, lineno, out);
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

} // namespace

std::string to_eve_line(const Alert& a) {
  ordered_json j;
  j["ts"] = a.ts;
  j["sid"] = a.sid;
  j["msg"] = a.msg;
  j["kind"] = a.kind == SignatureKind::alert ? "alert" : "informative";
  j["src_ip"] = a.src_ip.str();
  j["dst_ip"] = a.dst_ip.str();
  j["dst_port"] = a.dst_port;
  j["proto"] = std::string(to_string(a.proto));
  if (a.hostname)
    j["hostname"] = *a.hostname;
  return j.dump();
}

Alert parse_eve_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw Error(std::string("malformed alert record: ") + e.what());
  }
  if (!j.is_object())
    throw Error("alert record must be an object");
  Alert a;
  const ordered_json* alert_obj = j.contains("alert") && j["alert"].is_object() ? &j["alert"] : nullptr;
  auto get = [&](const char* ours, const char* eve) -> const ordered_json* {
    if (j.contains(ours))
      return &j[ours];
    if (eve && j.contains(eve))
      return &j[eve];
    return nullptr;
  };

  if (auto ts = get("ts", nullptr); ts && ts->is_number_integer())
    a.ts = ts->get<Tick>();
  else
    a.ts = -1;

  const ordered_json* sid = get("sid", nullptr);
  if (!sid && alert_obj && alert_obj->contains("signature_id"))
    sid = &(*alert_obj)["signature_id"];
  if (!sid || !sid->is_number_unsigned())
    throw Error("alert record: missing sid");
  a.sid = sid->get<std::uint32_t>();

  if (auto msg = get("msg", nullptr); msg && msg->is_string())
    a.msg = msg->get<std::string>();
  else if (alert_obj && alert_obj->contains("signature") && (*alert_obj)["signature"].is_string())
    a.msg = (*alert_obj)["signature"].get<std::string>();

  std::string kind = j.value("kind", std::string("alert"));
  if (kind == "alert")
    a.kind = SignatureKind::alert;
  else if (kind == "informative")
    a.kind = SignatureKind::informative;
  else
    throw Error("alert record: unknown kind '" + kind + "'");

  auto ip = [&](const char* ours, const char* eve) {
    auto v = get(ours, eve);
    if (!v || !v->is_string())
      throw Error(std::string("alert record: missing ") + ours);
    return Ipv4::from_string(v->get<std::string>(), ours);
  };
  a.src_ip = ip("src_ip", nullptr);
  a.dst_ip = ip("dst_ip", "dest_ip");
  auto port = get("dst_port", "dest_port");
  if (!port)
    throw Error("alert record: missing dst_port");
  a.dst_port = parse_port(*port, "dst_port");
  auto proto = get("proto", nullptr);
  if (!proto || !proto->is_string())
    throw Error("alert record: missing proto");
  a.proto = parse_transport(proto->get<std::string>());
  if (auto h = get("hostname", nullptr); h && h->is_string())
    a.hostname = h->get<std::string>();
  else if (j.contains("http") && j["http"].is_object() && j["http"].contains("hostname") &&
           j["http"]["hostname"].is_string())
    a.hostname = j["http"]["hostname"].get<std::string>();
  return a;
}

std::vector<Alert> read_eve_file(const std::string& path) {
  Tick next_untimed = 0;
  auto alerts = read_lines<Alert>(path, [&](const std::string& line, int, std::vector<Alert>& out) {
    auto probe = ordered_json::parse(line, nullptr, false);
    if (probe.is_object() && probe.contains("event_type") && probe["event_type"] != "alert")
      return;
    Alert a = parse_eve_line(line);
    if (a.ts < 0)
      a.ts = next_untimed++;
    else
      next_untimed = std::max(next_untimed, a.ts + 1);
    out.push_back(std::move(a));
  });
  std::stable_sort(alerts.begin(), alerts.end(), [](const Alert& a, const Alert& b) { return a.ts < b.ts; });
  return alerts;
}

std::string to_event_line(const TrafficEvent& ev) {
  ordered_json j;
  j["ts"] = ev.ts;
  j["seq"] = ev.seq;
  j["src_ip"] = ev.src_ip.str();
  j["dst_ip"] = ev.dst_ip.str();
  j["src_port"] = ev.src_port;
  j["dst_port"] = ev.dst_port;
  j["proto"] = std::string(to_string(ev.proto));
  j["app"] = std::string(to_string(ev.app));
  if (ev.uri)
    j["uri"] = *ev.uri;
  if (ev.http_method)
    j["http_method"] = *ev.http_method;
  ordered_json headers = ordered_json::array();
  for (const auto& [k, v] : ev.headers)
    headers.push_back({k, v});
  j["headers"] = headers;
  j["payload_b64"] = codecs::base64_encode(codecs::to_bytes(ev.payload));
  return j.dump();
}

TrafficEvent parse_event_line(std::string_view line) {
  ordered_json j = ordered_json::parse(line);
  TrafficEvent ev;
  ev.ts = j.at("ts").get<Tick>();
  ev.seq = j.value("seq", std::uint64_t{0});
  ev.src_ip = Ipv4::from_string(j.at("src_ip").get<std::string>(), "src_ip");
  ev.dst_ip = Ipv4::from_string(j.at("dst_ip").get<std::string>(), "dst_ip");
  ev.src_port = parse_port(j.at("src_port"), "src_port");
  ev.dst_port = parse_port(j.at("dst_port"), "dst_port");
  ev.proto = parse_transport(j.at("proto").get<std::string>());
  std::string app = j.at("app").get<std::string>();
  if (app == "http")
    ev.app = App::http;
  else if (app == "dns")
    ev.app = App::dns;
  else if (app == "raw")
    ev.app = App::raw;
  else
    throw Error("unknown app '" + app + "'");
  if (j.contains("uri"))
    ev.uri = j["uri"].get<std::string>();
  if (j.contains("http_method"))
    ev.http_method = j["http_method"].get<std::string>();
  if (j.contains("headers"))
    for (const auto& h : j["headers"])
      ev.headers.emplace_back(h.at(0).get<std::string>(), h.at(1).get<std::string>());
  if (j.contains("payload_b64"))
    ev.payload = codecs::to_string(codecs::base64_decode(j["payload_b64"].get<std::string>()));
  ev.validate();
  return ev;
}

std::vector<TrafficEvent> read_event_file(const std::string& path) {
  auto events = read_lines<TrafficEvent>(path, [](const std::string& line, int, std::vector<TrafficEvent>& out) {
    out.push_back(parse_event_line(line));
  });
  std::stable_sort(events.begin(), events.end(), event_before);
  return events;
}

} // namespace iirs::alerts
