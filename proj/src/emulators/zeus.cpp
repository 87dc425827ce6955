#include "iirs/emulators.hpp"

namespace iirs::emulators {

using alerts::TrafficEvent;

namespace {

const char* kUserAgent = "Mozilla/4.0 (compatible; MSIE 7.0; Windows NT 6.1)";

TrafficEvent http_event(const ZeusBotConfig& cfg, Tick ts, std::uint16_t src_port, std::string method,
                        std::string uri, std::string body) {
  TrafficEvent ev;
  ev.ts = ts;
  ev.src_ip = cfg.bot_ip;
  ev.dst_ip = cfg.cnc_ip;
  ev.src_port = src_port;
  ev.dst_port = cfg.cnc_port;
  ev.proto = alerts::Transport::tcp;
  ev.app = alerts::App::http;
  ev.uri = std::move(uri);
  ev.headers = {{"Host", cfg.cnc_ip.str()}, {"User-Agent", kUserAgent}};
  if (method == "POST")
    ev.headers.emplace_back("Content-Type", "application/octet-stream");
  ev.http_method = std::move(method);
  ev.payload = std::move(body);
  return ev;
}

std::string sealed(const std::string& key, std::string_view text) {
  return codecs::to_string(codecs::zeus_seal(codecs::to_bytes(key), codecs::to_bytes(text)));
}

} // namespace

void ZeusBotConfig::validate() const {
  if (rc4_key.empty() || rc4_key.size() > 256)
    throw Error("zeus: rc4_key must be 1..256 bytes");
  if (ping_interval_ticks <= 0)
    throw Error("zeus: ping_interval_ticks must be positive");
  if (cnc_port == 0 || first_src_port == 0)
    throw Error("zeus: ports must be in 1..65535");
  for (const auto* uri : {&cfg_uri, &gate_uri, &download_uri})
    if (uri->empty() || uri->front() != '/')
      throw Error("zeus: uris must start with '/'");
}

std::string zeus_status_report(const ZeusBotConfig& cfg, int n) {
  return "bot_id=" + cfg.bot_id + "&report=status&uptime=" + std::to_string(n * cfg.ping_interval_ticks);
}

std::vector<TrafficEvent> zeus_bot_run(const ZeusBotConfig& cfg, Tick ticks) {
  cfg.validate();
  PortAllocator ports(cfg.first_src_port);
  std::vector<TrafficEvent> out;
  if (ticks <= 0)
    return out;
  out.push_back(http_event(cfg, cfg.start_tick, ports.allocate(), "GET", cfg.cfg_uri, ""));
  int n = 1;
  for (Tick rel = cfg.ping_interval_ticks; rel < ticks; rel += cfg.ping_interval_ticks, ++n)
    out.push_back(http_event(cfg, cfg.start_tick + rel, ports.allocate(), "POST", cfg.gate_uri,
                             sealed(cfg.rc4_key, zeus_status_report(cfg, n))));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].seq = i;
  return out;
}

TrafficEvent zeus_dropper_fetch(const ZeusBotConfig& cfg, Tick at, std::uint16_t src_port) {
  return http_event(cfg, at, src_port, "GET", cfg.download_uri, "");
}

std::string_view zeus_download_placeholder() {
  return "LAB PLACEHOLDER: this file stands in for the bot executable and contains no code.\n";
}

HttpResponse ZeusCnc::serve(const HttpRequest& request) {
  HttpResponse r;
  if (request.method == "GET" && request.uri == cfg_.cfg_uri) {
    r.content_type = "application/octet-stream";
    r.body = sealed(cfg_.rc4_key, cfg_.config_text);
    return r;
  }
  if (request.method == "GET" && request.uri == cfg_.download_uri) {
    r.content_type = "application/octet-stream";
    r.body = std::string(zeus_download_placeholder());
    return r;
  }
  if (request.method == "POST" && request.uri == cfg_.gate_uri) {
    std::string report =
        codecs::to_string(codecs::zeus_open(codecs::to_bytes(cfg_.rc4_key), codecs::to_bytes(request.body)));
    reports_.push_back(report);
    r.content_type = "application/octet-stream";
    r.body = sealed(cfg_.rc4_key, "status=ok&seq=" + std::to_string(reports_.size()));
    return r;
  }
  r.status = 404;
  r.body = "not found";
  return r;
}

} // namespace iirs::emulators
