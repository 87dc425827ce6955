#include "iirs/emulators.hpp"

#include <cstdio>
#include <random>

namespace iirs::emulators {

using alerts::TrafficEvent;

namespace {

std::string payload_for(const EmotetTrafficConfig& cfg, int seq) {
  std::string base = "bot=" + cfg.bot_id + "&seq=" + std::to_string(seq);
  if (seq == 0)
    return "type=handshake&" + base + "&os=win7";
  switch (cfg.payload_profile) {
  case EmotetProfile::checkin: return "type=checkin&" + base;
  case EmotetProfile::module_fetch: return "type=module_fetch&" + base + "&module=none";
  case EmotetProfile::exfil: return "type=exfil&" + base + "&records=0";
  }
  return base;
}

std::optional<std::string> cookie_value(const HttpRequest& request) {
  auto cookie = request.header("Cookie");
  if (!cookie)
    return std::nullopt;
  auto eq = cookie->find('=');
  if (eq == std::string::npos)
    return std::nullopt;
  return cookie->substr(eq + 1);
}

} // namespace

void EmotetTrafficConfig::validate() const {
  if (checkin_interval_ticks < 1)
    throw Error("emotet: checkin_interval_ticks must be at least 1");
  if (cnc_port == 0 || first_src_port == 0)
    throw Error("emotet: ports must be in 1..65535");
  if (uri.empty() || uri.front() != '/')
    throw Error("emotet: uri must start with '/'");
}

EmotetRun emotet_traffic(const EmotetTrafficConfig& cfg, const codecs::RsaKey& rsa_public, Tick ticks,
                         std::uint64_t seed) {
  cfg.validate();
  EmotetRun run;
  std::mt19937_64 rng(seed);
  for (auto& b : run.session_key)
    b = static_cast<std::uint8_t>(rng() & 0xFF);
  char name[8];
  std::snprintf(name, sizeof name, "%04X", static_cast<unsigned>(rng() & 0xFFFF));

  PortAllocator ports(cfg.first_src_port);
  int seq = 0;
  for (Tick rel = 0; rel < ticks; rel += cfg.checkin_interval_ticks, ++seq) {
    std::string payload = payload_for(cfg, seq);
    TrafficEvent ev;
    ev.ts = cfg.start_tick + rel;
    ev.seq = static_cast<std::uint64_t>(seq);
    ev.src_ip = cfg.bot_ip;
    ev.dst_ip = cfg.cnc_ip;
    ev.src_port = ports.allocate();
    ev.dst_port = cfg.cnc_port;
    ev.proto = alerts::Transport::tcp;
    ev.app = alerts::App::http;
    ev.uri = cfg.uri;
    ev.http_method = "GET";
    ev.headers = {{"Host", cfg.cnc_ip.str() + ":" + std::to_string(cfg.cnc_port)},
                  {"User-Agent", "Mozilla/4.0 (compatible; MSIE 8.0; Windows NT 6.1; Trident/4.0)"},
                  {"Cookie", std::string(name) + "=" +
                                 codecs::emotet_seal(rsa_public, run.session_key, codecs::to_bytes(payload))}};
    run.events.push_back(std::move(ev));
    run.payloads.push_back(std::move(payload));
  }
  return run;
}

HttpResponse EmotetCnc::serve(const HttpRequest& request) {
  HttpResponse r;
  auto value = cookie_value(request);
  if (!value) {
    r.status = 404;
    r.body = "not found";
    return r;
  }
  codecs::EmotetOpened opened;
  try {
    opened = codecs::emotet_open(key_, *value);
  } catch (const Error&) {
    r.status = 404;
    r.body = "not found";
    return r;
  }
  received_.push_back(codecs::to_string(opened.payload));
  r.content_type = "application/octet-stream";
  r.body = codecs::emotet_session_encrypt(opened.session_key,
                                          codecs::to_bytes("status=ok&seq=" + std::to_string(received_.size())));
  return r;
}

} // namespace iirs::emulators
