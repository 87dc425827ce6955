#include "iirs/emulators.hpp"

#include <algorithm>
#include <charconv>

namespace iirs::emulators {

std::optional<std::string> HttpRequest::header(std::string_view name) const {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string want = lower(name);
  for (const auto& [k, v] : headers)
    if (lower(k) == want)
      return v;
  return std::nullopt;
}

std::uint16_t PortAllocator::allocate() {
  if (next_ == 0)
    throw Error("ephemeral port range exhausted");
  std::uint16_t p = next_;
  next_ = next_ == 65535 ? 0 : static_cast<std::uint16_t>(next_ + 1);
  return p;
}

HttpRequest to_http_request(const alerts::TrafficEvent& ev) {
  if (ev.app != alerts::App::http || !ev.uri || !ev.http_method)
    throw Error("not an HTTP request event");
  HttpRequest r;
  r.method = *ev.http_method;
  r.uri = *ev.uri;
  r.headers = ev.headers;
  r.body = ev.payload;
  return r;
}

alerts::TrafficEvent response_event(const alerts::TrafficEvent& request, const HttpResponse& response) {
  alerts::TrafficEvent ev;
  ev.ts = request.ts;
  ev.seq = request.seq;
  ev.src_ip = request.dst_ip;
  ev.dst_ip = request.src_ip;
  ev.src_port = request.dst_port;
  ev.dst_port = request.src_port;
  ev.proto = request.proto;
  ev.app = alerts::App::http;
  ev.uri = request.uri;
  ev.headers = {{"Status", std::to_string(response.status)}, {"Content-Type", response.content_type}};
  ev.payload = response.body;
  return ev;
}

bool is_loopback(std::string_view host) {
  if (host == "localhost")
    return true;
  auto ip = Ipv4::parse(host);
  return ip && (ip->value() >> 24) == 127;
}

Endpoint parse_bind(std::string_view text, bool allow_non_loopback) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error("expected host:port, got '" + std::string(text) + "'");
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  auto port_text = text.substr(colon + 1);
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535)
    throw Error("bad port in '" + std::string(text) + "'");
  e.port = port;
  if (!is_loopback(e.host) && !allow_non_loopback)
    throw Error("refusing to use non-loopback address '" + e.host + "' (pass --i-know-this-is-a-lab to override)");
  return e;
}

} // namespace iirs::emulators
