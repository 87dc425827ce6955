#include "iirs/emulators.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace iirs::emulators {

using alerts::TrafficEvent;
using codecs::ZitmoMessage;
using codecs::ZitmoService;

namespace {

struct UrlParts {
  Ipv4 ip;
  std::uint16_t port = 80;
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const std::string scheme = "http://";
  if (!url.starts_with(scheme))
    throw Error("zitmo: C&C url must start with http:// ('" + url + "')");
  std::string rest = url.substr(scheme.size());
  auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  UrlParts u;
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.find(':');
  std::string host = authority.substr(0, colon);
  auto ip = Ipv4::parse(host);
  if (!ip)
    throw Error("zitmo: C&C url host must be an IPv4 literal ('" + url + "')");
  u.ip = *ip;
  if (colon != std::string::npos) {
    std::string_view p(authority);
    p.remove_prefix(colon + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
    if (ec != std::errc{} || ptr != p.data() + p.size() || port < 1 || port > 65535)
      throw Error("zitmo: bad port in url '" + url + "'");
    u.port = static_cast<std::uint16_t>(port);
  }
  return u;
}

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "\n" : "") + v[i];
  return out;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty())
      out.push_back(line);
  return out;
}

class Client {
public:
  Client(const ZitmoClientConfig& cfg, const Transport& transport, ZitmoSettings& settings)
      : cfg_(cfg), transport_(transport), settings_(settings), ports_(cfg.first_src_port), urls_(cfg.cnc_urls),
        login_(cfg.account) {}

  void boot(Tick t) {
    if (auto stored = settings_.read(cfg_.settings_path)) {
      auto urls = split_lines(*stored);
      if (!urls.empty())
        urls_ = urls;
    }
    booted_ = true;
    ZitmoMessage m = base(ZitmoService::timer);
    m.login.clear();
    m.dd = codecs::zitmo_url_digest(urls_);
    m.flag = 0;
    m.urls = urls_;
    take_urls(send(t, m));
    next_ping_ = t + cfg_.ping_interval_ticks;
  }

  void account_entry(Tick t, const std::string& text) {
    login_ = text;
    send(t, base(ZitmoService::login));
  }

  void incoming_sms(Tick t, const std::string& text, const std::string& number) {
    ZitmoMessage m = base(ZitmoService::sms);
    m.phone.clear();
    m.devid.clear();
    m.text = text;
    m.number = number;
    send(t, m);
  }

  void maybe_ping(Tick t) {
    if (!booted_ || t != next_ping_)
      return;
    ZitmoMessage m = base(ZitmoService::timer);
    m.dd = codecs::zitmo_url_digest(urls_);
    m.flag = 1;
    take_urls(send(t, m));
    next_ping_ = t + cfg_.ping_interval_ticks;
  }

  std::vector<ZitmoExchange> exchanges;

private:
  ZitmoMessage base(ZitmoService s) const {
    ZitmoMessage m;
    m.services = s;
    m.login = login_;
    m.phone = cfg_.phone;
    m.devid = cfg_.devid;
    return m;
  }

  HttpResponse send(Tick t, const ZitmoMessage& m) {
    UrlParts u = split_url(urls_.front());
    TrafficEvent ev;
    ev.ts = t;
    ev.seq = exchanges.size();
    ev.src_ip = cfg_.device_ip;
    ev.dst_ip = u.ip;
    ev.src_port = ports_.allocate();
    ev.dst_port = u.port;
    ev.proto = alerts::Transport::tcp;
    ev.app = alerts::App::http;
    ev.uri = u.path;
    ev.http_method = "POST";
    ev.headers = {{"Host", urls_.front().substr(7, urls_.front().find('/', 7) - 7)},
                  {"Content-Type", "text/plain"},
                  {"User-Agent", "Dalvik/1.4.0 (Linux; U; Android 2.3)"}};
    ev.payload = codecs::zitmo_encrypt(cfg_.key16, codecs::zitmo_format(m));
    HttpResponse r = transport_(to_http_request(ev));
    exchanges.push_back({std::move(ev), m, r});
    return r;
  }

  void take_urls(const HttpResponse& r) {
    if (r.status != 200 || r.body.empty())
      return;
    std::vector<std::string> urls;
    try {
      urls = codecs::zitmo_parse_response(codecs::zitmo_decrypt(cfg_.key16, r.body));
    } catch (const Error&) {
      return;
    }
    if (urls.empty() || urls == urls_)
      return;
    urls_ = std::move(urls);
    settings_.write(cfg_.settings_path, join_lines(urls_));
  }

  const ZitmoClientConfig& cfg_;
  const Transport& transport_;
  ZitmoSettings& settings_;
  PortAllocator ports_;
  std::vector<std::string> urls_;
  std::string login_;
  bool booted_ = false;
  Tick next_ping_ = -1;
};

} // namespace

void ZitmoClientConfig::validate() const {
  if (key16.size() != 16)
    throw Error("zitmo: key must be 16 bytes");
  if (ping_interval_ticks <= 0)
    throw Error("zitmo: ping_interval_ticks must be positive");
  if (cnc_urls.empty())
    throw Error("zitmo: at least one C&C url is required");
  for (const auto& u : cnc_urls)
    split_url(u);
  if (first_src_port == 0)
    throw Error("zitmo: first_src_port must be in 1..65535");
}

void ZitmoSettings::write(const std::string& device_path, const std::string& content) {
  ++writes_;
  if (!root_) {
    memory_[device_path] = content;
    return;
  }
  std::filesystem::path p = *root_ / std::filesystem::path(device_path).relative_path();
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write settings file '" + p.string() + "'");
  out << content;
}

std::optional<std::string> ZitmoSettings::read(const std::string& device_path) const {
  if (!root_) {
    auto it = memory_.find(device_path);
    if (it == memory_.end())
      return std::nullopt;
    return it->second;
  }
  std::ifstream in(*root_ / std::filesystem::path(device_path).relative_path(), std::ios::binary);
  if (!in)
    return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ZitmoExchange> zitmo_client_run(const ZitmoClientConfig& cfg, const std::vector<ZitmoScriptItem>& script,
                                            Tick ticks, const Transport& transport, ZitmoSettings& settings) {
  cfg.validate();
  Client client(cfg, transport, settings);
  using K = ZitmoScriptItem::Kind;
  for (Tick t = 0; t < ticks; ++t) {
    for (const auto& item : script) {
      if (item.at != t)
        continue;
      switch (item.kind) {
      case K::boot: client.boot(t); break;
      case K::account_entry: client.account_entry(t, item.text); break;
      case K::incoming_sms: client.incoming_sms(t, item.text, item.number); break;
      }
    }
    client.maybe_ping(t);
  }
  return std::move(client.exchanges);
}

HttpResponse ZitmoCnc::serve(const HttpRequest& request) {
  HttpResponse r;
  ZitmoMessage m;
  try {
    m = codecs::zitmo_parse(codecs::zitmo_decrypt(key_, request.body));
  } catch (const Error&) {
    r.body.clear();
    return r;
  }
  received_.push_back(m);
  std::vector<std::string> reply;
  if (m.services == ZitmoService::timer && pending_ && m.dd != codecs::zitmo_url_digest(*pending_))
    reply = *pending_;
  r.body = codecs::zitmo_encrypt(key_, codecs::zitmo_format_response(reply));
  return r;
}

} // namespace iirs::emulators
