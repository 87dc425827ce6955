#pragma once

// Benign traffic generators reproducing the C&C conversation shapes of the three
// families. Payloads are synthetic printable records wrapped in the real codecs;
// nothing here carries executable content.

#include "iirs/alerts.hpp"
#include "iirs/codecs.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iirs::emulators {

struct HttpRequest {
  std::string method;
  std::string uri;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "text/plain";
  std::string body;
};

/// Carries one request to a C&C and returns its reply: an in-process server in
/// scripted mode, a loopback HTTP client in live mode.
using Transport = std::function<HttpResponse(const HttpRequest&)>;

/// Ephemeral source ports: start at 49152 and advance by one per connection.
class PortAllocator {
public:
  explicit PortAllocator(std::uint16_t first = 49152) : next_(first) {}
  std::uint16_t allocate();
  std::uint16_t peek() const { return next_; }

private:
  std::uint16_t next_;
};

HttpRequest to_http_request(const alerts::TrafficEvent& ev);
/// Server-to-client event for a request: endpoints swapped, same uri, no method.
alerts::TrafficEvent response_event(const alerts::TrafficEvent& request, const HttpResponse& response);

/// True for 127.0.0.0/8 and "localhost".
bool is_loopback(std::string_view host);

// ---------------------------------------------------------------- Zeus

struct ZeusBotConfig {
  Ipv4 bot_ip;
  Ipv4 cnc_ip;
  std::uint16_t cnc_port = 80;
  std::string rc4_key = "lab-botnet-key";
  std::string cfg_uri = "/cfg.bin";
  std::string gate_uri = "/gate.php";
  std::string download_uri = "/bot.exe";
  Tick ping_interval_ticks = 25;
  std::string bot_id = "WIN7-0017";
  Tick start_tick = 0;
  std::uint16_t first_src_port = 49152;

  void validate() const;
};

/// Printable status record the bot reports on its n-th check-in.
std::string zeus_status_report(const ZeusBotConfig& cfg, int n);

/// Event at start_tick: GET cfg_uri. Then one POST gate_uri with a sealed status
/// report every ping_interval_ticks, while the relative tick is < ticks.
std::vector<alerts::TrafficEvent> zeus_bot_run(const ZeusBotConfig& cfg, Tick ticks);

/// The victim browser fetching the bot executable from the C&C host.
alerts::TrafficEvent zeus_dropper_fetch(const ZeusBotConfig& cfg, Tick at, std::uint16_t src_port);

struct ZeusCncConfig {
  std::string rc4_key = "lab-botnet-key";
  std::string cfg_uri = "/cfg.bin";
  std::string gate_uri = "/gate.php";
  std::string download_uri = "/bot.exe";
  std::string config_text = "version=2.0.8.9;url_loader=/bot.exe;url_server=/gate.php;injects=none";
};

class ZeusCnc {
public:
  explicit ZeusCnc(ZeusCncConfig cfg = {}) : cfg_(std::move(cfg)) {}

  /// GET cfg_uri -> sealed config; POST gate_uri -> sealed ack and a report log
  /// line; GET download_uri -> placeholder file; anything else -> 404.
  HttpResponse serve(const HttpRequest& request);
  const std::vector<std::string>& report_log() const { return reports_; }
  const ZeusCncConfig& config() const { return cfg_; }

private:
  ZeusCncConfig cfg_;
  std::vector<std::string> reports_;
};

/// Placeholder served for the dropper download. Printable; not an executable.
std::string_view zeus_download_placeholder();

// ---------------------------------------------------------------- ZitMo

struct ZitmoClientConfig {
  Ipv4 device_ip{0x0A000264}; // 10.0.2.100
  std::string phone = "+15555215554";
  std::string devid = "358240051111110";
  std::string key16 = std::string(codecs::kZitmoDefaultKey);
  std::vector<std::string> cnc_urls{"http://172.17.0.1:8000/ss/app.php"};
  Tick ping_interval_ticks = 15; // one tick per minute
  std::string account;
  std::string settings_path = "/data/data/com.guard.smart/cfg.txt";
  std::uint16_t first_src_port = 49152;

  void validate() const;
};

struct ZitmoScriptItem {
  enum class Kind { boot, account_entry, incoming_sms };
  Tick at = 0;
  Kind kind = Kind::boot;
  std::string text;
  std::string number;
};

/// Device-side settings file. Backed by memory, or by files under `root` (the
/// device path is re-rooted there).
class ZitmoSettings {
public:
  ZitmoSettings() = default;
  explicit ZitmoSettings(std::filesystem::path root) : root_(std::move(root)) {}

  void write(const std::string& device_path, const std::string& content);
  std::optional<std::string> read(const std::string& device_path) const;
  int writes() const { return writes_; }

private:
  std::optional<std::filesystem::path> root_;
  std::map<std::string, std::string> memory_;
  int writes_ = 0;
};

struct ZitmoExchange {
  alerts::TrafficEvent request;
  codecs::ZitmoMessage message;
  HttpResponse response;
};

/// Drives the client state machine over [0, ticks): script items fire at their
/// tick; after boot a timer ping goes out every ping_interval_ticks.
std::vector<ZitmoExchange> zitmo_client_run(const ZitmoClientConfig& cfg, const std::vector<ZitmoScriptItem>& script,
                                            Tick ticks, const Transport& transport, ZitmoSettings& settings);

class ZitmoCnc {
public:
  explicit ZitmoCnc(std::string key16 = std::string(codecs::kZitmoDefaultKey)) : key_(std::move(key16)) {}

  /// The next timer message whose dd differs from the list's digest receives it.
  void queue_url_update(std::vector<std::string> urls) { pending_ = std::move(urls); }
  HttpResponse serve(const HttpRequest& request);
  const std::vector<codecs::ZitmoMessage>& received() const { return received_; }

private:
  std::string key_;
  std::optional<std::vector<std::string>> pending_;
  std::vector<codecs::ZitmoMessage> received_;
};

// ---------------------------------------------------------------- Emotet

enum class EmotetProfile { checkin, module_fetch, exfil };

struct EmotetTrafficConfig {
  Ipv4 bot_ip;
  Ipv4 cnc_ip;
  std::uint16_t cnc_port = 8080;
  std::string uri = "/";
  Tick checkin_interval_ticks = 10;
  EmotetProfile payload_profile = EmotetProfile::checkin;
  std::string bot_id = "WIN7-0017";
  Tick start_tick = 0;
  std::uint16_t first_src_port = 49152;

  void validate() const;
};

struct EmotetRun {
  codecs::SessionKey session_key{};
  std::vector<alerts::TrafficEvent> events;
  std::vector<std::string> payloads; // plaintext per event
};

/// Session key and cookie name come from `seed`; timing depends only on the config.
EmotetRun emotet_traffic(const EmotetTrafficConfig& cfg, const codecs::RsaKey& rsa_public, Tick ticks,
                         std::uint64_t seed);

class EmotetCnc {
public:
  explicit EmotetCnc(codecs::RsaKey rsa_private) : key_(std::move(rsa_private)) {}

  /// Opens the cookie; replies with an ack encrypted under the session key.
  HttpResponse serve(const HttpRequest& request);
  const std::vector<std::string>& received() const { return received_; }

private:
  codecs::RsaKey key_;
  std::vector<std::string> received_;
};

// ---------------------------------------------------------------- live mode

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};

/// Parses `host:port`; refuses non-loopback hosts unless `allow_non_loopback`.
Endpoint parse_bind(std::string_view text, bool allow_non_loopback);

/// Blocking HTTP server on `endpoint` forwarding every GET/POST to `handler`
/// (serialised). Returns when `stop()` is called on the returned handle.
class LiveServer {
public:
  LiveServer(Endpoint endpoint, Transport handler);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Transport that performs real HTTP requests against `endpoint`.
Transport http_transport(Endpoint endpoint);

} // namespace iirs::emulators
