#pragma once

// Synthetic IDS: signature matching over simulated traffic, and the cascading
// mapping of alerts onto exploit (AND) nodes of the attack graph.

#include "iirs/bag.hpp"
#include "iirs/common.hpp"
#include "iirs/netmodel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iirs::alerts {

enum class Transport { tcp, udp };
enum class App { http, dns, raw };

std::string_view to_string(Transport t);
std::string_view to_string(App a);

struct TrafficEvent {
  Tick ts = 0;
  std::uint64_t seq = 0; // tie-break within a tick
  Ipv4 src_ip;
  Ipv4 dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Transport proto = Transport::tcp;
  App app = App::raw;
  std::optional<std::string> uri;
  std::optional<std::string> http_method; // absent on responses
  std::vector<std::pair<std::string, std::string>> headers;
  std::string payload; // raw bytes

  std::optional<std::string> header(std::string_view name) const;
  /// Throws iirs::Error if ports are 0 or `uri` presence disagrees with `app`.
  void validate() const;
};

/// Total order used by the event queue: (ts, seq).
bool event_before(const TrafficEvent& a, const TrafficEvent& b);

enum class SignatureKind { alert, informative };

/// One field test. All conditions of a signature must hold.
struct Condition {
  enum class Field { src_ip, dst_ip, src_port, dst_port, proto, app, uri, http_method, header, payload };
  enum class Op { exact, prefix, substring, glob };

  Field field = Field::uri;
  std::string header_name; // Field::header only
  Op op = Op::exact;
  std::string value;

  bool matches(const TrafficEvent& ev) const;
};

/// `*` matches any run, `?` one character; everything else is literal.
bool glob_match(std::string_view pattern, std::string_view text);

struct Signature {
  std::uint32_t sid = 0;
  std::string msg;
  SignatureKind kind = SignatureKind::alert;
  std::vector<Condition> match;

  bool matches(const TrafficEvent& ev) const;
};

/// Immutable, sorted by sid.
class SignatureSet {
public:
  SignatureSet() = default;
  explicit SignatureSet(std::vector<Signature> signatures); // throws on duplicate sid

  const std::vector<Signature>& signatures() const { return signatures_; }
  std::size_t size() const { return signatures_.size(); }
  std::size_t count(SignatureKind kind) const;
  const Signature* find(std::uint32_t sid) const;

private:
  std::vector<Signature> signatures_;
};

SignatureSet load_signatures(std::string_view json_text);
SignatureSet load_signatures_file(const std::string& path);

struct Alert {
  Tick ts = 0;
  std::uint32_t sid = 0;
  std::string msg;
  SignatureKind kind = SignatureKind::alert;
  Ipv4 src_ip;
  Ipv4 dst_ip;
  std::uint16_t dst_port = 0;
  Transport proto = Transport::tcp;
  std::optional<std::string> hostname;

  friend bool operator==(const Alert&, const Alert&) = default;
};

/// Signature alerts by ascending sid, then informative alerts by ascending sid.
std::vector<Alert> match_traffic(const SignatureSet& set, const TrafficEvent& ev);

enum class MatchLevel { L1, L2, L3, none };
std::string_view to_string(MatchLevel level);

struct MatchResult {
  MatchLevel level = MatchLevel::none;
  std::vector<int> and_node_ids;
};

/// Where an exploit lands on the network: the host it targets and, when the
/// graph models it, the protocol and port used to reach it.
struct ExploitSite {
  int and_id = 0;
  std::string host;
  std::string proto; // empty when unknown
  std::string port; // concrete number, "anyPort", or empty when unknown
};

std::vector<ExploitSite> exploit_sites(const bag::Bag& bag);

/// Records which levels map_alert consulted, in order.
struct MatchTrace {
  std::vector<MatchLevel> consulted;
};

/// Cascade: L1 = destination host, protocol and concrete port all agree;
/// L2 = host and protocol agree, the graph models a different concrete port;
/// L3 = only the address/hostname of either endpoint resolves to the exploit's
/// host. The first non-empty level wins.
MatchResult map_alert(const bag::Bag& bag, const netmodel::HostMap& hostmap, const Alert& alert,
                      MatchTrace* trace = nullptr);

struct LikelihoodRatios {
  double l1 = 9.0;
  double l2 = 4.0;
  double l3 = 2.0;

  double for_level(MatchLevel level) const;
};

// Line-delimited alert log (subset of the EVE alert schema).
std::string to_eve_line(const Alert& alert);
/// Accepts both this project's field names and native EVE records
/// (`dest_ip`, `dest_port`, `alert.signature_id`, ...).
Alert parse_eve_line(std::string_view line);
std::vector<Alert> read_eve_file(const std::string& path);

// Line-delimited traffic events, as written by the scripted emulators.
std::string to_event_line(const TrafficEvent& ev);
TrafficEvent parse_event_line(std::string_view line);
std::vector<TrafficEvent> read_event_file(const std::string& path);

} // namespace iirs::alerts
