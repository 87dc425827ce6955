#pragma once

#include "iirs/common.hpp"
#include "iirs/datalog.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iirs::netmodel {

enum class Proto { tcp, udp, any };
enum class VulnRange { remote, local };
enum class Consequence { privEscalation, privLoss, dos };

std::string_view to_string(Proto p);
std::string_view to_string(VulnRange r);
std::string_view to_string(Consequence c);

/// Port number; std::nullopt is the wildcard, emitted as `anyPort`.
using Port = std::optional<std::uint16_t>;

struct HostSpec {
  std::string name;
  std::vector<Ipv4> interfaces;
  std::string zone;
};

struct ReachabilityEntry {
  std::string src;
  std::string dst;
  Proto proto = Proto::tcp;
  Port port;
};

struct ServiceSpec {
  std::string host;
  std::string program;
  Proto proto = Proto::tcp;
  Port port;
  std::string user;
};

struct VulnSpec {
  std::string host;
  std::string vuln_id;
  std::string program;
  VulnRange range = VulnRange::remote;
  Consequence consequence = Consequence::privEscalation;
  double success_prob = 1.0;
};

struct NetworkModel {
  std::vector<HostSpec> hosts;
  std::vector<ReachabilityEntry> hacl;
  std::vector<ServiceSpec> services;
  std::vector<VulnSpec> vulns;
  std::string attacker_zone;
  std::vector<std::string> goals;

  std::vector<std::string> zones() const;
  const HostSpec* host(std::string_view name) const;
  /// Goal atoms parsed from `goals`.
  std::vector<datalog::Atom> goal_atoms() const;
};

/// Thrown by load_topology. `path()` is the JSON location, e.g. `hosts[1].interfaces[0]`.
class TopologyError : public Error {
public:
  TopologyError(std::string path, std::string message);
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

struct LoadOptions {
  /// Also load `inert_hosts`: hosts present on the network but with no
  /// reachability, services or vulnerabilities of their own.
  bool include_inert_hosts = false;
};

NetworkModel load_topology(std::string_view json_text, const LoadOptions& options = {});
NetworkModel load_topology_file(const std::string& path, const LoadOptions& options = {});

/// Re-checks every model invariant; throws TopologyError on the first violation.
void validate(const NetworkModel& model);

/// Ground input facts, sorted by canonical text.
struct TupleSet {
  std::vector<datalog::Atom> facts;

  std::string text() const; // one `atom.` per line
  datalog::Program program() const;
};

TupleSet to_datalog(const NetworkModel& model);

/// Static IP <-> host resolution used in place of DNS.
class HostMap {
public:
  HostMap() = default;
  explicit HostMap(const NetworkModel& model);

  std::optional<std::string> host_of(Ipv4 ip) const;
  std::optional<std::string> zone_of(std::string_view host) const;
  bool is_host(std::string_view name) const { return zones_.contains(std::string(name)); }
  /// Hosts outside the attacker zone.
  bool is_internal(Ipv4 ip) const;
  const std::string& attacker_zone() const { return attacker_zone_; }

private:
  std::map<Ipv4, std::string> by_ip_;
  std::map<std::string, std::string> zones_;
  std::string attacker_zone_;
};

} // namespace iirs::netmodel
