#include "iirs/netmodel.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace iirs::netmodel {

using nlohmann::json;

std::string_view to_string(Proto p) {
  switch (p) {
  case Proto::tcp: return "tcp";
  case Proto::udp: return "udp";
  case Proto::any: return "any";
  }
  return "?";
}

std::string_view to_string(VulnRange r) { return r == VulnRange::remote ? "remote" : "local"; }

std::string_view to_string(Consequence c) {
  switch (c) {
  case Consequence::privEscalation: return "privEscalation";
  case Consequence::privLoss: return "privLoss";
  case Consequence::dos: return "dos";
  }
  return "?";
}

TopologyError::TopologyError(std::string path, std::string message)
    : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

namespace {

class Reader {
public:
  explicit Reader(const LoadOptions& options) : options_(options) {}

  NetworkModel read(const json& doc) {
    if (!doc.is_object())
      throw TopologyError("", "topology must be a JSON object");
    static const std::set<std::string> known{"hosts", "hacl", "services", "vulns", "attacker",
                                             "goals", "inert_hosts", "name", "description"};
    for (const auto& [key, value] : doc.items())
      if (!known.contains(key))
        throw TopologyError(key, "unknown key");
    NetworkModel m;
    const json& hosts = require(doc, "hosts", "");
    if (!hosts.is_array())
      throw TopologyError("hosts", "expected an array");
    if (hosts.empty())
      throw TopologyError("hosts", "no hosts");
    for (std::size_t i = 0; i < hosts.size(); ++i)
      m.hosts.push_back(host(hosts[i], "hosts[" + std::to_string(i) + "]"));
    if (options_.include_inert_hosts && doc.contains("inert_hosts")) {
      const json& inert = doc["inert_hosts"];
      if (!inert.is_array())
        throw TopologyError("inert_hosts", "expected an array");
      for (std::size_t i = 0; i < inert.size(); ++i)
        m.hosts.push_back(host(inert[i], "inert_hosts[" + std::to_string(i) + "]"));
    }
    for_each(doc, "hacl", [&](const json& j, const std::string& p) { m.hacl.push_back(hacl(j, p)); });
    for_each(doc, "services",
             [&](const json& j, const std::string& p) { m.services.push_back(service(j, p)); });
    for_each(doc, "vulns", [&](const json& j, const std::string& p) { m.vulns.push_back(vuln(j, p)); });
    m.attacker_zone = str(require(doc, "attacker", ""), "attacker");
    if (doc.contains("goals")) {
      const json& goals = doc["goals"];
      if (!goals.is_array())
        throw TopologyError("goals", "expected an array");
      for (std::size_t i = 0; i < goals.size(); ++i)
        m.goals.push_back(str(goals[i], "goals[" + std::to_string(i) + "]"));
    }
    return m;
  }

private:
  template <typename F>
  void for_each(const json& doc, const char* key, F&& f) {
    if (!doc.contains(key))
      return;
    const json& arr = doc[key];
    if (!arr.is_array())
      throw TopologyError(key, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      f(arr[i], std::string(key) + "[" + std::to_string(i) + "]");
  }

  static const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object())
      throw TopologyError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end())
      throw TopologyError(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
  }

  static std::string str(const json& j, const std::string& path) {
    if (!j.is_string())
      throw TopologyError(path, "expected a string");
    std::string s = j.get<std::string>();
    if (s.empty())
      throw TopologyError(path, "must not be empty");
    return s;
  }

  static void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object())
      throw TopologyError(path, "expected an object");
    for (const auto& [key, value] : j.items())
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw TopologyError(path + "." + key, "unknown field");
  }

  static Proto proto(const json& j, const std::string& path) {
    std::string s = str(j, path);
    if (s == "tcp")
      return Proto::tcp;
    if (s == "udp")
      return Proto::udp;
    if (s == "any")
      return Proto::any;
    throw TopologyError(path, "expected one of tcp, udp, any");
  }

  static Port port(const json& j, const std::string& path) {
    if (j.is_string()) {
      std::string s = j.get<std::string>();
      if (s == "*" || s == datalog::kAnyPort)
        return std::nullopt;
      throw TopologyError(path, "expected a port number or \"*\"");
    }
    if (!j.is_number_integer())
      throw TopologyError(path, "expected a port number or \"*\"");
    auto v = j.get<long long>();
    if (v < 1 || v > 65535)
      throw TopologyError(path, "port must be in 1..65535");
    return static_cast<std::uint16_t>(v);
  }

  static HostSpec host(const json& j, const std::string& path) {
    only_keys(j, path, {"name", "interfaces", "zone"});
    HostSpec h;
    h.name = str(require(j, "name", path), path + ".name");
    h.zone = str(require(j, "zone", path), path + ".zone");
    const json& ifs = require(j, "interfaces", path);
    if (!ifs.is_array() || ifs.empty())
      throw TopologyError(path + ".interfaces", "at least one interface required");
    for (std::size_t i = 0; i < ifs.size(); ++i) {
      std::string p = path + ".interfaces[" + std::to_string(i) + "]";
      std::string text = str(ifs[i], p);
      auto ip = Ipv4::parse(text);
      if (!ip)
        throw TopologyError(p, "'" + text + "' is not a dotted-quad IPv4 address");
      h.interfaces.push_back(*ip);
    }
    return h;
  }

  static ReachabilityEntry hacl(const json& j, const std::string& path) {
    only_keys(j, path, {"src", "dst", "proto", "port"});
    ReachabilityEntry e;
    e.src = str(require(j, "src", path), path + ".src");
    e.dst = str(require(j, "dst", path), path + ".dst");
    e.proto = proto(require(j, "proto", path), path + ".proto");
    e.port = port(require(j, "port", path), path + ".port");
    return e;
  }

  static ServiceSpec service(const json& j, const std::string& path) {
    only_keys(j, path, {"host", "program", "proto", "port", "user"});
    ServiceSpec s;
    s.host = str(require(j, "host", path), path + ".host");
    s.program = str(require(j, "program", path), path + ".program");
    s.proto = proto(require(j, "proto", path), path + ".proto");
    s.port = port(require(j, "port", path), path + ".port");
    s.user = str(require(j, "user", path), path + ".user");
    return s;
  }

  static VulnSpec vuln(const json& j, const std::string& path) {
    only_keys(j, path, {"host", "vuln_id", "program", "range", "consequence", "success_prob"});
    VulnSpec v;
    v.host = str(require(j, "host", path), path + ".host");
    v.vuln_id = str(require(j, "vuln_id", path), path + ".vuln_id");
    v.program = str(require(j, "program", path), path + ".program");
    std::string range = str(require(j, "range", path), path + ".range");
    if (range == "remote")
      v.range = VulnRange::remote;
    else if (range == "local")
      v.range = VulnRange::local;
    else
      throw TopologyError(path + ".range", "expected remote or local");
    std::string cons = str(require(j, "consequence", path), path + ".consequence");
    if (cons == "privEscalation")
      v.consequence = Consequence::privEscalation;
    else if (cons == "privLoss")
      v.consequence = Consequence::privLoss;
    else if (cons == "dos")
      v.consequence = Consequence::dos;
    else
      throw TopologyError(path + ".consequence", "expected privEscalation, privLoss or dos");
    const json& p = require(j, "success_prob", path);
    if (!p.is_number())
      throw TopologyError(path + ".success_prob", "expected a number");
    v.success_prob = p.get<double>();
    return v;
  }

  const LoadOptions& options_;
};

datalog::Term port_term(const Port& p) {
  return datalog::Term::constant(p ? std::to_string(*p) : std::string(datalog::kAnyPort));
}

datalog::Atom make_atom(std::string pred, std::vector<std::string> args) {
  datalog::Atom a;
  a.predicate = std::move(pred);
  for (auto& s : args)
    a.args.push_back(datalog::Term::constant(std::move(s)));
  return a;
}

} // namespace

std::vector<std::string> NetworkModel::zones() const {
  std::set<std::string> z;
  for (const auto& h : hosts)
    z.insert(h.zone);
  return {z.begin(), z.end()};
}

const HostSpec* NetworkModel::host(std::string_view name) const {
  for (const auto& h : hosts)
    if (h.name == name)
      return &h;
  return nullptr;
}

std::vector<datalog::Atom> NetworkModel::goal_atoms() const {
  std::vector<datalog::Atom> out;
  for (const auto& g : goals)
    out.push_back(datalog::parse_atom(g));
  return out;
}

void validate(const NetworkModel& m) {
  if (m.hosts.empty())
    throw TopologyError("hosts", "no hosts");
  std::set<std::string> names;
  std::set<std::string> zones;
  std::set<Ipv4> addresses;
  for (std::size_t i = 0; i < m.hosts.size(); ++i) {
    const auto& h = m.hosts[i];
    std::string path = "hosts[" + std::to_string(i) + "]";
    if (h.interfaces.empty())
      throw TopologyError(path + ".interfaces", "at least one interface required");
    if (!names.insert(h.name).second)
      throw TopologyError(path + ".name", "duplicate host '" + h.name + "'");
    for (Ipv4 ip : h.interfaces)
      if (!addresses.insert(ip).second)
        throw TopologyError(path + ".interfaces", "address " + ip.str() + " assigned twice");
    zones.insert(h.zone);
  }
  for (const auto& z : zones)
    if (names.contains(z))
      throw TopologyError("hosts", "'" + z + "' is both a host and a zone");
  auto resolve = [&](const std::string& name, const std::string& path) {
    if (!names.contains(name) && !zones.contains(name))
      throw TopologyError(path, "dangling reference to undeclared host or zone '" + name + "'");
  };
  for (std::size_t i = 0; i < m.hacl.size(); ++i) {
    std::string path = "hacl[" + std::to_string(i) + "]";
    resolve(m.hacl[i].src, path + ".src");
    resolve(m.hacl[i].dst, path + ".dst");
  }
  std::set<std::tuple<std::string, std::string, Proto, Port>> services;
  for (std::size_t i = 0; i < m.services.size(); ++i) {
    const auto& s = m.services[i];
    std::string path = "services[" + std::to_string(i) + "]";
    resolve(s.host, path + ".host");
    if (!services.emplace(s.host, s.program, s.proto, s.port).second)
      throw TopologyError(path, "duplicate service (" + s.host + ", " + s.program + ", " +
                                    std::string(to_string(s.proto)) + ", " +
                                    (s.port ? std::to_string(*s.port) : "*") + ")");
  }
  for (std::size_t i = 0; i < m.vulns.size(); ++i) {
    const auto& v = m.vulns[i];
    std::string path = "vulns[" + std::to_string(i) + "]";
    resolve(v.host, path + ".host");
    if (!(v.success_prob >= 0.0 && v.success_prob <= 1.0))
      throw TopologyError(path + ".success_prob", "must be in [0,1]");
  }
  if (!names.contains(m.attacker_zone) && !zones.contains(m.attacker_zone))
    throw TopologyError("attacker", "attacker zone '" + m.attacker_zone + "' is not declared");
  for (std::size_t i = 0; i < m.goals.size(); ++i) {
    std::string path = "goals[" + std::to_string(i) + "]";
    datalog::Atom atom;
    try {
      atom = datalog::parse_atom(m.goals[i]);
    } catch (const datalog::ParseError& e) {
      throw TopologyError(path, std::string("not a ground fact: ") + e.what());
    }
    if (atom.args.empty())
      throw TopologyError(path, "goal must name a host");
    resolve(atom.args.front().text, path);
  }
}

NetworkModel load_topology(std::string_view json_text, const LoadOptions& options) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw TopologyError("", std::string("malformed JSON: ") + e.what());
  }
  NetworkModel m = Reader(options).read(doc);
  validate(m);
  return m;
}

NetworkModel load_topology_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open topology file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_topology(ss.str(), options);
}

std::string TupleSet::text() const {
  std::string out;
  for (const auto& f : facts)
    out += f.str() + ".\n";
  return out;
}

datalog::Program TupleSet::program() const {
  datalog::Program p;
  p.facts.insert(facts.begin(), facts.end());
  return p;
}

TupleSet to_datalog(const NetworkModel& m) {
  TupleSet out;
  for (const auto& e : m.hacl) {
    auto a = make_atom("hacl", {e.src, e.dst, std::string(to_string(e.proto))});
    a.args.push_back(port_term(e.port));
    out.facts.push_back(std::move(a));
  }
  for (const auto& s : m.services) {
    auto a = make_atom("networkServiceInfo", {s.host, s.program, std::string(to_string(s.proto))});
    a.args.push_back(port_term(s.port));
    a.args.push_back(datalog::Term::constant(s.user));
    out.facts.push_back(std::move(a));
  }
  for (const auto& v : m.vulns)
    out.facts.push_back(make_atom("vulExists", {v.host, v.vuln_id, v.program, std::string(to_string(v.range)),
                                                std::string(to_string(v.consequence))}));
  out.facts.push_back(make_atom("attackerLocated", {m.attacker_zone}));
  for (const auto& g : m.goals)
    out.facts.push_back(make_atom("attackGoal", {datalog::parse_atom(g).str()}));
  std::sort(out.facts.begin(), out.facts.end(),
            [](const datalog::Atom& a, const datalog::Atom& b) { return a.str() < b.str(); });
  return out;
}

HostMap::HostMap(const NetworkModel& model) : attacker_zone_(model.attacker_zone) {
  for (const auto& h : model.hosts) {
    zones_[h.name] = h.zone;
    for (Ipv4 ip : h.interfaces)
      by_ip_[ip] = h.name;
  }
}

std::optional<std::string> HostMap::host_of(Ipv4 ip) const {
  if (auto it = by_ip_.find(ip); it != by_ip_.end())
    return it->second;
  return std::nullopt;
}

std::optional<std::string> HostMap::zone_of(std::string_view host) const {
  if (auto it = zones_.find(std::string(host)); it != zones_.end())
    return it->second;
  return std::nullopt;
}

bool HostMap::is_internal(Ipv4 ip) const {
  auto host = host_of(ip);
  if (!host)
    return false;
  return *host != attacker_zone_ && zones_.at(*host) != attacker_zone_;
}

} // namespace iirs::netmodel
