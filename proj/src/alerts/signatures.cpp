#include "iirs/alerts.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace iirs::alerts {

using nlohmann::json;

std::string_view to_string(Transport t) { return t == Transport::tcp ? "tcp" : "udp"; }

std::string_view to_string(App a) {
  switch (a) {
  case App::http: return "http";
  case App::dns: return "dns";
  case App::raw: return "raw";
  }
  return "?";
}

std::optional<std::string> TrafficEvent::header(std::string_view name) const {
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

void TrafficEvent::validate() const {
  if (src_port == 0 || dst_port == 0)
    throw Error("traffic event ports must be in 1..65535");
  if (uri.has_value() != (app == App::http))
    throw Error("traffic event carries a uri iff it is http");
}

bool event_before(const TrafficEvent& a, const TrafficEvent& b) {
  return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq;
}

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0;
  std::size_t t = 0;
  std::size_t star = std::string_view::npos;
  std::size_t mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*')
    ++p;
  return p == pattern.size();
}

bool Condition::matches(const TrafficEvent& ev) const {
  std::optional<std::string> subject;
  switch (field) {
  case Field::src_ip: subject = ev.src_ip.str(); break;
  case Field::dst_ip: subject = ev.dst_ip.str(); break;
  case Field::src_port: subject = std::to_string(ev.src_port); break;
  case Field::dst_port: subject = std::to_string(ev.dst_port); break;
  case Field::proto: subject = std::string(to_string(ev.proto)); break;
  case Field::app: subject = std::string(to_string(ev.app)); break;
  case Field::uri: subject = ev.uri; break;
  case Field::http_method: subject = ev.http_method; break;
  case Field::header: subject = ev.header(header_name); break;
  case Field::payload: subject = ev.payload; break;
  }
  if (!subject)
    return false;
  switch (op) {
  case Op::exact: return *subject == value;
  case Op::prefix: return subject->starts_with(value);
  case Op::substring: return subject->find(value) != std::string::npos;
  case Op::glob: return glob_match(value, *subject);
  }
  return false;
}

bool Signature::matches(const TrafficEvent& ev) const {
  return std::all_of(match.begin(), match.end(), [&](const Condition& c) { return c.matches(ev); });
}

SignatureSet::SignatureSet(std::vector<Signature> signatures) : signatures_(std::move(signatures)) {
  std::sort(signatures_.begin(), signatures_.end(),
            [](const Signature& a, const Signature& b) { return a.sid < b.sid; });
  for (std::size_t i = 1; i < signatures_.size(); ++i)
    if (signatures_[i].sid == signatures_[i - 1].sid)
      throw Error("duplicate sid " + std::to_string(signatures_[i].sid));
}

std::size_t SignatureSet::count(SignatureKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(signatures_.begin(), signatures_.end(), [&](const Signature& s) { return s.kind == kind; }));
}

const Signature* SignatureSet::find(std::uint32_t sid) const {
  auto it = std::lower_bound(signatures_.begin(), signatures_.end(), sid,
                             [](const Signature& s, std::uint32_t v) { return s.sid < v; });
  return it != signatures_.end() && it->sid == sid ? &*it : nullptr;
}

namespace {

Condition::Field parse_field(const std::string& name, std::string& header_name, const std::string& path) {
  using F = Condition::Field;
  static const std::map<std::string, F> fields{
      {"src_ip", F::src_ip}, {"dst_ip", F::dst_ip}, {"src_port", F::src_port}, {"dst_port", F::dst_port},
      {"proto", F::proto},   {"app", F::app},       {"uri", F::uri},           {"http_method", F::http_method},
      {"payload", F::payload}};
  if (name.starts_with("header:") && name.size() > 7) {
    header_name = name.substr(7);
    return F::header;
  }
  auto it = fields.find(name);
  if (it == fields.end())
    throw Error(path + ": unknown match field '" + name + "'");
  return it->second;
}

Condition::Op parse_op(const std::string& name, const std::string& path) {
  using O = Condition::Op;
  if (name == "exact")
    return O::exact;
  if (name == "prefix")
    return O::prefix;
  if (name == "substring")
    return O::substring;
  if (name == "glob")
    return O::glob;
  throw Error(path + ": unknown match operator '" + name + "'");
}

Signature parse_signature(const json& j, const std::string& path) {
  if (!j.is_object())
    throw Error(path + ": expected an object");
  Signature sig;
  if (!j.contains("sid") || !j["sid"].is_number_unsigned() || j["sid"].get<std::uint64_t>() == 0 ||
      j["sid"].get<std::uint64_t>() > 0xFFFFFFFFull)
    throw Error(path + ".sid: expected a positive integer");
  sig.sid = j["sid"].get<std::uint32_t>();
  if (!j.contains("msg") || !j["msg"].is_string())
    throw Error(path + ".msg: expected a string");
  sig.msg = j["msg"].get<std::string>();
  std::string kind = j.value("kind", std::string("alert"));
  if (kind == "alert")
    sig.kind = SignatureKind::alert;
  else if (kind == "informative")
    sig.kind = SignatureKind::informative;
  else
    throw Error(path + ".kind: expected alert or informative");
  if (!j.contains("match") || !j["match"].is_object() || j["match"].empty())
    throw Error(path + ".match: expected a non-empty object");
  for (const auto& [field, ops] : j["match"].items()) {
    std::string fpath = path + ".match." + field;
    if (!ops.is_object() || ops.empty())
      throw Error(fpath + ": expected an object of operator -> value");
    for (const auto& [op, value] : ops.items()) {
      Condition c;
      c.field = parse_field(field, c.header_name, fpath);
      c.op = parse_op(op, fpath);
      if (value.is_string())
        c.value = value.get<std::string>();
      else if (value.is_number_integer())
        c.value = std::to_string(value.get<long long>());
      else
        throw Error(fpath + "." + op + ": expected a string or integer");
      sig.match.push_back(std::move(c));
    }
  }
  return sig;
}

} // namespace

SignatureSet load_signatures(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed signature file: ") + e.what());
  }
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("signatures"))
      throw Error("signature file: missing 'signatures'");
    list = &doc["signatures"];
  }
  if (!list->is_array())
    throw Error("signatures: expected an array");
  std::vector<Signature> sigs;
  for (std::size_t i = 0; i < list->size(); ++i)
    sigs.push_back(parse_signature((*list)[i], "signatures[" + std::to_string(i) + "]"));
  return SignatureSet(std::move(sigs));
}

SignatureSet load_signatures_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open signature file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_signatures(ss.str());
}

std::vector<Alert> match_traffic(const SignatureSet& set, const TrafficEvent& ev) {
  std::vector<Alert> out;
  auto emit = [&](SignatureKind kind) {
    for (const auto& sig : set.signatures()) {
      if (sig.kind != kind || !sig.matches(ev))
        continue;
      Alert a;
      a.ts = ev.ts;
      a.sid = sig.sid;
      a.msg = sig.msg;
      a.kind = sig.kind;
      a.src_ip = ev.src_ip;
      a.dst_ip = ev.dst_ip;
      a.dst_port = ev.dst_port;
      a.proto = ev.proto;
      out.push_back(std::move(a));
    }
  };
  emit(SignatureKind::alert);
  emit(SignatureKind::informative);
  return out;
}

} // namespace iirs::alerts
