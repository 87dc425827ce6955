#include "iirs/harness.hpp"

#include <fstream>
#include <set>

namespace iirs::harness {

using nlohmann::ordered_json;

namespace {

class Reader {
public:
  Reader(const ordered_json& obj, std::string path, std::initializer_list<const char*> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object())
      throw Error(where() + "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
      if (!ok.contains(k))
        throw Error(where(k) + "unknown field");
  }

  bool has(const char* key) const { return obj_.contains(key); }
  const ordered_json& raw(const char* key) const { return obj_.at(key); }
  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  std::string str(const char* key) const {
    const auto& v = need(key);
    if (!v.is_string())
      throw Error(where(key) + "expected a string");
    return v.get<std::string>();
  }
  std::string str(const char* key, std::string fallback) const { return has(key) ? str(key) : fallback; }

  long long integer(const char* key, long long lo, long long hi) const {
    const auto& v = need(key);
    if (!v.is_number_integer() || v.get<long long>() < lo || v.get<long long>() > hi)
      throw Error(where(key) + "expected an integer in " + std::to_string(lo) + ".." + std::to_string(hi));
    return v.get<long long>();
  }
  template <typename T>
  void integer_into(const char* key, T& out, long long lo, long long hi) const {
    if (has(key))
      out = static_cast<T>(integer(key, lo, hi));
  }

  double number(const char* key) const {
    const auto& v = need(key);
    if (!v.is_number())
      throw Error(where(key) + "expected a number");
    return v.get<double>();
  }
  void number_into(const char* key, double& out) const {
    if (has(key))
      out = number(key);
  }

  Ipv4 ip(const char* key) const {
    std::string s = str(key);
    auto a = Ipv4::parse(s);
    if (!a)
      throw Error(where(key) + "'" + s + "' is not a dotted-quad IPv4 address");
    return *a;
  }

  std::vector<std::string> strings(const char* key) const {
    const auto& v = need(key);
    if (!v.is_array())
      throw Error(where(key) + "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (!s.is_string())
        throw Error(where(key) + "expected an array of strings");
      out.push_back(s.get<std::string>());
    }
    return out;
  }

  std::string where(const std::string& key = "") const {
    std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return p.empty() ? "" : p + ": ";
  }

private:
  const ordered_json& need(const char* key) const {
    if (!obj_.contains(key))
      throw Error(where(key) + "missing required field");
    return obj_.at(key);
  }

  const ordered_json& obj_;
  std::string path_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

constexpr long long kMaxTick = 1'000'000'000;

emulators::ZeusBotConfig zeus_config(const Reader& r, const Scenario& s) {
  emulators::ZeusBotConfig c;
  if (!s.infected_host || !s.cnc)
    throw Error("zeus: scenario needs infected_host and cnc");
  c.bot_ip = *s.infected_host;
  c.cnc_ip = *s.cnc;
  c.rc4_key = r.str("rc4_key", c.rc4_key);
  c.cfg_uri = r.str("cfg_uri", c.cfg_uri);
  c.gate_uri = r.str("gate_uri", c.gate_uri);
  c.download_uri = r.str("download_uri", c.download_uri);
  c.bot_id = r.str("bot_id", c.bot_id);
  r.integer_into("cnc_port", c.cnc_port, 1, 65535);
  r.integer_into("ping_interval_ticks", c.ping_interval_ticks, 1, kMaxTick);
  r.integer_into("start_tick", c.start_tick, 0, kMaxTick);
  r.integer_into("first_src_port", c.first_src_port, 1, 65535);
  c.validate();
  return c;
}

ZitmoSetup zitmo_setup(const Reader& r) {
  ZitmoSetup z;
  auto& c = z.client;
  if (r.has("device_ip"))
    c.device_ip = r.ip("device_ip");
  c.phone = r.str("phone", c.phone);
  c.devid = r.str("devid", c.devid);
  c.key16 = r.str("key", c.key16);
  if (r.has("cnc_urls"))
    c.cnc_urls = r.strings("cnc_urls");
  r.integer_into("ping_interval_ticks", c.ping_interval_ticks, 1, kMaxTick);
  c.account = r.str("account", c.account);
  c.settings_path = r.str("settings_path", c.settings_path);
  r.integer_into("first_src_port", c.first_src_port, 1, 65535);
  if (r.has("url_update"))
    z.url_update = r.strings("url_update");
  if (r.has("script")) {
    const auto& items = r.raw("script");
    if (!items.is_array())
      throw Error(r.where("script") + "expected an array");
    for (std::size_t i = 0; i < items.size(); ++i) {
      Reader ir(items[i], r.sub("script") + "[" + std::to_string(i) + "]", {"at", "kind", "text", "number"});
      emulators::ZitmoScriptItem item;
      item.at = ir.integer("at", 0, kMaxTick);
      std::string kind = ir.str("kind");
      using K = emulators::ZitmoScriptItem::Kind;
      if (kind == "boot")
        item.kind = K::boot;
      else if (kind == "account_entry")
        item.kind = K::account_entry;
      else if (kind == "incoming_sms")
        item.kind = K::incoming_sms;
      else
        throw Error(ir.where("kind") + "expected boot, account_entry or incoming_sms");
      if (item.kind != K::boot)
        item.text = ir.str("text");
      if (item.kind == K::incoming_sms)
        item.number = ir.str("number");
      z.script.push_back(std::move(item));
    }
  }
  c.validate();
  return z;
}

EmotetSetup emotet_setup(const Reader& r, const Scenario& s, const std::filesystem::path& base) {
  EmotetSetup e;
  auto& c = e.traffic;
  if (r.has("bot_ip"))
    c.bot_ip = r.ip("bot_ip");
  else if (s.infected_host)
    c.bot_ip = *s.infected_host;
  else
    throw Error(r.where("bot_ip") + "missing (and no infected_host)");
  c.cnc_ip = r.ip("cnc_ip");
  r.integer_into("cnc_port", c.cnc_port, 1, 65535);
  c.uri = r.str("uri", c.uri);
  r.integer_into("checkin_interval_ticks", c.checkin_interval_ticks, 1, kMaxTick);
  std::string profile = r.str("payload_profile", "checkin");
  if (profile == "checkin")
    c.payload_profile = emulators::EmotetProfile::checkin;
  else if (profile == "module_fetch")
    c.payload_profile = emulators::EmotetProfile::module_fetch;
  else if (profile == "exfil")
    c.payload_profile = emulators::EmotetProfile::exfil;
  else
    throw Error(r.where("payload_profile") + "expected checkin, module_fetch or exfil");
  c.bot_id = r.str("bot_id", c.bot_id);
  r.integer_into("start_tick", c.start_tick, 0, kMaxTick);
  r.integer_into("first_src_port", c.first_src_port, 1, 65535);
  e.public_key = resolve(base, r.str("public_key"));
  if (r.has("private_key"))
    e.private_key = resolve(base, r.str("private_key"));
  c.validate();
  return e;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::is_regular_file(p))
    throw Error(std::string(what) + ": file not found: " + p.string());
}

} // namespace

Scenario parse_scenario(const ordered_json& doc, const std::filesystem::path& base_dir) {
  Reader r(doc, "",
           {"name", "description", "topology", "signatures", "include_inert_hosts", "variation", "ticks", "seed",
            "infected_host", "cnc", "zeus", "zitmo", "emotet", "costs", "likelihood_ratios", "expect"});
  Scenario s;
  s.name = r.str("name", "scenario");
  s.topology_path = resolve(base_dir, r.str("topology"));
  s.signatures_path = resolve(base_dir, r.str("signatures"));
  require_file(s.topology_path, "topology");
  require_file(s.signatures_path, "signatures");
  if (r.has("include_inert_hosts")) {
    if (!r.raw("include_inert_hosts").is_boolean())
      throw Error("include_inert_hosts: expected a boolean");
    s.include_inert_hosts = r.raw("include_inert_hosts").get<bool>();
  }
  std::string variation = r.str("variation", "none");
  if (variation == "none")
    s.variation = Variation::none;
  else if (variation == "infection_download")
    s.variation = Variation::infection_download;
  else if (variation == "pre_infected")
    s.variation = Variation::pre_infected;
  else
    throw Error("variation: expected none, infection_download or pre_infected");
  s.ticks = r.integer("ticks", 1, kMaxTick);
  if (r.has("seed")) {
    const auto& seed = r.raw("seed");
    if (!seed.is_number_unsigned())
      throw Error("seed: expected a non-negative integer");
    s.seed = seed.get<std::uint64_t>();
  }
  if (r.has("infected_host"))
    s.infected_host = r.ip("infected_host");
  if (r.has("cnc"))
    s.cnc = r.ip("cnc");

  if (r.has("zeus")) {
    Reader zr(r.raw("zeus"), "zeus",
              {"rc4_key", "cnc_port", "cfg_uri", "gate_uri", "download_uri", "ping_interval_ticks", "bot_id",
               "start_tick", "first_src_port", "config_text"});
    s.zeus = zeus_config(zr, s);
    s.zeus_cnc.rc4_key = s.zeus->rc4_key;
    s.zeus_cnc.cfg_uri = s.zeus->cfg_uri;
    s.zeus_cnc.gate_uri = s.zeus->gate_uri;
    s.zeus_cnc.download_uri = s.zeus->download_uri;
    s.zeus_cnc.config_text = zr.str("config_text", s.zeus_cnc.config_text);
  } else if (s.variation != Variation::none) {
    throw Error("variation: needs a zeus section");
  }
  if (r.has("zitmo"))
    s.zitmo = zitmo_setup(Reader(r.raw("zitmo"), "zitmo",
                                 {"device_ip", "phone", "devid", "key", "cnc_urls", "ping_interval_ticks",
                                  "account", "settings_path", "first_src_port", "script", "url_update"}));
  if (r.has("emotet")) {
    s.emotet = emotet_setup(Reader(r.raw("emotet"), "emotet",
                                   {"bot_ip", "cnc_ip", "cnc_port", "uri", "checkin_interval_ticks",
                                    "payload_profile", "bot_id", "start_tick", "first_src_port", "public_key",
                                    "private_key"}),
                            s, base_dir);
    require_file(s.emotet->public_key, "emotet.public_key");
    if (s.emotet->private_key)
      require_file(*s.emotet->private_key, "emotet.private_key");
  }
  if (r.has("costs")) {
    Reader cr(r.raw("costs"), "costs", {"goal_loss", "block_cost_specific", "block_cost_general"});
    cr.number_into("goal_loss", s.costs.goal_loss);
    cr.number_into("block_cost_specific", s.costs.block_cost_specific);
    cr.number_into("block_cost_general", s.costs.block_cost_general);
  }
  s.costs.validate();
  if (r.has("likelihood_ratios")) {
    Reader lr(r.raw("likelihood_ratios"), "likelihood_ratios", {"l1", "l2", "l3"});
    lr.number_into("l1", s.ratios.l1);
    lr.number_into("l2", s.ratios.l2);
    lr.number_into("l3", s.ratios.l3);
    for (double v : {s.ratios.l1, s.ratios.l2, s.ratios.l3})
      if (!(v > 0))
        throw Error("likelihood_ratios: ratios must be positive");
  }
  if (r.has("expect")) {
    s.expect = r.raw("expect");
    if (!s.expect.is_object())
      throw Error("expect: expected an object");
  }
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open scenario '" + path.string() + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  try {
    return parse_scenario(doc, path.parent_path());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::is_regular_file(p))
    return p;
  std::vector<std::filesystem::path> dirs{"scenarios"};
#ifdef IIRS_SOURCE_DIR
  dirs.emplace_back(std::filesystem::path(IIRS_SOURCE_DIR) / "scenarios");
#endif
  for (const auto& dir : dirs) {
    for (const auto& candidate : {dir / name_or_path, dir / (name_or_path + ".json")})
      if (std::filesystem::is_regular_file(candidate))
        return candidate;
  }
  throw Error("scenario not found: " + name_or_path);
}

} // namespace iirs::harness
