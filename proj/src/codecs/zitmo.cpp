#include "iirs/codecs.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <memory>

namespace iirs::codecs {

namespace {

constexpr std::string_view kSmsTrailer = "&";

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t at = s.find(sep, start);
    if (at == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

void check_value(std::string_view name, std::string_view value) {
  if (value.find('&') != std::string_view::npos)
    throw CodecError("zitmo field '" + std::string(name) + "' must not contain '&'");
}

bool is_dd(std::string_view v) {
  if (v.size() != 8)
    return false;
  for (char c : v)
    if (!std::isxdigit(static_cast<unsigned char>(c)))
      return false;
  return true;
}

std::string_view take(std::string_view token, std::string_view key) {
  if (!token.starts_with(key) || token.size() < key.size() + 1 || token[key.size()] != '=')
    throw CodecError("zitmo: expected field '" + std::string(key) + "', got '" + std::string(token) + "'");
  return token.substr(key.size() + 1);
}

const char* service_name(ZitmoService s) {
  switch (s) {
  case ZitmoService::timer: return "timer";
  case ZitmoService::login: return "login";
  case ZitmoService::sms: return "sms";
  }
  return "?";
}

struct CipherCtx {
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx{EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free};
};

Bytes aes_ecb(std::string_view key16, std::span<const std::uint8_t> data, bool encrypt) {
  if (key16.size() != 16)
    throw CodecError("AES-128 key must be exactly 16 bytes");
  CipherCtx c;
  const auto* key = reinterpret_cast<const unsigned char*>(key16.data());
  if (!c.ctx || EVP_CipherInit_ex(c.ctx.get(), EVP_aes_128_ecb(), nullptr, key, nullptr, encrypt ? 1 : 0) != 1)
    throw CodecError("AES initialisation failed");
  EVP_CIPHER_CTX_set_padding(c.ctx.get(), 0);
  Bytes out(data.size() + 16);
  int n = 0;
  int tail = 0;
  if (EVP_CipherUpdate(c.ctx.get(), out.data(), &n, data.data(), static_cast<int>(data.size())) != 1 ||
      EVP_CipherFinal_ex(c.ctx.get(), out.data() + n, &tail) != 1)
    throw CodecError("AES-ECB failed");
  out.resize(static_cast<std::size_t>(n + tail));
  return out;
}

} // namespace

std::string form_encode(std::string_view s) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else if (c == ' ') {
      out += '+';
    } else {
      out += '%';
      out += digits[c >> 4];
      out += digits[c & 0xF];
    }
  }
  return out;
}

std::string form_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '+') {
      out += ' ';
    } else if (c == '%') {
      if (i + 2 >= s.size() || !std::isxdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isxdigit(static_cast<unsigned char>(s[i + 2])))
        throw CodecError("malformed percent escape");
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += c;
    }
  }
  return out;
}

std::string zitmo_format(const ZitmoMessage& m) {
  check_value("login", m.login);
  std::string out = "services=";
  out += service_name(m.services);
  if (m.services == ZitmoService::sms) {
    if (!m.text || !m.number)
      throw CodecError("zitmo sms message needs text and number");
    check_value("number", *m.number);
    out += "&text=" + form_encode(*m.text);
    out += "&number=" + *m.number;
    out += "&login=" + m.login;
    out += kSmsTrailer;
    return out;
  }
  check_value("phone", m.phone);
  check_value("devid", m.devid);
  out += "&login=" + m.login + "&phone=" + m.phone + "&devid=" + m.devid;
  bool any = false;
  if (m.dd) {
    if (!is_dd(*m.dd))
      throw CodecError("zitmo dd must be 8 hex digits");
    out += "&dd=" + *m.dd;
    any = true;
  }
  if (m.flag) {
    if (*m.flag != 0 && *m.flag != 1)
      throw CodecError("zitmo flag must be 0 or 1");
    out += "&" + std::to_string(*m.flag);
    any = true;
  }
  for (const auto& u : m.urls) {
    check_value("url", u);
    if (u.find("://") == std::string::npos)
      throw CodecError("zitmo url '" + u + "' has no scheme");
    out += "&" + u;
    any = true;
  }
  if (!any)
    out += "&";
  out += kZitmoTerminator;
  return out;
}

ZitmoMessage zitmo_parse(std::string_view text) {
  ZitmoMessage m;
  if (!text.starts_with("services="))
    throw CodecError("zitmo: message must start with services=");
  std::string_view service = text.substr(9, text.find('&') == std::string_view::npos ? std::string_view::npos
                                                                                       : text.find('&') - 9);
  if (service == "sms") {
    if (!text.ends_with(kSmsTrailer))
      throw CodecError("zitmo: missing terminator");
    auto tokens = split(text.substr(0, text.size() - kSmsTrailer.size()), '&');
    if (tokens.size() != 4)
      throw CodecError("zitmo: sms message must have exactly text, number and login");
    m.services = ZitmoService::sms;
    m.text = form_decode(take(tokens[1], "text"));
    m.number = std::string(take(tokens[2], "number"));
    m.login = std::string(take(tokens[3], "login"));
    return m;
  }
  if (service == "timer")
    m.services = ZitmoService::timer;
  else if (service == "login")
    m.services = ZitmoService::login;
  else
    throw CodecError("zitmo: unknown service '" + std::string(service) + "'");
  if (!text.ends_with(kZitmoTerminator))
    throw CodecError("zitmo: missing terminator");
  auto tokens = split(text.substr(0, text.size() - kZitmoTerminator.size()), '&');
  if (tokens.size() < 5)
    throw CodecError("zitmo: truncated message");
  m.login = std::string(take(tokens[1], "login"));
  m.phone = std::string(take(tokens[2], "phone"));
  m.devid = std::string(take(tokens[3], "devid"));
  std::size_t i = 4;
  if (tokens.size() == 5 && tokens[4].empty())
    return m;
  if (tokens[i].starts_with("dd=")) {
    auto dd = tokens[i].substr(3);
    if (!is_dd(dd))
      throw CodecError("zitmo: dd must be 8 hex digits");
    m.dd = std::string(dd);
    ++i;
  }
  if (i < tokens.size() && (tokens[i] == "0" || tokens[i] == "1")) {
    m.flag = tokens[i] == "1" ? 1 : 0;
    ++i;
  }
  for (; i < tokens.size(); ++i) {
    if (tokens[i].find("://") == std::string_view::npos)
      throw CodecError("zitmo: unknown field '" + std::string(tokens[i]) + "'");
    m.urls.emplace_back(tokens[i]);
  }
  return m;
}

std::string zitmo_format_response(const std::vector<std::string>& urls) {
  std::string out;
  for (std::size_t i = 0; i < urls.size(); ++i) {
    check_value("url", urls[i]);
    if (urls[i].empty())
      throw CodecError("zitmo: empty url");
    if (i)
      out += '&';
    out += urls[i];
  }
  return out + std::string(kZitmoTerminator);
}

std::vector<std::string> zitmo_parse_response(std::string_view text) {
  if (!text.ends_with(kZitmoTerminator))
    throw CodecError("zitmo: missing terminator");
  auto body = text.substr(0, text.size() - kZitmoTerminator.size());
  std::vector<std::string> urls;
  if (body.empty())
    return urls;
  for (auto t : split(body, '&')) {
    if (t.empty())
      throw CodecError("zitmo: empty url in response");
    urls.emplace_back(t);
  }
  return urls;
}

std::string zitmo_encrypt(std::string_view key16, std::string_view plaintext) {
  std::string padded(plaintext);
  padded.append((16 - padded.size() % 16) % 16, ' ');
  return base64_encode(aes_ecb(key16, to_bytes(padded), true));
}

std::string zitmo_decrypt(std::string_view key16, std::string_view base64_text) {
  Bytes cipher = base64_decode(base64_text);
  if (cipher.size() % 16 != 0)
    throw CodecError("zitmo: ciphertext length is not a multiple of 16");
  std::string plain = to_string(aes_ecb(key16, cipher, false));
  while (!plain.empty() && plain.back() == ' ')
    plain.pop_back();
  return plain;
}

std::string crc32_hex(std::span<const std::uint8_t> data) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (auto b : data)
    crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8);
  crc ^= 0xFFFFFFFFu;
  std::array<std::uint8_t, 4> be{static_cast<std::uint8_t>(crc >> 24), static_cast<std::uint8_t>(crc >> 16),
                                 static_cast<std::uint8_t>(crc >> 8), static_cast<std::uint8_t>(crc)};
  return hex_upper(be);
}

std::string crc32_hex(std::string_view data) {
  return crc32_hex(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string zitmo_url_digest(const std::vector<std::string>& urls) {
  std::string joined;
  for (std::size_t i = 0; i < urls.size(); ++i) {
    if (i)
      joined += '\n';
    joined += urls[i];
  }
  return crc32_hex(std::string_view(joined));
}

} // namespace iirs::codecs
