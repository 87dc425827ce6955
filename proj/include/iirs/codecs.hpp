#pragma once

// Wire formats of the three emulated families. All functions are pure: the only
// secrets or randomness they use are the keys passed in.

#include "iirs/common.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iirs::codecs {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(std::span<const std::uint8_t> b);
std::string hex_upper(std::span<const std::uint8_t> b);
Bytes from_hex(std::string_view hex); // throws on odd length or non-hex

std::string base64_encode(std::span<const std::uint8_t> data);
/// Strict: standard alphabet, padding required, no whitespace.
Bytes base64_decode(std::string_view text);

class CodecError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------- Zeus

/// RC4 key schedule (KSA output) for a key of 1..256 bytes.
std::array<std::uint8_t, 256> rc4_key_schedule(std::span<const std::uint8_t> key);
Bytes rc4(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data);

/// Byte-chaining XOR: out[0] = in[0], out[i] = in[i] ^ in[i-1].
Bytes zeus_visual_encode(std::span<const std::uint8_t> data);
Bytes zeus_visual_decode(std::span<const std::uint8_t> data);

/// rc4(key, visual_encode(payload)). There is no integrity tag.
Bytes zeus_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> payload);
Bytes zeus_open(std::span<const std::uint8_t> key, std::span<const std::uint8_t> blob);

// ---------------------------------------------------------------- ZitMo

inline constexpr std::string_view kZitmoTerminator = "&Sign28tepXXX";
inline constexpr std::string_view kZitmoDefaultKey = "0523850789a8cfed";

enum class ZitmoService { timer, login, sms };

struct ZitmoMessage {
  ZitmoService services = ZitmoService::timer;
  std::string login;
  std::string phone;
  std::string devid;
  std::optional<std::string> dd; // 8 hex digits
  std::optional<int> flag; // 0 or 1
  std::vector<std::string> urls;
  std::optional<std::string> text; // sms body, plain (percent-encoded on the wire)
  std::optional<std::string> number;

  friend bool operator==(const ZitmoMessage&, const ZitmoMessage&) = default;
};

/// timer/login: `services=..&login=..&phone=..&devid=..` then `&dd=..`, `&<flag>`,
/// `&<url>`... (or a single empty field when none are present) and the terminator.
/// sms: `services=sms&text=..&number=..&login=..&`.
std::string zitmo_format(const ZitmoMessage& msg);
ZitmoMessage zitmo_parse(std::string_view text);

/// C&C reply: the URL list joined by '&' followed by the terminator. An empty list
/// is the empty response.
std::string zitmo_format_response(const std::vector<std::string>& urls);
std::vector<std::string> zitmo_parse_response(std::string_view text);

/// application/x-www-form-urlencoded escaping (space -> '+').
std::string form_encode(std::string_view s);
std::string form_decode(std::string_view s);

/// Space-pad to a multiple of 16, AES-128-ECB, Base64.
std::string zitmo_encrypt(std::string_view key16, std::string_view plaintext);
/// Inverse of zitmo_encrypt; strips every trailing space.
std::string zitmo_decrypt(std::string_view key16, std::string_view base64_text);

/// CRC-32 (IEEE 802.3), uppercase, 8 digits.
std::string crc32_hex(std::span<const std::uint8_t> data);
std::string crc32_hex(std::string_view data);

/// dd value for a URL list: CRC-32 over the '\n'-joined list.
std::string zitmo_url_digest(const std::vector<std::string>& urls);

// ---------------------------------------------------------------- Emotet

/// PEM-encoded RSA key, loaded once. Move-only.
class RsaKey {
public:
  static RsaKey from_pem(std::string_view pem); // public or private
  static RsaKey from_pem_file(const std::string& path);
  RsaKey(RsaKey&&) noexcept;
  RsaKey& operator=(RsaKey&&) noexcept;
  ~RsaKey();

  bool has_private() const { return has_private_; }
  std::size_t modulus_bytes() const;
  void* handle() const { return pkey_; } // EVP_PKEY*

private:
  RsaKey() = default;
  void* pkey_ = nullptr;
  bool has_private_ = false;
};

using SessionKey = std::array<std::uint8_t, 16>;

/// base64( RSA-OAEP-SHA1(session_key) || AES-128-CBC(session_key, iv=0, PKCS#7)(payload) ).
/// The OAEP seed is derived from the session key and payload, so sealing is
/// deterministic for fixed inputs.
std::string emotet_seal(const RsaKey& rsa_public, const SessionKey& session_key,
                        std::span<const std::uint8_t> payload);

struct EmotetOpened {
  SessionKey session_key{};
  Bytes payload;
};
EmotetOpened emotet_open(const RsaKey& rsa_private, std::string_view cookie_value);

/// AES-128-CBC (iv=0, PKCS#7) under a session key, Base64; used for C&C replies.
std::string emotet_session_encrypt(const SessionKey& key, std::span<const std::uint8_t> data);
Bytes emotet_session_decrypt(const SessionKey& key, std::string_view base64_text);

} // namespace iirs::codecs
