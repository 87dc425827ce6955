#include "iirs/codecs.hpp"

#include <utility>

namespace iirs::codecs {

std::array<std::uint8_t, 256> rc4_key_schedule(std::span<const std::uint8_t> key) {
  if (key.empty() || key.size() > 256)
    throw CodecError("RC4 key length must be 1..256 bytes");
  std::array<std::uint8_t, 256> s{};
  for (int i = 0; i < 256; ++i)
    s[i] = static_cast<std::uint8_t>(i);
  std::uint8_t j = 0;
  for (int i = 0; i < 256; ++i) {
    j = static_cast<std::uint8_t>(j + s[i] + key[i % key.size()]);
    std::swap(s[i], s[j]);
  }
  return s;
}

Bytes rc4(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) {
  auto s = rc4_key_schedule(key);
  Bytes out(data.size());
  std::uint8_t i = 0;
  std::uint8_t j = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    ++i;
    j = static_cast<std::uint8_t>(j + s[i]);
    std::swap(s[i], s[j]);
    out[n] = data[n] ^ s[static_cast<std::uint8_t>(s[i] + s[j])];
  }
  return out;
}

Bytes zeus_visual_encode(std::span<const std::uint8_t> data) {
  Bytes out(data.begin(), data.end());
  for (std::size_t i = 1; i < data.size(); ++i)
    out[i] = data[i] ^ data[i - 1];
  return out;
}

Bytes zeus_visual_decode(std::span<const std::uint8_t> data) {
  Bytes out(data.begin(), data.end());
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i] = data[i] ^ out[i - 1];
  return out;
}

Bytes zeus_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> payload) {
  return rc4(key, zeus_visual_encode(payload));
}

Bytes zeus_open(std::span<const std::uint8_t> key, std::span<const std::uint8_t> blob) {
  return zeus_visual_decode(rc4(key, blob));
}

} // namespace iirs::codecs
