#include "iirs/common.hpp"

#include <charconv>

namespace iirs {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.')
        return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9')
      return std::nullopt;
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || part > 255 || next - p > 3)
      return std::nullopt;
    p = next;
    value = (value << 8) | part;
  }
  if (p != end)
    return std::nullopt;
  return Ipv4{value};
}

Ipv4 Ipv4::from_string(std::string_view text, std::string_view what) {
  if (auto ip = parse(text))
    return *ip;
  throw Error(std::string(what) + ": '" + std::string(text) + "' is not a dotted-quad IPv4 address");
}

std::string Ipv4::str() const {
  return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xFF) + '.' +
         std::to_string((value_ >> 8) & 0xFF) + '.' + std::to_string(value_ & 0xFF);
}

} // namespace iirs
