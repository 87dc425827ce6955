#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iirs {

/// Base for every error this library reports. The message is meant for humans
/// and already carries the location (field path, line/column, node id).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Simulation time. One tick is the defender's decision period.
using Tick = std::int64_t;

class Ipv4 {
public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}

  /// Strict dotted-quad parse: four decimal octets, no leading '+', no spaces.
  static std::optional<Ipv4> parse(std::string_view text);
  /// Like parse() but throws iirs::Error naming `what`.
  static Ipv4 from_string(std::string_view text, std::string_view what = "address");

  std::uint32_t value() const { return value_; }
  std::string str() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

private:
  std::uint32_t value_ = 0;
};

} // namespace iirs
