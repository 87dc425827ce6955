#pragma once

#include "iirs/common.hpp"

#include <compare>
#include <string>

namespace iirs {

/// A defender response. Ordering is the tie-break order used when two actions
/// cost the same: noop, then specific, then general, then by address.
struct Action {
  enum class Kind { noop = 0, block_specific = 1, block_general = 2 };

  Kind kind = Kind::noop;
  Ipv4 src;
  Ipv4 dst; // block_specific only

  static Action noop() { return {}; }
  static Action block_specific(Ipv4 src, Ipv4 dst) { return {Kind::block_specific, src, dst}; }
  static Action block_general(Ipv4 src) { return {Kind::block_general, src, Ipv4{}}; }

  std::string str() const;

  friend auto operator<=>(const Action&, const Action&) = default;
};

} // namespace iirs
