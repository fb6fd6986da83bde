#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace pingpong {

using Bytes = std::vector<std::uint8_t>;

struct ClientId {
  std::uint64_t value = 0;
  auto operator<=>(const ClientId&) const = default;
};

// 256-bit client label, word 0 most significant. The all-zero label is
// reserved for idle notifications and never registered.
using Label = std::array<std::uint64_t, 4>;

inline constexpr Label kNullLabel{};

struct RetrievalToken {
  std::uint64_t value = 0;
  auto operator<=>(const RetrievalToken&) const = default;
};

inline void put_u64_be(std::uint8_t* out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}

inline std::uint64_t get_u64_be(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

inline void put_label(std::uint8_t* out, const Label& l) {
  for (std::size_t i = 0; i < l.size(); ++i) put_u64_be(out + 8 * i, l[i]);
}

inline Label get_label(const std::uint8_t* in) {
  Label l;
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = get_u64_be(in + 8 * i);
  return l;
}

}  // namespace pingpong

template <>
struct std::hash<pingpong::ClientId> {
  std::size_t operator()(const pingpong::ClientId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};

template <>
struct std::hash<pingpong::RetrievalToken> {
  std::size_t operator()(const pingpong::RetrievalToken& t) const noexcept {
    return std::hash<std::uint64_t>{}(t.value);
  }
};
