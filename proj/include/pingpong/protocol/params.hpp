#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pingpong::protocol {

// Wire capacities. Runtime parameters may be smaller but never larger: the
// notification vector and message slot always occupy their full width on the
// wire so packet sizes do not depend on deployment tuning.
inline constexpr std::size_t kMaxFriendsCapacity = 512;
inline constexpr std::size_t kMsgCapacity = 256;
inline constexpr std::size_t kNotfPacketLen = 256;
inline constexpr std::size_t kLabelBits = 256;
inline constexpr std::size_t kTokenBits = 64;

// Two-tier OHT bucket size for security parameter lambda and load exponent eps:
// Z = ceil(5 * (ln lambda)^eps). Gives 17 at (128, 0.75).
inline std::uint32_t oht_bucket_size(std::uint32_t lambda, double eps) {
  return static_cast<std::uint32_t>(std::ceil(5.0 * std::pow(std::log(static_cast<double>(lambda)), eps)));
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Params {
  std::uint32_t max_friends = 512;
  std::uint32_t notf_packet_len = kNotfPacketLen;
  std::uint32_t label_len = kLabelBits;
  std::uint32_t token_len = kTokenBits;
  std::uint32_t msg_len = 256;
  std::uint32_t k = 4;
  std::uint32_t N = 8640;
  std::uint32_t m = 46;  // floor(sqrt(N / k))
  std::uint32_t lambda = 128;
  double epsilon_oht = 0.75;
  std::uint32_t Z = 17;
  std::uint32_t round_ms = 1000;

  static std::uint32_t default_m(std::uint32_t N, std::uint32_t k) {
    return static_cast<std::uint32_t>(std::floor(std::sqrt(static_cast<double>(N) / k)));
  }

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    if (max_friends == 0 || max_friends % 8 != 0) p.push_back("max_friends must be a positive multiple of 8");
    if (max_friends > kMaxFriendsCapacity) p.push_back("max_friends exceeds wire capacity 512");
    if (notf_packet_len != kNotfPacketLen) p.push_back("notf_packet_len is fixed at 256");
    if (label_len != kLabelBits) p.push_back("label_len is fixed at 256 bits");
    if (token_len != kTokenBits) p.push_back("token_len is fixed at 64 bits");
    if (msg_len == 0 || msg_len > kMsgCapacity) p.push_back("msg_len must be in [1, 256]");
    if (k == 0) p.push_back("k must be positive");
    if (m == 0) p.push_back("m must be positive");
    if (static_cast<std::uint64_t>(m) * k > N) p.push_back("m*k must not exceed N");
    if (!(epsilon_oht > 0.0 && epsilon_oht <= 1.0)) p.push_back("epsilon_oht must be in (0, 1]");
    if (lambda < 2) p.push_back("lambda must be at least 2");
    else if (Z != oht_bucket_size(lambda, epsilon_oht))
      p.push_back("Z=" + std::to_string(Z) + " inconsistent with lambda/epsilon_oht (expected " +
                  std::to_string(oht_bucket_size(lambda, epsilon_oht)) + ")");
    if (round_ms == 0) p.push_back("round_ms must be positive");
    return p;
  }

  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid parameters:";
    for (const auto& s : p) msg += "\n  " + s;
    throw ConfigError(msg);
  }
};

}  // namespace pingpong::protocol
