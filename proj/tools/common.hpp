#pragma once

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "json.hpp"
#include "pingpong/crypto.hpp"
#include "pingpong/protocol/config.hpp"

namespace pingpong::tool {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssert = 1;
inline constexpr int kExitUsage = 2;

// Thrown for bad flags, files or configs; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void init_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("pingpong");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
  spdlog::set_pattern("%Y-%m-%d %H:%M:%S.%e %^%l%$ %v");
}

inline protocol::Config load_config_or_default(const std::string& path) {
  try {
    return protocol::load_config(path);
  } catch (const protocol::ConfigError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

template <std::size_t N>
std::array<std::uint8_t, N> read_raw_key(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string(what) + " path not configured");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string("cannot read ") + what + " from " + path);
  std::array<std::uint8_t, N> k{};
  in.read(reinterpret_cast<char*>(k.data()), N);
  if (in.gcount() != static_cast<std::streamsize>(N) || in.peek() != EOF)
    throw UsageError(std::string(what) + " in " + path + " is not " + std::to_string(N) + " raw bytes");
  return k;
}

template <std::size_t N>
void write_raw(const std::filesystem::path& path, const std::array<std::uint8_t, N>& b) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), N);
}

inline crypto::KeyPair read_keypair(const std::string& path) {
  return crypto::KeyPair::from_secret(read_raw_key<crypto_box_SECRETKEYBYTES>(path, "secret key"));
}

inline void emit_json(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << std::endl;
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + out_path);
  out << j.dump(2) << '\n';
}

inline void write_csv(const std::string& path, const std::string& column, const std::vector<double>& values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << column << '\n';
  for (double v : values) out << v << '\n';
}

}  // namespace pingpong::tool
