#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pingpong/protocol/params.hpp"

namespace pingpong::protocol {

// Deployment configuration: protocol parameters plus node wiring. Loaded from
// an INI file of flat key=value lines (sections are accepted and ignored for
// lookup purposes: `[params] k = 4` and `k = 4` are equivalent), then
// overridden by PINGPONG_<KEY> environment variables.
struct Config {
  Params params;
  std::string listen = "127.0.0.1:7000";
  std::string ping_addr = "127.0.0.1:7000";
  std::string pong_addr = "127.0.0.1:7100";
  std::vector<std::string> peers;
  std::string ping_key;  // path to 32-byte raw secret key
  std::string pong_key;
  std::string ping_pub;  // path to 32-byte raw public key (client side)
  std::string pong_pub;
  std::string metrics_listen;  // host:port for the plain-text metrics endpoint, empty = off
  std::uint32_t entries = 2;   // entry nodes in scaled simulations
};

using EnvLookup = std::function<const char*(const char*)>;

inline const char* process_env(const char* name) { return std::getenv(name); }

namespace detail {

inline std::string env_name(const std::string& key) {
  std::string n = "PINGPONG_";
  for (char c : key) n += static_cast<char>(c == '.' ? '_' : std::toupper(static_cast<unsigned char>(c)));
  return n;
}

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream in(raw);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("bad value for " + key + ": '" + raw + "'");
  return v;
}

template <>
inline std::string parse_value<std::string>(const std::string&, const std::string& raw) {
  return raw;
}

}  // namespace detail

inline Config parse_config(const std::map<std::string, std::string>& kv, const EnvLookup& env = process_env) {
  Config c;
  std::map<std::string, std::string> merged = kv;
  auto bind = [&](const std::string& key, auto& field) {
    using T = std::remove_reference_t<decltype(field)>;
    if (const char* e = env ? env(detail::env_name(key).c_str()) : nullptr) merged[key] = e;
    auto it = merged.find(key);
    if (it == merged.end()) return;
    field = detail::parse_value<T>(key, it->second);
    merged.erase(it);
  };
  auto& p = c.params;
  bind("max_friends", p.max_friends);
  bind("notf_packet_len", p.notf_packet_len);
  bind("label_len", p.label_len);
  bind("token_len", p.token_len);
  bind("msg_len", p.msg_len);
  bind("k", p.k);
  bind("N", p.N);
  const bool m_given = merged.count("m") != 0 || (env && env(detail::env_name("m").c_str()));
  bind("m", p.m);
  bind("lambda", p.lambda);
  bind("epsilon_oht", p.epsilon_oht);
  bind("Z", p.Z);
  bind("round_ms", p.round_ms);
  bind("listen", c.listen);
  bind("ping_addr", c.ping_addr);
  bind("pong_addr", c.pong_addr);
  bind("ping_key", c.ping_key);
  bind("pong_key", c.pong_key);
  bind("ping_pub", c.ping_pub);
  bind("pong_pub", c.pong_pub);
  bind("metrics_listen", c.metrics_listen);
  bind("entries", c.entries);
  std::string peers;
  bind("peers", peers);
  std::istringstream ps(peers);
  for (std::string tok; std::getline(ps, tok, ',');)
    if (!tok.empty()) c.peers.push_back(tok);
  if (!m_given) p.m = Params::default_m(p.N, p.k);
  if (!merged.empty()) throw ConfigError("unknown config key: " + merged.begin()->first);
  p.validate();
  return c;
}

inline Config load_config(const std::string& path, const EnvLookup& env = process_env) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [key, node] : tree) {
      if (node.empty()) kv[key] = node.data();
      for (const auto& [sub, leaf] : node) kv[sub] = leaf.data();
    }
  }
  return parse_config(kv, env);
}

}  // namespace pingpong::protocol
