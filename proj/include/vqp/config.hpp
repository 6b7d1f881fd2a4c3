#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vqp::cfg {

// Flat key=value configuration with dotted stage prefixes (data.*, fr.*,
// train.*, features.*, head.*, eval.*, ablate.*) plus the global seed.
// Unknown keys are rejected so typos fail loudly instead of silently using
// defaults.
struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  // FNV-1a over the sorted canonical "key=value" lines; stable across runs
  // and key order, used as the provenance hash in emitted artifacts.
  std::string hash_hex() const;
};

const std::vector<std::string>& known_keys();

Config parse_config_text(const std::string& text);
Config load_config_file(const std::string& path);

// Applies "key=value" override strings (CLI --set) with the same validation.
void apply_override(Config& config, const std::string& assignment);

}  // namespace vqp::cfg
