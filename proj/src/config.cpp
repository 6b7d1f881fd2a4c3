#include "vqp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "vqp/io.hpp"

namespace vqp::cfg {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "seed",
      "data.contents",
      "data.frames",
      "data.width",
      "data.height",
      "data.domain",
      "data.first_content_id",
      "fr.tasks",
      "train.batch_size",
      "train.learning_rate",
      "train.momentum",
      "train.epochs",
      "train.frame_stride",
      "train.tasks",
      "train.embed_dim",
      "features.frame_stride",
      "head.model",
      "head.ridge_lambda",
      "head.c_grid",
      "head.gamma_grid",
      "eval.protocol",
      "eval.runs",
      "eval.samplings",
      "eval.fewshot_k",
      "eval.regressor",
      "eval.zeroshot_epochs",
      "ablate.st_task",
  };
  return keys;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t used = 0;
  int v = std::stoi(it->second, &used);
  if (used != it->second.size()) {
    throw std::invalid_argument("config key " + key + ": not an integer: " + it->second);
  }
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t used = 0;
  double v = std::stod(it->second, &used);
  if (used != it->second.size()) {
    throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
  }
  return v;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t used = 0;
  unsigned long long v = std::stoull(it->second, &used);
  if (used != it->second.size()) {
    throw std::invalid_argument("config key " + key + ": not an unsigned integer: " + it->second);
  }
  return static_cast<uint64_t>(v);
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<int> out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("config key " + key + ": empty list entry");
    size_t used = 0;
    out.push_back(std::stoi(item, &used));
    if (used != item.size()) {
      throw std::invalid_argument("config key " + key + ": not an integer: " + item);
    }
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

std::string Config::hash_hex() const {
  // kv is an ordered map, so iteration is already canonical.
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : kv) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_override(Config& config, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must be key=value, got: " + assignment);
  }
  std::string key = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw std::invalid_argument("unknown config key: " + key);
  }
  if (value.empty()) throw std::invalid_argument("config key " + key + " has empty value");
  config.kv[key] = value;
}

Config parse_config_text(const std::string& text) {
  Config config;
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got: " + line);
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key: " + key);
    }
    if (config.kv.count(key)) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": duplicate key: " + key);
    }
    if (value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty value for " +
                                  key);
    }
    config.kv[key] = value;
  }
  return config;
}

Config load_config_file(const std::string& path) {
  return parse_config_text(io::read_text_file(path));
}

}  // namespace vqp::cfg
