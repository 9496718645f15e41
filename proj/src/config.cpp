// Copyright 2026 The brdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "brdp/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace brdp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: cannot parse '" + raw + "' as a number for key '" + key + "'");
  }
  return x;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: missing required key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  return parse_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError("config: key '" + key + "' is not an integer");
  }
  return i;
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0') {
    throw ConfigError("config: cannot parse '" + it->second + "' as u64 for key '" + key + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: cannot parse '" + v + "' as bool for key '" + key + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string raw = get_string(key);
  std::vector<double> out;
  std::istringstream in(raw);
  std::string token;
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    out.push_back(parse_double(key, token));
  }
  if (out.empty()) throw ConfigError("config: key '" + key + "' holds an empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  return has(key) ? get_double_list(key) : fallback;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 1 || lo <= 0.0 || hi < lo) {
    throw ConfigError("log_spaced: need 0 < min <= max and count >= 1");
  }
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(std::log(lo) + step * i);
  return grid;
}

std::vector<double> parse_log_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = spec.rfind(':');
  if (c1 == std::string::npos || c2 == c1) {
    throw ConfigError("grid spec must be 'min:max:count', got '" + spec + "'");
  }
  const double lo = parse_double("grid", spec.substr(0, c1));
  const double hi = parse_double("grid", spec.substr(c1 + 1, c2 - c1 - 1));
  const int count = static_cast<int>(parse_double("grid", spec.substr(c2 + 1)));
  return log_spaced(lo, hi, count);
}

}  // namespace brdp
