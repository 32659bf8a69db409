// include/scenesep/config.hpp

// Copyright 2026 The scenesep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCENESEP_CONFIG_HPP_
#define SCENESEP_CONFIG_HPP_

/// \file config.hpp
/// Flat key = value run configuration. '#' starts a comment, blank lines are
/// skipped, keys are unique. serialize() emits sorted lines so that every run
/// log carries the exact configuration it ran under.

#include <cstdint>
#include <map>
#include <string>

namespace scenesep {

class Config {
 public:
  static Config from_string(const std::string& text);
  static Config load_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Dataset root: SCENESEP_DATA_ROOT env var when set, else config key
/// "data_root", else "data".
std::string data_root(const Config& c);

}  // namespace scenesep

#endif  // SCENESEP_CONFIG_HPP_
