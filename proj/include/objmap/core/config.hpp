// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace objmap {

// Minimal TOML-style config reader. Supports the subset used by scene and run
// files: [section] headers, [[section]] array-of-tables, and key = value lines
// where value is a quoted string, bool, integer, float, or a flat array of
// those. Keys are exposed flattened as "section.key".
class Config {
 public:
  struct Value {
    enum class Kind { kString, kBool, kInt, kFloat, kArray } kind = Kind::kString;
    std::string str;
    bool boolean = false;
    std::int64_t integer = 0;
    double real = 0.0;
    std::vector<Value> array;
  };

  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::int64_t get_int(const std::string& key, std::int64_t def) const;
  double get_double(const std::string& key, double def) const;
  std::vector<double> get_double_array(const std::string& key) const;
  std::vector<std::int64_t> get_int_array(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  // Tables introduced with [[name]], in file order.
  const std::vector<Config>& tables(const std::string& name) const;
  std::vector<std::string> keys() const;

  // Overrides, e.g. from command-line flags. The raw text is parsed with the
  // same value grammar as the file.
  void set_raw(const std::string& key, const std::string& raw_value);
  void set_string(const std::string& key, const std::string& v);
  void set_int(const std::string& key, std::int64_t v);
  void set_double(const std::string& key, double v);
  void set_bool(const std::string& key, bool v);

 private:
  const Value* find(const std::string& key) const;

  std::map<std::string, Value> values_;
  std::map<std::string, std::vector<Config>> tables_;
  std::string origin_;
  static const std::vector<Config> kNoTables;
};

}  // namespace objmap
