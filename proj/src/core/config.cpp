// SPDX-License-Identifier: Apache-2.0

#include "objmap/core/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "objmap/core/errors.hpp"

namespace objmap {

const std::vector<Config> Config::kNoTables;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (c == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

Config::Value parse_scalar(const std::string& raw, const std::string& where) {
  Config::Value v;
  const std::string s = trim(raw);
  if (s.empty()) throw ValidationError("empty value at " + where);
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ValidationError("unterminated string at " + where);
    v.kind = Config::Value::Kind::kString;
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) {
        ++i;
        switch (s[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: out += s[i];
        }
      } else {
        out += s[i];
      }
    }
    v.str = out;
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Config::Value::Kind::kBool;
    v.boolean = (s == "true");
    v.str = s;
    return v;
  }
  const bool looks_float = s.find_first_of(".eE") != std::string::npos &&
                           s.find_first_not_of("+-0123456789.eE") == std::string::npos;
  if (!looks_float) {
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), iv);
    if (ec == std::errc() && p == s.data() + s.size()) {
      v.kind = Config::Value::Kind::kInt;
      v.integer = iv;
      v.real = static_cast<double>(iv);
      v.str = s;
      return v;
    }
  }
  try {
    std::size_t pos = 0;
    const double dv = std::stod(s, &pos);
    if (pos == s.size()) {
      v.kind = Config::Value::Kind::kFloat;
      v.real = dv;
      v.str = s;
      return v;
    }
  } catch (const std::exception&) {
  }
  // Fall back to a bare string (lets enums read without quotes).
  v.kind = Config::Value::Kind::kString;
  v.str = s;
  return v;
}

Config::Value parse_value(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ValidationError("unterminated array at " + where);
    Config::Value v;
    v.kind = Config::Value::Kind::kArray;
    const std::string inner = s.substr(1, s.size() - 2);
    std::string cur;
    bool in_str = false;
    int depth = 0;
    for (char c : inner) {
      if (c == '"') in_str = !in_str;
      if (!in_str && c == '[') ++depth;
      if (!in_str && c == ']') --depth;
      if (c == ',' && !in_str && depth == 0) {
        if (!trim(cur).empty()) v.array.push_back(parse_scalar(cur, where));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty()) v.array.push_back(parse_scalar(cur, where));
    return v;
  }
  return parse_scalar(s, where);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path.string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  Config* target = &cfg;  // current [[table]] element, or the root
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.size() >= 4 && line[0] == '[' && line[1] == '[') {
      if (line.substr(line.size() - 2) != "]]")
        throw ValidationError("malformed table header at " + where);
      const std::string name = trim(line.substr(2, line.size() - 4));
      cfg.tables_[name].emplace_back();
      cfg.tables_[name].back().origin_ = where;
      target = &cfg.tables_[name].back();
      section.clear();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("malformed section header at " + where);
      section = trim(line.substr(1, line.size() - 2));
      target = &cfg;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("expected key = value at " + where);
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError("empty key at " + where);
    if (!section.empty()) key = section + "." + key;
    target->values_[key] = parse_value(line.substr(eq + 1), where);
  }
  return cfg;
}

const Config::Value* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key) const {
  const Value* v = find(key);
  if (!v) throw ValidationError("missing config key '" + key + "' in " + origin_);
  return v->str;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  const Value* v = find(key);
  return v ? v->str : def;
}

bool Config::get_bool(const std::string& key, bool def) const {
  const Value* v = find(key);
  if (!v) return def;
  if (v->kind == Value::Kind::kBool) return v->boolean;
  if (v->kind == Value::Kind::kInt) return v->integer != 0;
  throw ValidationError("config key '" + key + "' is not a bool");
}

std::int64_t Config::get_int(const std::string& key, std::int64_t def) const {
  const Value* v = find(key);
  if (!v) return def;
  if (v->kind == Value::Kind::kInt) return v->integer;
  throw ValidationError("config key '" + key + "' is not an integer");
}

double Config::get_double(const std::string& key, double def) const {
  const Value* v = find(key);
  if (!v) return def;
  if (v->kind == Value::Kind::kFloat || v->kind == Value::Kind::kInt) return v->real;
  throw ValidationError("config key '" + key + "' is not a number");
}

std::vector<double> Config::get_double_array(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return {};
  if (v->kind != Value::Kind::kArray) throw ValidationError("config key '" + key + "' is not an array");
  std::vector<double> out;
  for (const Value& e : v->array) {
    if (e.kind != Value::Kind::kFloat && e.kind != Value::Kind::kInt)
      throw ValidationError("config key '" + key + "' has non-numeric entries");
    out.push_back(e.real);
  }
  return out;
}

std::vector<std::int64_t> Config::get_int_array(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return {};
  if (v->kind != Value::Kind::kArray) throw ValidationError("config key '" + key + "' is not an array");
  std::vector<std::int64_t> out;
  for (const Value& e : v->array) {
    if (e.kind != Value::Kind::kInt)
      throw ValidationError("config key '" + key + "' has non-integer entries");
    out.push_back(e.integer);
  }
  return out;
}

std::vector<std::string> Config::get_string_array(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return {};
  if (v->kind != Value::Kind::kArray) throw ValidationError("config key '" + key + "' is not an array");
  std::vector<std::string> out;
  for (const Value& e : v->array) out.push_back(e.str);
  return out;
}

const std::vector<Config>& Config::tables(const std::string& name) const {
  const auto it = tables_.find(name);
  return it == tables_.end() ? kNoTables : it->second;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

void Config::set_raw(const std::string& key, const std::string& raw_value) {
  values_[key] = parse_value(raw_value, "<override>");
}

void Config::set_string(const std::string& key, const std::string& v) {
  Value val;
  val.kind = Value::Kind::kString;
  val.str = v;
  values_[key] = val;
}

void Config::set_int(const std::string& key, std::int64_t v) {
  Value val;
  val.kind = Value::Kind::kInt;
  val.integer = v;
  val.real = static_cast<double>(v);
  val.str = std::to_string(v);
  values_[key] = val;
}

void Config::set_double(const std::string& key, double v) {
  Value val;
  val.kind = Value::Kind::kFloat;
  val.real = v;
  val.str = std::to_string(v);
  values_[key] = val;
}

void Config::set_bool(const std::string& key, bool v) {
  Value val;
  val.kind = Value::Kind::kBool;
  val.boolean = v;
  val.str = v ? "true" : "false";
  values_[key] = val;
}

}  // namespace objmap
