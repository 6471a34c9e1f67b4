#pragma once

// Sectioned key = value configuration files with line-anchored diagnostics.
//
//   # comment  (a line starting with ';' is also a comment)
//   [section]
//   key = value        # trailing comment
//
// Every key read through a Section is recorded together with its effective
// value (given or default), which is what the resolved-config echo prints.
// Keys that are never read are reported as unknown.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hcopt/distributions.hpp"
#include "hcopt/error.hpp"

namespace hcopt::harness {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& msg)
      : Error(source + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')') --depth;
    if (i == s.size() || (s[i] == sep && depth == 0)) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

/// Shortest round-trip representation.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
  mutable bool used = false;
};

class Config;

class Section {
 public:
  Section(const Config* owner, std::string name, std::size_t line) : owner_(owner), name_(std::move(name)), line_(line) {}

  const std::string& name() const { return name_; }
  std::size_t line() const { return line_; }
  const std::vector<ConfigEntry>& entries() const { return entries_; }
  void add(ConfigEntry e) { entries_.push_back(std::move(e)); }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
  [[noreturn]] void fail_section(const std::string& msg) const;

  std::string get_string(const std::string& key, std::optional<std::string> def = std::nullopt) const {
    if (const auto* e = find(key)) {
      e->used = true;
      record(key, e->value);
      return e->value;
    }
    if (!def) fail_section("missing required key '" + key + "'");
    record(key, *def);
    return *def;
  }

  std::string get_choice(const std::string& key, const std::vector<std::string>& choices,
                         std::optional<std::string> def = std::nullopt) const {
    const std::string v = get_string(key, def);
    for (const auto& c : choices)
      if (c == v) return v;
    std::string msg = "'" + key + "' must be one of:";
    for (const auto& c : choices) msg += " " + c;
    fail(key, msg);
  }

  double get_double(const std::string& key, std::optional<double> def = std::nullopt) const {
    if (const auto* e = find(key)) {
      e->used = true;
      const auto v = parse_double(e->value);
      if (!v) fail(key, "'" + key + "' expects a number, got '" + e->value + "'");
      record(key, format_double(*v));
      return *v;
    }
    if (!def) fail_section("missing required key '" + key + "'");
    record(key, format_double(*def));
    return *def;
  }

  std::uint64_t get_uint(const std::string& key, std::optional<std::uint64_t> def = std::nullopt) const {
    if (const auto* e = find(key)) {
      e->used = true;
      const std::string t = trim(e->value);
      std::uint64_t v = 0;
      const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        fail(key, "'" + key + "' expects a nonnegative integer, got '" + e->value + "'");
      record(key, std::to_string(v));
      return v;
    }
    if (!def) fail_section("missing required key '" + key + "'");
    record(key, std::to_string(*def));
    return *def;
  }

  bool get_bool(const std::string& key, bool def) const {
    const std::string v = get_choice(key, {"on", "off", "true", "false", "yes", "no"}, def ? "on" : "off");
    return v == "on" || v == "true" || v == "yes";
  }

  /// Whitespace-separated numbers.
  Vector get_vector(const std::string& key, std::optional<Vector> def = std::nullopt) const {
    if (const auto* e = find(key)) {
      e->used = true;
      Vector out;
      std::istringstream is(e->value);
      std::string tok;
      while (is >> tok) {
        const auto v = parse_double(tok);
        if (!v) fail(key, "'" + key + "' expects numbers, got '" + tok + "'");
        out.push_back(*v);
      }
      if (out.empty()) fail(key, "'" + key + "' is empty");
      record(key, join(out));
      return out;
    }
    if (!def) fail_section("missing required key '" + key + "'");
    record(key, join(*def));
    return *def;
  }

  /// Vector of length n; a single value is broadcast.
  Vector get_vector_n(const std::string& key, std::size_t n, std::optional<Vector> def = std::nullopt) const {
    Vector v = get_vector(key, def);
    if (v.size() == 1 && n > 1) v.assign(n, v[0]);
    if (v.size() != n) fail(key, "'" + key + "' needs " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    return v;
  }

  /// Rows separated by ';'.
  std::vector<Vector> get_matrix(const std::string& key) const {
    const auto* e = find(key);
    if (!e) fail_section("missing required key '" + key + "'");
    e->used = true;
    std::vector<Vector> rows;
    for (const auto& r : split(e->value, ';')) {
      Vector row;
      std::istringstream is(r);
      std::string tok;
      while (is >> tok) {
        const auto v = parse_double(tok);
        if (!v) fail(key, "'" + key + "' expects numbers, got '" + tok + "'");
        row.push_back(*v);
      }
      if (row.empty() || (!rows.empty() && row.size() != rows.front().size()))
        fail(key, "'" + key + "' rows must be non-empty and of equal length");
      rows.push_back(std::move(row));
    }
    std::string canon;
    for (std::size_t i = 0; i < rows.size(); ++i) canon += (i ? "; " : "") + join(rows[i]);
    record(key, canon);
    return rows;
  }

  /// A ';'-separated list of distributions; a single entry is broadcast.
  std::vector<Distribution> get_distributions(const std::string& key, std::size_t n,
                                              std::optional<std::string> def = std::nullopt) const;

  std::vector<std::pair<std::string, std::string>> resolved() const { return resolved_; }

 private:
  const Config* owner_;
  std::string name_;
  std::size_t line_;
  std::vector<ConfigEntry> entries_;
  mutable std::vector<std::pair<std::string, std::string>> resolved_;

  const ConfigEntry* find(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.key == key) return &e;
    return nullptr;
  }

  void record(const std::string& key, const std::string& value) const {
    for (auto& kv : resolved_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    resolved_.emplace_back(key, value);
  }

  static std::string join(const Vector& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    return s;
  }
};

class Config {
 public:
  static Config parse(std::istream& in, std::string source) {
    Config c;
    c.source_ = std::move(source);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = raw;
      for (std::size_t i = 0; i < line.size(); ++i)
        if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
          line.erase(i);
          break;
        }
      if (const std::string t = trim(line); !t.empty() && t.front() == ';') line.clear();
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(c.source_, lineno, "malformed section header");
        const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
        if (name.empty()) throw ConfigError(c.source_, lineno, "empty section name");
        for (const auto& s : c.sections_)
          if (s.name() == name) throw ConfigError(c.source_, lineno, "duplicate section [" + name + "]");
        c.sections_.emplace_back(&c, name, lineno);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(c.source_, lineno, "expected 'key = value'");
      if (c.sections_.empty()) throw ConfigError(c.source_, lineno, "key outside of any section");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty()) throw ConfigError(c.source_, lineno, "empty key");
      for (const auto& e : c.sections_.back().entries())
        if (e.key == key) throw ConfigError(c.source_, lineno, "duplicate key '" + key + "'");
      c.sections_.back().add({key, value, lineno, false});
    }
    return c;
  }

  static Config parse_string(const std::string& text, std::string source = "<string>") {
    std::istringstream is(text);
    return parse(is, std::move(source));
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    return parse(in, path);
  }

  Config() = default;
  Config(const Config& o) : source_(o.source_), sections_(o.sections_) { rebind(); }
  Config& operator=(const Config& o) {
    source_ = o.source_;
    sections_ = o.sections_;
    rebind();
    return *this;
  }

  const std::string& source() const { return source_; }
  const std::vector<Section>& sections() const { return sections_; }

  const Section* find(const std::string& name) const {
    for (const auto& s : sections_)
      if (s.name() == name) return &s;
    return nullptr;
  }

  const Section& require(const std::string& name) const {
    if (const auto* s = find(name)) return *s;
    throw ConfigError(source_, 0, "missing required section [" + name + "]");
  }

  /// Sections whose name starts with `prefix`, in file order.
  std::vector<const Section*> with_prefix(const std::string& prefix) const {
    std::vector<const Section*> out;
    for (const auto& s : sections_)
      if (s.name().rfind(prefix, 0) == 0) out.push_back(&s);
    return out;
  }

  /// Throws on the first key that was never read, or on unknown sections.
  void check_all_used(const std::vector<std::string>& known_prefixes) const {
    for (const auto& s : sections_) {
      bool known = false;
      for (const auto& p : known_prefixes) known = known || s.name() == p || s.name().rfind(p + ".", 0) == 0;
      if (!known) throw ConfigError(source_, s.line(), "unknown section [" + s.name() + "]");
      for (const auto& e : s.entries())
        if (!e.used) throw ConfigError(source_, e.line, "unknown key '" + e.key + "' in [" + s.name() + "]");
    }
  }

  /// Canonical text of every value read, in section order.
  std::string resolved_text() const {
    std::string out;
    for (const auto& s : sections_) {
      const auto kv = s.resolved();
      if (kv.empty()) continue;
      out += "[" + s.name() + "]\n";
      for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
      out += "\n";
    }
    return out;
  }

 private:
  std::string source_;
  std::vector<Section> sections_;

  void rebind() {
    std::vector<Section> copy;
    for (const auto& s : sections_) {
      Section n(this, s.name(), s.line());
      for (const auto& e : s.entries()) n.add(e);
      copy.push_back(std::move(n));
    }
    sections_ = std::move(copy);
  }
  friend class Section;
};

inline void Section::fail(const std::string& key, const std::string& msg) const {
  const auto* e = find(key);
  throw ConfigError(owner_->source_, e ? e->line : line_, msg);
}

inline void Section::fail_section(const std::string& msg) const {
  throw ConfigError(owner_->source_, line_, "[" + name_ + "] " + msg);
}

/// Parses "name(args)" into name and numeric arguments.
inline bool parse_call(const std::string& text, std::string& name, std::vector<std::string>& args) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos) {
    name = t;
    args.clear();
    return !name.empty();
  }
  if (t.back() != ')') return false;
  name = trim(std::string_view(t).substr(0, open));
  args = split(std::string_view(t).substr(open + 1, t.size() - open - 2), ',');
  if (args.size() == 1 && args[0].empty()) args.clear();
  return !name.empty();
}

/// uniform(a,b) | truncnormal(mu,sigma) | discrete(v:w, ...) | point(v) | poisson(m) | binomial(n,p)
inline Distribution parse_distribution(const std::string& text) {
  std::string name;
  std::vector<std::string> args;
  if (!parse_call(text, name, args)) throw ArgumentError("malformed distribution '" + text + "'");
  auto num = [&](std::size_t i) {
    const auto v = parse_double(args.at(i));
    if (!v) throw ArgumentError("distribution argument '" + args[i] + "' is not a number");
    return *v;
  };
  auto want = [&](std::size_t n) {
    if (args.size() != n) throw ArgumentError(name + " expects " + std::to_string(n) + " arguments");
  };
  if (name == "uniform") {
    want(2);
    return Distribution::uniform(num(0), num(1));
  }
  if (name == "truncnormal") {
    want(2);
    return Distribution::trunc_normal(num(0), num(1));
  }
  if (name == "point") {
    want(1);
    return Distribution::point_mass(num(0));
  }
  if (name == "poisson") {
    want(1);
    return Distribution::poisson(num(0));
  }
  if (name == "binomial") {
    want(2);
    const double n = num(0);
    if (n < 0 || n != std::floor(n)) throw ArgumentError("binomial trials must be a nonnegative integer");
    return Distribution::binomial(static_cast<std::uint64_t>(n), num(1));
  }
  if (name == "discrete") {
    if (args.empty()) throw ArgumentError("discrete needs value:weight pairs");
    Vector vals, wts;
    for (const auto& a : args) {
      const auto colon = a.find(':');
      if (colon == std::string::npos) throw ArgumentError("discrete entries must be value:weight");
      const auto v = parse_double(a.substr(0, colon)), w = parse_double(a.substr(colon + 1));
      if (!v || !w) throw ArgumentError("discrete entry '" + a + "' is not numeric");
      vals.push_back(*v);
      wts.push_back(*w);
    }
    return Distribution::discrete(vals, wts);
  }
  throw ArgumentError("unknown distribution '" + name + "'");
}

inline std::vector<Distribution> Section::get_distributions(const std::string& key, std::size_t n,
                                                            std::optional<std::string> def) const {
  const std::string text = get_string(key, def);
  std::vector<Distribution> out;
  std::string canon;
  try {
    for (const auto& part : split(text, ';')) {
      out.push_back(parse_distribution(part));
      canon += (canon.empty() ? "" : "; ") + out.back().describe();
    }
  } catch (const Error& e) {
    fail(key, e.what());
  }
  if (out.size() == 1 && n > 1) out.assign(n, out[0]);
  if (out.size() != n) fail(key, "'" + key + "' needs " + std::to_string(n) + " distributions, got " + std::to_string(out.size()));
  record(key, canon);
  return out;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace hcopt::harness
