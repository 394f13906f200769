#include "facetsearch/config.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "facetsearch/error.hpp"

namespace facetsearch {
namespace {

enum class Kind { Path, Integer, Number, Flag };

struct KeySpec {
  std::string_view name;
  Kind kind;
};

constexpr std::array<KeySpec, 18> kKeys{{
    {"catalog", Kind::Path},     {"vectors", Kind::Path},   {"index", Kind::Path},
    {"adapter", Kind::Path},     {"thresholds", Kind::Path}, {"judgments", Kind::Path},
    {"pairs", Kind::Path},       {"d", Kind::Integer},      {"nlist", Kind::Integer},
    {"nprobe", Kind::Integer},   {"k", Kind::Integer},      {"batch", Kind::Integer},
    {"lr", Kind::Number},        {"epochs", Kind::Integer}, {"seed", Kind::Integer},
    {"no_filters", Kind::Flag},  {"import_embeddings", Kind::Flag},
    {"extractor_cmd", Kind::Path},
}};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> to_number(std::string_view s) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_flag(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const auto where = "config line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto* spec = find_key(key);
    if (spec == nullptr) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + std::string(key) + "'");
    bool ok = true;
    switch (spec->kind) {
      case Kind::Path: break;
      case Kind::Integer: ok = to_integer(value).has_value(); break;
      case Kind::Number: ok = to_number(value).has_value(); break;
      case Kind::Flag: ok = to_flag(value).has_value(); break;
    }
    if (!ok) throw ConfigError(where + ": bad value for '" + std::string(key) + "'");
    if (!cfg.values_.emplace(std::string(key), std::string(value)).second) {
      throw ConfigError(where + ": duplicate key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

RunConfig RunConfig::from_environment() {
  const char* path = std::getenv("FACETSEARCH_CONFIG");
  if (path == nullptr || *path == '\0') return {};
  return load_file(path);
}

std::optional<std::string> RunConfig::text(std::string_view key) const {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<long long> RunConfig::integer(std::string_view key) const {
  const auto v = text(key);
  return v ? to_integer(*v) : std::nullopt;
}

std::optional<double> RunConfig::number(std::string_view key) const {
  const auto v = text(key);
  return v ? to_number(*v) : std::nullopt;
}

std::optional<bool> RunConfig::flag(std::string_view key) const {
  const auto v = text(key);
  return v ? to_flag(*v) : std::nullopt;
}

}  // namespace facetsearch
