#include "facetsearch/queryfilter.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "facetsearch/bundled_data.hpp"
#include "facetsearch/error.hpp"

namespace facetsearch {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Low:
      return "low";
    case Level::Medium:
      return "medium";
    case Level::High:
      return "high";
  }
  return "low";
}

std::optional<Level> parse_level(std::string_view s) {
  if (s == "low") return Level::Low;
  if (s == "medium") return Level::Medium;
  if (s == "high") return Level::High;
  return std::nullopt;
}

std::string_view field_name(FilterField f) {
  switch (f) {
    case FilterField::PriceMin:
      return "price_min";
    case FilterField::PriceMax:
      return "price_max";
    case FilterField::ReviewCountMin:
      return "review_count_min";
    case FilterField::ReviewCountMax:
      return "review_count_max";
    case FilterField::AverageRatingMin:
      return "average_rating_min";
    case FilterField::AverageRatingMax:
      return "average_rating_max";
  }
  return "";
}

std::optional<FilterField> parse_field_name(std::string_view name) {
  for (const auto f : kFilterFields) {
    if (field_name(f) == name) return f;
  }
  return std::nullopt;
}

namespace {

bool is_min(FilterField f) {
  return f == FilterField::PriceMin || f == FilterField::ReviewCountMin ||
         f == FilterField::AverageRatingMin;
}

Metric metric_of(FilterField f) {
  switch (f) {
    case FilterField::PriceMin:
    case FilterField::PriceMax:
      return Metric::Price;
    case FilterField::ReviewCountMin:
    case FilterField::ReviewCountMax:
      return Metric::ReviewCount;
    default:
      return Metric::Rating;
  }
}

// (min field, max field) per metric.
constexpr std::array<std::pair<FilterField, FilterField>, 3> kBoundPairs = {{
    {FilterField::PriceMin, FilterField::PriceMax},
    {FilterField::ReviewCountMin, FilterField::ReviewCountMax},
    {FilterField::AverageRatingMin, FilterField::AverageRatingMax},
}};

template <typename Self>
auto& field_ref(Self& self, FilterField f) {
  switch (f) {
    case FilterField::PriceMin:
      return self.price_min;
    case FilterField::PriceMax:
      return self.price_max;
    case FilterField::ReviewCountMin:
      return self.review_count_min;
    case FilterField::ReviewCountMax:
      return self.review_count_max;
    case FilterField::AverageRatingMin:
      return self.average_rating_min;
    case FilterField::AverageRatingMax:
      break;
  }
  return self.average_rating_max;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

BoundValue& StructuredFilters::operator[](FilterField f) { return field_ref(*this, f); }
const BoundValue& StructuredFilters::operator[](FilterField f) const { return field_ref(*this, f); }

bool StructuredFilters::has_bounds() const {
  for (const auto f : kFilterFields) {
    if (!std::holds_alternative<std::monostate>((*this)[f])) return true;
  }
  return false;
}

void StructuredFilters::validate() const {
  for (const auto f : kFilterFields) {
    if (const auto* v = std::get_if<double>(&(*this)[f])) {
      if (!std::isfinite(*v) || *v < 0.0) {
        throw Error(std::string(field_name(f)) + " must be a finite non-negative number");
      }
      if (metric_of(f) == Metric::Rating && *v > 5.0) {
        throw Error(std::string(field_name(f)) + " must lie in [0,5]");
      }
    }
  }
  for (const auto& [lo, hi] : kBoundPairs) {
    const auto* a = std::get_if<double>(&(*this)[lo]);
    const auto* b = std::get_if<double>(&(*this)[hi]);
    if (a && b && *a > *b) throw InconsistentBounds(std::string(field_name(lo)));
  }
}

std::optional<Bound>& ResolvedFilters::operator[](FilterField f) { return field_ref(*this, f); }
const std::optional<Bound>& ResolvedFilters::operator[](FilterField f) const {
  return field_ref(*this, f);
}

bool ResolvedFilters::admits(const ProductRecord& r) const {
  if (subcategory && r.subcategory != *subcategory) return false;
  auto within = [](const std::optional<Bound>& lo, const std::optional<Bound>& hi, double x) {
    if (lo && (lo->inclusive ? x < lo->value : x <= lo->value)) return false;
    if (hi && (hi->inclusive ? x > hi->value : x >= hi->value)) return false;
    return true;
  };
  if (price_min || price_max) {
    if (!r.price || !within(price_min, price_max, *r.price)) return false;
  }
  if (!within(review_count_min, review_count_max, static_cast<double>(r.review_count))) return false;
  return within(average_rating_min, average_rating_max, r.average_rating);
}

// ---------------------------------------------------------------------------
// Threshold table

namespace {

std::size_t table_row(Metric metric, Subcategory sub) {
  switch (metric) {
    case Metric::Rating:
      return 0;
    case Metric::ReviewCount:
      return 1;
    case Metric::Price:
      break;
  }
  return sub == Subcategory::CellPhones ? 2 : 3;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

LevelInterval parse_interval(const std::string& text, const std::string& key) {
  static const std::regex re(
      R"(^([\[\(])\s*([0-9]+(?:\.[0-9]+)?)\s*,\s*([0-9]+(?:\.[0-9]+)?|\+?inf)\s*([\]\)])$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ConfigError("thresholds: bad interval for " + key + ": " + text);
  LevelInterval iv;
  iv.lo_inclusive = m[1] == "[";
  iv.lo = std::stod(m[2]);
  const bool unbounded = m[3].str().find("inf") != std::string::npos;
  iv.hi = unbounded ? std::numeric_limits<double>::infinity() : std::stod(m[3]);
  iv.hi_inclusive = !unbounded && m[4] == "]";
  if (iv.lo > iv.hi) throw ConfigError("thresholds: empty interval for " + key);
  return iv;
}

}  // namespace

ThresholdTable ThresholdTable::parse(std::string_view text) {
  static const std::map<std::string, std::size_t, std::less<>> kRows = {
      {"rating", 0},
      {"review_count", 1},
      {"price.cell_phones", 2},
      {"price.cell_phone_accessories", 3},
  };
  ThresholdTable t;
  std::array<std::array<bool, 3>, 4> seen{};
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("thresholds: expected key = interval: " + line);
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    const auto dot = key.rfind('.');
    const auto row = dot == std::string::npos ? kRows.end() : kRows.find(key.substr(0, dot));
    const auto level = dot == std::string::npos ? std::nullopt : parse_level(key.substr(dot + 1));
    if (row == kRows.end() || !level) throw ConfigError("thresholds: unknown key " + key);
    const auto li = static_cast<std::size_t>(*level);
    if (seen[row->second][li]) throw ConfigError("thresholds: duplicate key " + key);
    seen[row->second][li] = true;
    t.table_[row->second][li] = parse_interval(value, key);
  }
  for (const auto& [name, row] : kRows) {
    for (std::size_t l = 0; l < 3; ++l) {
      if (!seen[row][l]) throw ConfigError("thresholds: missing " + name + "." + std::string(to_string(static_cast<Level>(l))));
    }
    const auto& lv = t.table_[row];
    if (!(lv[0].lo <= lv[1].lo && lv[1].lo <= lv[2].lo && lv[0].hi <= lv[1].hi && lv[1].hi <= lv[2].hi)) {
      throw ConfigError("thresholds: endpoints of " + name + " must be non-decreasing low -> high");
    }
  }
  return t;
}

ThresholdTable ThresholdTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open thresholds: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const ThresholdTable& ThresholdTable::bundled() {
  static const ThresholdTable t = parse(bundled::kThresholds);
  return t;
}

const LevelInterval& ThresholdTable::interval(Metric metric, Level level, Subcategory sub) const {
  return table_[table_row(metric, sub)][static_cast<std::size_t>(level)];
}

// ---------------------------------------------------------------------------
// Resolution and preselection

ResolvedFilters resolve_thresholds(const StructuredFilters& f, const ThresholdTable& table,
                                   std::optional<Subcategory> price_subcategory) {
  ResolvedFilters out;
  out.subcategory = f.subcategory;
  const auto sub = f.subcategory ? f.subcategory : price_subcategory;

  for (const auto field : kFilterFields) {
    const auto& value = f[field];
    if (const auto* num = std::get_if<double>(&value)) {
      out[field] = Bound{*num, true};
      continue;
    }
    const auto* level = std::get_if<Level>(&value);
    if (level == nullptr) continue;

    const auto metric = metric_of(field);
    if (metric == Metric::Price && !sub) {
      throw Error("a qualitative price bound needs a subcategory");
    }
    const auto s = sub.value_or(Subcategory::CellPhones);
    const auto& iv = table.interval(metric, *level, s);
    if (is_min(field)) {
      out[field] = Bound{iv.lo, iv.lo_inclusive};
    } else if (std::isfinite(iv.hi)) {
      out[field] = Bound{iv.hi, iv.hi_inclusive};
    } else if (*level != Level::High) {
      const auto& next = table.interval(metric, static_cast<Level>(static_cast<int>(*level) + 1), s);
      out[field] = Bound{next.lo, false};
    }
  }

  for (const auto& [lo, hi] : kBoundPairs) {
    if (out[lo] && out[hi] && out[lo]->value > out[hi]->value) {
      throw InconsistentBounds(std::string(field_name(lo)));
    }
  }
  return out;
}

IdSet preselect_ids(const ResolvedFilters& f, const CatalogTable& catalog) {
  std::vector<ProductId> ids;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto id = static_cast<ProductId>(i);
    if (f.admits(catalog[id])) ids.push_back(id);
  }
  return IdSet(std::move(ids));
}

// ---------------------------------------------------------------------------
// Filters text

std::string filters_to_text(const StructuredFilters& f) {
  std::string out = "{";
  for (const auto field : kFilterFields) {
    out += '"';
    out += field_name(field);
    out += "\": ";
    const auto& v = f[field];
    if (const auto* num = std::get_if<double>(&v)) {
      out += format_number(*num);
    } else if (const auto* level = std::get_if<Level>(&v)) {
      out += '"';
      out += to_string(*level);
      out += '"';
    } else {
      out += "null";
    }
    out += ", ";
  }
  out += "\"subcategory\": ";
  if (f.subcategory) {
    out += '"';
    out += to_string(*f.subcategory);
    out += '"';
  } else {
    out += "null";
  }
  out += '}';
  return out;
}

StructuredFilters parse_filters_text(std::string_view text) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte, e.what());
  }
  if (!obj.is_object()) throw ParseError(0, "filters must be a JSON object");

  StructuredFilters f;
  for (const auto& item : obj.items()) {
    const auto& key = item.key();
    const auto& value = item.value();
    if (key == "subcategory") {
      if (value.is_null()) continue;
      const auto sub = value.is_string() ? parse_subcategory(value.get<std::string>()) : std::nullopt;
      if (!sub) throw ParseError(0, "unknown subcategory");
      f.subcategory = sub;
      continue;
    }
    const auto field = parse_field_name(key);
    if (!field) throw ParseError(0, "unknown key " + key);
    if (value.is_null()) continue;
    if (value.is_number()) {
      f[*field] = value.get<double>();
    } else if (value.is_string()) {
      const auto level = parse_level(value.get<std::string>());
      if (!level) throw ParseError(0, key + ": expected low, medium or high");
      f[*field] = *level;
    } else {
      throw ParseError(0, key + ": expected null, number or level string");
    }
  }
  try {
    f.validate();
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
  return f;
}

}  // namespace facetsearch
