#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "facetsearch/catalog.hpp"
#include "facetsearch/index.hpp"

namespace facetsearch {

enum class Level { Low, Medium, High };

std::string_view to_string(Level level);
std::optional<Level> parse_level(std::string_view s);

/// Absent, a non-negative number, or a qualitative level.
using BoundValue = std::variant<std::monostate, double, Level>;

enum class FilterField {
  PriceMin,
  PriceMax,
  ReviewCountMin,
  ReviewCountMax,
  AverageRatingMin,
  AverageRatingMax,
};

inline constexpr std::array<FilterField, 6> kFilterFields = {
    FilterField::PriceMin,         FilterField::PriceMax,         FilterField::ReviewCountMin,
    FilterField::ReviewCountMax,   FilterField::AverageRatingMin, FilterField::AverageRatingMax};

/// JSON key: price_min, price_max, review_count_min, ...
std::string_view field_name(FilterField f);
std::optional<FilterField> parse_field_name(std::string_view name);

/// Constraint schema extracted from a query.
struct StructuredFilters {
  BoundValue price_min;
  BoundValue price_max;
  BoundValue review_count_min;
  BoundValue review_count_max;
  BoundValue average_rating_min;
  BoundValue average_rating_max;
  std::optional<Subcategory> subcategory;

  BoundValue& operator[](FilterField f);
  const BoundValue& operator[](FilterField f) const;

  bool has_bounds() const;
  /// Throws Error when numeric min > max or a numeric rating is outside [0,5].
  void validate() const;

  friend bool operator==(const StructuredFilters&, const StructuredFilters&) = default;
};

/// One level's interval; `hi` may be +inf.
struct LevelInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_inclusive = true;
  bool hi_inclusive = true;

  friend bool operator==(const LevelInterval&, const LevelInterval&) = default;
};

enum class Metric { Rating, ReviewCount, Price };

/// low / medium / high intervals per metric; price intervals per subcategory.
///
/// Config format, flat key = interval:
///   rating.low = [0, 4.0)
///   price.cell_phone_accessories.high = [40, inf)
class ThresholdTable {
 public:
  static ThresholdTable parse(std::string_view text);
  static ThresholdTable load_file(const std::string& path);
  static const ThresholdTable& bundled();

  const LevelInterval& interval(Metric metric, Level level,
                                Subcategory sub = Subcategory::CellPhones) const;

 private:
  // [rating, review_count, price phones, price accessories][level]
  std::array<std::array<LevelInterval, 3>, 4> table_{};
};

struct Bound {
  double value = 0.0;
  bool inclusive = true;

  friend bool operator==(const Bound&, const Bound&) = default;
};

/// Purely numeric constraints.
struct ResolvedFilters {
  std::optional<Bound> price_min;
  std::optional<Bound> price_max;
  std::optional<Bound> review_count_min;
  std::optional<Bound> review_count_max;
  std::optional<Bound> average_rating_min;
  std::optional<Bound> average_rating_max;
  std::optional<Subcategory> subcategory;

  std::optional<Bound>& operator[](FilterField f);
  const std::optional<Bound>& operator[](FilterField f) const;

  /// True when the record satisfies every present constraint. A record
  /// without a price fails any price bound.
  bool admits(const ProductRecord& record) const;

  friend bool operator==(const ResolvedFilters&, const ResolvedFilters&) = default;
};

/// Numbers pass through as inclusive bounds. A level on a _min field becomes
/// its interval's lower endpoint; on a _max field the upper endpoint when
/// finite, else the next level's lower endpoint (exclusive), else nothing.
/// Price levels use f.subcategory, or `price_subcategory` when f has none.
ResolvedFilters resolve_thresholds(const StructuredFilters& f, const ThresholdTable& table,
                                   std::optional<Subcategory> price_subcategory = std::nullopt);

/// Ids of all records admitted by `f`, ascending.
IdSet preselect_ids(const ResolvedFilters& f, const CatalogTable& catalog);

/// Single-line JSON object with all seven keys, absent values as null.
std::string filters_to_text(const StructuredFilters& f);
/// Inverse of filters_to_text. Missing keys read as absent; unknown keys,
/// wrong types and broken invariants raise ParseError.
StructuredFilters parse_filters_text(std::string_view text);

/// Qualitative phrase table: "phrase => field=level[, field=level]".
class QualitativeLexicon {
 public:
  struct Entry {
    std::vector<std::string> words;
    std::vector<std::pair<FilterField, Level>> assignments;
  };

  static QualitativeLexicon parse(std::string_view text);
  static const QualitativeLexicon& bundled();

  /// Entries ordered longest phrase first.
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

class FilterExtractor {
 public:
  virtual ~FilterExtractor() = default;
  virtual StructuredFilters extract(std::string_view clean_query) const = 0;
};

/// Deterministic cue-word extractor: numeric spans attached to comparator
/// cues, qualitative phrases, and subcategory from the accessory lexicon.
class RuleExtractor final : public FilterExtractor {
 public:
  RuleExtractor(const QualitativeLexicon& qualitative = QualitativeLexicon::bundled(),
                const AccessoryLexicon& accessories = AccessoryLexicon::bundled())
      : qualitative_(qualitative), accessories_(accessories) {}

  StructuredFilters extract(std::string_view clean_query) const override;

 private:
  const QualitativeLexicon& qualitative_;
  const AccessoryLexicon& accessories_;
};

/// Runs `/bin/sh -c command`, writes the query plus a newline to its stdin
/// and parses its stdout as filters text.
class CommandExtractor final : public FilterExtractor {
 public:
  explicit CommandExtractor(std::string command) : command_(std::move(command)) {}
  StructuredFilters extract(std::string_view clean_query) const override;

 private:
  std::string command_;
};

/// RuleExtractor with the bundled lexicons.
StructuredFilters extract_filters(std::string_view clean_query);

}  // namespace facetsearch
