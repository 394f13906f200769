#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace facetsearch {

using ProductId = std::int64_t;

enum class Subcategory { CellPhones, CellPhoneAccessories };

// "Cell Phones" / "Cell Phone Accessories", the names used in filter JSON.
std::string_view to_string(Subcategory s);
// Accepts the display names above and the identifiers CellPhones /
// CellPhoneAccessories.
std::optional<Subcategory> parse_subcategory(std::string_view s);

struct ProductRecord {
  std::string asin;
  std::string title;
  std::string description;
  std::string features;
  std::string tech_specs;
  std::optional<double> price;
  double average_rating = 0.0;
  std::int64_t review_count = 0;
  Subcategory subcategory = Subcategory::CellPhones;

  friend bool operator==(const ProductRecord&, const ProductRecord&) = default;
};

/// Lowercases and strips markup, URLs and anything outside printable 7-bit
/// ASCII, then collapses whitespace. Idempotent.
std::string clean_text(std::string_view raw);

/// Cleaned title, description, features and tech specs joined by single
/// spaces, in that order. Empty fields are skipped.
std::string merge_product_text(const ProductRecord& record);

/// Whole-word term list deciding CellPhoneAccessories vs CellPhones.
///
/// Text format, one entry per line, '#' starts a comment:
///   term            accessory term, may span several words ("screen protector")
///   -phrase         shadowing phrase; words inside an occurrence of it never
///                   count toward a match ("battery life" shadows "battery")
class AccessoryLexicon {
 public:
  static AccessoryLexicon parse(std::string_view text);
  static const AccessoryLexicon& bundled();

  bool matches(std::string_view clean_text) const;
  const std::vector<std::vector<std::string>>& terms() const { return terms_; }

 private:
  std::vector<std::vector<std::string>> terms_;
  std::vector<std::vector<std::string>> shadows_;
};

/// Splits clean text into lexicon words: maximal runs of letters, digits,
/// '-', '&' and '\''.
std::vector<std::string> lexicon_words(std::string_view text);

Subcategory classify_subcategory(std::string_view clean_text,
                                 const AccessoryLexicon& lexicon = AccessoryLexicon::bundled());

/// Immutable product table. A record's position is its ProductId.
class CatalogTable {
 public:
  CatalogTable() = default;
  explicit CatalogTable(std::vector<ProductRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ProductRecord& operator[](ProductId id) const {
    return records_[static_cast<std::size_t>(id)];
  }
  const ProductRecord& at(ProductId id) const;
  const std::vector<ProductRecord>& records() const { return records_; }

  std::optional<ProductId> find(std::string_view asin) const;

 private:
  std::vector<ProductRecord> records_;
  std::unordered_map<std::string, ProductId> by_asin_;
};

/// Reads newline-delimited JSON records. Text fields are cleaned; a missing
/// subcategory is filled in by classify_subcategory on the merged text.
CatalogTable load_catalog(std::istream& in,
                          const AccessoryLexicon& lexicon = AccessoryLexicon::bundled());
CatalogTable load_catalog_file(const std::string& path,
                               const AccessoryLexicon& lexicon = AccessoryLexicon::bundled());

/// Writes the table back in the input format, subcategory always present.
void save_catalog(const CatalogTable& catalog, std::ostream& out);

}  // namespace facetsearch
