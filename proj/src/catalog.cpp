#include "facetsearch/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "facetsearch/bundled_data.hpp"
#include "facetsearch/error.hpp"

namespace facetsearch {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_url_token(std::string_view tok) {
  return tok.find("http://") != std::string_view::npos ||
         tok.find("https://") != std::string_view::npos || tok.starts_with("www.");
}

bool is_word_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '-' || c == '&' || c == '\'';
}

// Marks every word position covered by an occurrence of `phrase`.
void mark_occurrences(const std::vector<std::string>& words,
                      const std::vector<std::string>& phrase, std::vector<bool>& mask) {
  if (phrase.empty() || phrase.size() > words.size()) return;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(i), phrase.size(), true);
    }
  }
}

}  // namespace

std::string_view to_string(Subcategory s) {
  switch (s) {
    case Subcategory::CellPhones:
      return "Cell Phones";
    case Subcategory::CellPhoneAccessories:
      return "Cell Phone Accessories";
  }
  return "Cell Phones";
}

std::optional<Subcategory> parse_subcategory(std::string_view s) {
  if (s == "Cell Phones" || s == "CellPhones") return Subcategory::CellPhones;
  if (s == "Cell Phone Accessories" || s == "CellPhoneAccessories") {
    return Subcategory::CellPhoneAccessories;
  }
  return std::nullopt;
}

std::string clean_text(std::string_view raw) {
  // 7-bit printable only; control whitespace becomes a plain space.
  std::string ascii;
  ascii.reserve(raw.size());
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80) continue;
    if (is_ascii_space(c)) {
      ascii.push_back(' ');
    } else if (c >= 0x20 && c != 0x7f) {
      ascii.push_back(ch);
    }
  }

  // Tags become a single space so adjacent words stay apart. Stray delimiters
  // are dropped the same way.
  std::string untagged;
  untagged.reserve(ascii.size());
  for (std::size_t i = 0; i < ascii.size(); ++i) {
    const char c = ascii[i];
    if (c == '<') {
      const auto close = ascii.find('>', i + 1);
      if (close != std::string::npos) i = close;
      untagged.push_back(' ');
    } else if (c == '>') {
      untagged.push_back(' ');
    } else {
      untagged.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }

  std::string out;
  out.reserve(untagged.size());
  std::size_t pos = 0;
  while (pos < untagged.size()) {
    while (pos < untagged.size() && untagged[pos] == ' ') ++pos;
    const auto end = std::min(untagged.find(' ', pos), untagged.size());
    if (end > pos) {
      const std::string_view tok(untagged.data() + pos, end - pos);
      if (!is_url_token(tok)) {
        if (!out.empty()) out.push_back(' ');
        out.append(tok);
      }
    }
    pos = end;
  }
  return out;
}

std::string merge_product_text(const ProductRecord& record) {
  std::string out;
  for (const std::string* field :
       {&record.title, &record.description, &record.features, &record.tech_specs}) {
    const auto cleaned = clean_text(*field);
    if (cleaned.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += cleaned;
  }
  return out;
}

std::vector<std::string> lexicon_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

AccessoryLexicon AccessoryLexicon::parse(std::string_view text) {
  AccessoryLexicon lex;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const bool shadow = !line.empty() && line.front() == '-';
    if (shadow) line.remove_prefix(1);
    auto words = lexicon_words(line);
    if (words.empty()) continue;
    (shadow ? lex.shadows_ : lex.terms_).push_back(std::move(words));
  }
  return lex;
}

const AccessoryLexicon& AccessoryLexicon::bundled() {
  static const AccessoryLexicon lex = parse(bundled::kAccessoryLexicon);
  return lex;
}

bool AccessoryLexicon::matches(std::string_view clean_text) const {
  const auto words = lexicon_words(clean_text);
  std::vector<bool> shadowed(words.size(), false);
  for (const auto& phrase : shadows_) mark_occurrences(words, phrase, shadowed);

  for (const auto& term : terms_) {
    if (term.size() > words.size()) continue;
    for (std::size_t i = 0; i + term.size() <= words.size(); ++i) {
      bool hit = true;
      for (std::size_t j = 0; j < term.size() && hit; ++j) {
        hit = !shadowed[i + j] && words[i + j] == term[j];
      }
      if (hit) return true;
    }
  }
  return false;
}

Subcategory classify_subcategory(std::string_view clean_text, const AccessoryLexicon& lexicon) {
  return lexicon.matches(clean_text) ? Subcategory::CellPhoneAccessories
                                     : Subcategory::CellPhones;
}

CatalogTable::CatalogTable(std::vector<ProductRecord> records) : records_(std::move(records)) {
  by_asin_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& asin = records_[i].asin;
    if (asin.empty()) throw MalformedRecord(i + 1, "empty asin");
    if (!by_asin_.emplace(asin, static_cast<ProductId>(i)).second) throw DuplicateAsin(asin);
  }
}

const ProductRecord& CatalogTable::at(ProductId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= records_.size()) {
    throw Error("product id out of range: " + std::to_string(id));
  }
  return records_[static_cast<std::size_t>(id)];
}

std::optional<ProductId> CatalogTable::find(std::string_view asin) const {
  const auto it = by_asin_.find(std::string(asin));
  if (it == by_asin_.end()) return std::nullopt;
  return it->second;
}

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kCatalogKeys = {
    "asin",     "title",          "description",  "features",   "tech_specs",
    "price",    "average_rating", "review_count", "subcategory"};

std::string text_field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw MalformedRecord(line, std::string(key) + " must be a string");
  return clean_text(it->get<std::string>());
}

ProductRecord parse_record(const std::string& text, std::size_t line,
                           const AccessoryLexicon& lexicon) {
  const json obj = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) throw MalformedRecord(line, "not a JSON object");
  for (const auto& item : obj.items()) {
    if (!kCatalogKeys.contains(item.key())) throw MalformedRecord(line, "unknown key " + item.key());
  }

  ProductRecord r;
  const auto asin = obj.find("asin");
  if (asin == obj.end() || !asin->is_string() || asin->get<std::string>().empty()) {
    throw MalformedRecord(line, "asin must be a non-empty string");
  }
  r.asin = asin->get<std::string>();
  r.title = text_field(obj, "title", line);
  r.description = text_field(obj, "description", line);
  r.features = text_field(obj, "features", line);
  r.tech_specs = text_field(obj, "tech_specs", line);

  if (const auto price = obj.find("price"); price != obj.end() && !price->is_null()) {
    if (!price->is_number()) throw MalformedRecord(line, "price must be a number");
    const double p = price->get<double>();
    if (p < 0.0) throw MalformedRecord(line, "negative price");
    r.price = p;
  }

  const auto rating = obj.find("average_rating");
  if (rating == obj.end() || !rating->is_number()) {
    throw MalformedRecord(line, "average_rating must be a number");
  }
  r.average_rating = rating->get<double>();
  if (!(r.average_rating >= 0.0 && r.average_rating <= 5.0)) {
    throw OutOfRangeRating(line, r.average_rating);
  }

  const auto count = obj.find("review_count");
  if (count == obj.end() || !count->is_number()) {
    throw MalformedRecord(line, "review_count must be a number");
  }
  if (count->is_number_float()) {
    const double c = count->get<double>();
    if (c != static_cast<double>(static_cast<std::int64_t>(c))) {
      throw MalformedRecord(line, "review_count must be an integer");
    }
    r.review_count = static_cast<std::int64_t>(c);
  } else {
    r.review_count = count->get<std::int64_t>();
  }
  if (r.review_count < 0) throw MalformedRecord(line, "negative review_count");

  const auto sub = obj.find("subcategory");
  if (sub == obj.end() || sub->is_null()) {
    r.subcategory = classify_subcategory(merge_product_text(r), lexicon);
  } else {
    const auto parsed = sub->is_string() ? parse_subcategory(sub->get<std::string>())
                                         : std::nullopt;
    if (!parsed) throw MalformedRecord(line, "unknown subcategory");
    r.subcategory = *parsed;
  }
  return r;
}

}  // namespace

CatalogTable load_catalog(std::istream& in, const AccessoryLexicon& lexicon) {
  std::vector<ProductRecord> records;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto record = parse_record(line, line_no, lexicon);
    if (!seen.insert(record.asin).second) throw DuplicateAsin(record.asin);
    records.push_back(std::move(record));
  }
  return CatalogTable(std::move(records));
}

CatalogTable load_catalog_file(const std::string& path, const AccessoryLexicon& lexicon) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog: " + path);
  return load_catalog(in, lexicon);
}

void save_catalog(const CatalogTable& catalog, std::ostream& out) {
  for (const auto& r : catalog.records()) {
    nlohmann::ordered_json obj;
    obj["asin"] = r.asin;
    obj["title"] = r.title;
    obj["description"] = r.description;
    obj["features"] = r.features;
    obj["tech_specs"] = r.tech_specs;
    obj["price"] = r.price ? nlohmann::ordered_json(*r.price) : nlohmann::ordered_json(nullptr);
    obj["average_rating"] = r.average_rating;
    obj["review_count"] = r.review_count;
    obj["subcategory"] = std::string(to_string(r.subcategory));
    out << obj.dump() << '\n';
  }
}

}  // namespace facetsearch
