#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "facetsearch/catalog.hpp"
#include "facetsearch/error.hpp"
#include "support.hpp"

using namespace facetsearch;

TEST(CleanText, StripsUrlsAndLowercases) {
  EXPECT_EQ(clean_text("Great CASE! Visit http://x.co now"), "great case! visit now");
}

TEST(CleanText, EmptyStaysEmpty) { EXPECT_EQ(clean_text(""), ""); }

TEST(CleanText, StripsTagsAndNonAscii) {
  EXPECT_EQ(clean_text("<b>Fast</b>   charger™"), "fast charger");
}

TEST(CleanText, DropsWwwTokensAndControlCharacters) {
  EXPECT_EQ(clean_text("see\twww.example.com\x01 for\n\nmore"), "see for more");
}

TEST(CleanText, TagsSeparateWords) { EXPECT_EQ(clean_text("dual<br>sim"), "dual sim"); }

TEST(CleanText, IdempotentAndAsciiOnlyOnRandomInput) {
  std::mt19937_64 g(11);
  const std::string alphabet = "abcXYZ <>/:.hwtps!\t\n\x7f\x03";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    const auto len = g() % 40;
    for (std::size_t i = 0; i < len; ++i) {
      const auto roll = g() % 12;
      if (roll == 0) {
        s += "http://";
      } else if (roll == 1) {
        s += "https://a.b";
      } else if (roll == 2) {
        s += static_cast<char>(0x80 + g() % 0x7f);  // high byte
      } else {
        s += alphabet[g() % alphabet.size()];
      }
    }
    const auto once = clean_text(s);
    EXPECT_EQ(clean_text(once), once) << s;
    for (const unsigned char c : once) ASSERT_LT(c, 128u);
    EXPECT_EQ(once.find("http://"), std::string::npos);
    EXPECT_EQ(once.find("https://"), std::string::npos);
    EXPECT_EQ(once.find('<'), std::string::npos);
    EXPECT_EQ(once.find('>'), std::string::npos);
  }
}

TEST(MergeProductText, SingleField) {
  ProductRecord r;
  r.title = "iphone case";
  EXPECT_EQ(merge_product_text(r), "iphone case");
}

TEST(MergeProductText, FieldOrder) {
  ProductRecord r;
  r.title = "A";
  r.description = "B";
  r.features = "C";
  r.tech_specs = "D";
  EXPECT_EQ(merge_product_text(r), "a b c d");
}

TEST(MergeProductText, CleansEachField) {
  ProductRecord r;
  r.title = "<i>Anker</i>";
  r.description = "4-Port USB";
  EXPECT_EQ(merge_product_text(r), "anker 4-port usb");
}

TEST(ClassifySubcategory, LexiconTerms) {
  EXPECT_EQ(classify_subcategory("usb wall charger"), Subcategory::CellPhoneAccessories);
  EXPECT_EQ(classify_subcategory("tempered glass screen protector"), Subcategory::CellPhoneAccessories);
  EXPECT_EQ(classify_subcategory("samsung galaxy a01 verizon"), Subcategory::CellPhones);
}

TEST(ClassifySubcategory, WholeWordsOnly) {
  EXPECT_EQ(classify_subcategory("showcase phone"), Subcategory::CellPhones);
  EXPECT_EQ(classify_subcategory("phone case"), Subcategory::CellPhoneAccessories);
}

TEST(ClassifySubcategory, ShadowPhrasesDoNotCount) {
  EXPECT_EQ(classify_subcategory("smartphone with good battery life"), Subcategory::CellPhones);
  EXPECT_EQ(classify_subcategory("spare battery for galaxy"), Subcategory::CellPhoneAccessories);
}

TEST(AccessoryLexicon, CustomLexicon) {
  const auto lex = AccessoryLexicon::parse("# test\nwidget\nsmart gizmo\n-widget free\n");
  EXPECT_TRUE(lex.matches("blue widget"));
  EXPECT_TRUE(lex.matches("a smart gizmo here"));
  EXPECT_FALSE(lex.matches("a smart phone gizmo"));
  EXPECT_FALSE(lex.matches("widget free design"));
  EXPECT_EQ(classify_subcategory("blue widget", lex), Subcategory::CellPhoneAccessories);
}

namespace {

std::string row(const std::string& asin, double rating, const std::string& extra = "") {
  return R"({"asin": ")" + asin + R"(", "title": "T )" + asin +
         R"(", "description": "", "features": "", "tech_specs": "", "price": 10.5, "average_rating": )" +
         std::to_string(rating) + R"(, "review_count": 3)" + extra + "}\n";
}

}  // namespace

TEST(LoadCatalog, AssignsIdsInInputOrder) {
  std::istringstream in(row("A", 4.0, R"(, "subcategory": "Cell Phones")") + row("B", 3.0) + "\n" + row("C", 5.0));
  const auto t = load_catalog(in);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].asin, "A");
  EXPECT_EQ(t[1].asin, "B");
  EXPECT_EQ(t[2].asin, "C");
  EXPECT_EQ(t.find("B"), ProductId{1});
  EXPECT_FALSE(t.find("Z").has_value());
}

TEST(LoadCatalog, DuplicateAsin) {
  std::istringstream in(row("B0X", 4.0) + row("B0X", 3.0));
  try {
    load_catalog(in);
    FAIL() << "expected DuplicateAsin";
  } catch (const DuplicateAsin& e) {
    EXPECT_EQ(e.asin(), "B0X");
  }
}

TEST(LoadCatalog, OutOfRangeRating) {
  std::istringstream in(row("A", 7.2));
  EXPECT_THROW(load_catalog(in), OutOfRangeRating);
}

TEST(LoadCatalog, MalformedRowsReportLine) {
  std::istringstream in(row("A", 4.0) + "{not json\n");
  try {
    load_catalog(in);
    FAIL() << "expected MalformedRecord";
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCatalog, UnknownKeyRejected) {
  std::istringstream in(row("A", 4.0, R"(, "colour": "red")"));
  EXPECT_THROW(load_catalog(in), MalformedRecord);
}

TEST(LoadCatalog, MissingTextAndPriceDefaults) {
  std::istringstream in(R"({"asin": "A", "title": "Phone Case", "average_rating": 4.1, "review_count": 0})"
                        "\n");
  const auto t = load_catalog(in);
  EXPECT_EQ(t[0].description, "");
  EXPECT_FALSE(t[0].price.has_value());
  EXPECT_EQ(t[0].subcategory, Subcategory::CellPhoneAccessories);  // classified from "case"
}

TEST(LoadCatalog, NullPriceIsAbsent) {
  std::istringstream in(R"({"asin": "A", "title": "x", "price": null, "average_rating": 1, "review_count": 0})"
                        "\n");
  EXPECT_FALSE(load_catalog(in)[0].price.has_value());
}

TEST(LoadCatalog, SaveRoundTrip) {
  const auto t = load_catalog_file(fstest::data_path("sample/catalog.jsonl"));
  ASSERT_EQ(t.size(), 500u);
  std::stringstream buf;
  save_catalog(t, buf);
  const auto again = load_catalog(buf);
  ASSERT_EQ(again.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(again[static_cast<ProductId>(i)], t[static_cast<ProductId>(i)]);
  }
}

TEST(CatalogTable, LookupByIdIsIdentityOnOrder) {
  const auto t = fstest::random_catalog(50, 3);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t.find(t[static_cast<ProductId>(i)].asin), static_cast<ProductId>(i));
  }
  EXPECT_THROW(t.at(50), Error);
}
