#pragma once

// Helpers shared by the test binaries. Nothing here calls into the library's
// own random or scoring code, so it can serve as an independent oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "facetsearch/catalog.hpp"
#include "facetsearch/embedder.hpp"
#include "facetsearch/queryfilter.hpp"

namespace fstest {

inline std::string data_path(const std::string& rel) { return std::string(FACETSEARCH_DATA_DIR) + "/" + rel; }

inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform01(g));
}

/// d x n matrix of unit columns drawn uniformly on the sphere.
inline facetsearch::EmbeddingMatrix random_unit_vectors(int d, int n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  facetsearch::EmbeddingMatrix m(d, n);
  for (int j = 0; j < n; ++j) {
    double norm = 0.0;
    std::vector<double> v(static_cast<std::size_t>(d));
    for (auto& x : v) {
      x = gaussian(g);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < d; ++i) m(i, j) = static_cast<float>(v[static_cast<std::size_t>(i)] / norm);
  }
  return m;
}

/// Mixture of `topics` random directions; each column is a topic center plus
/// isotropic noise of `noise` per coordinate, normalized.
inline facetsearch::EmbeddingMatrix clustered_unit_vectors(int d, int n, int topics, double noise,
                                                           std::uint64_t seed) {
  const auto centers = random_unit_vectors(d, topics, seed ^ 0x5eedULL);
  std::mt19937_64 g(seed);
  facetsearch::EmbeddingMatrix m(d, n);
  for (int j = 0; j < n; ++j) {
    const auto t = static_cast<int>(g() % static_cast<std::uint64_t>(topics));
    double norm = 0.0;
    std::vector<double> v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      v[static_cast<std::size_t>(i)] = centers(i, t) + noise * gaussian(g);
      norm += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < d; ++i) m(i, j) = static_cast<float>(v[static_cast<std::size_t>(i)] / norm);
  }
  return m;
}

inline std::vector<facetsearch::ProductId> iota_ids(std::size_t n) {
  std::vector<facetsearch::ProductId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<facetsearch::ProductId>(i);
  return ids;
}

/// Written separately from ResolvedFilters::admits: checks one record against
/// resolved bounds field by field.
inline bool satisfies(const facetsearch::ProductRecord& r, const facetsearch::ResolvedFilters& f) {
  auto ok_min = [](double x, const std::optional<facetsearch::Bound>& b) {
    return !b || (b->inclusive ? x >= b->value : x > b->value);
  };
  auto ok_max = [](double x, const std::optional<facetsearch::Bound>& b) {
    return !b || (b->inclusive ? x <= b->value : x < b->value);
  };
  if (f.subcategory && *f.subcategory != r.subcategory) return false;
  if (f.price_min || f.price_max) {
    if (!r.price) return false;
    if (!ok_min(*r.price, f.price_min) || !ok_max(*r.price, f.price_max)) return false;
  }
  const auto reviews = static_cast<double>(r.review_count);
  if (!ok_min(reviews, f.review_count_min) || !ok_max(reviews, f.review_count_max)) return false;
  if (!ok_min(r.average_rating, f.average_rating_min) || !ok_max(r.average_rating, f.average_rating_max)) {
    return false;
  }
  return true;
}

/// Catalog of `n` records with prices, ratings and review counts spread over
/// the threshold boundaries, including exact boundary values.
inline facetsearch::CatalogTable random_catalog(std::size_t n, std::uint64_t seed) {
  static const double kPrices[] = {0, 5, 14.99, 15, 15.01, 40, 99.5, 100, 250, 300, 350, 999};
  static const double kRatings[] = {0, 1.5, 3.9, 4.0, 4.2, 4.5, 4.8, 5.0};
  static const std::int64_t kReviews[] = {0, 50, 99, 100, 101, 999, 1000, 5000};
  std::mt19937_64 g(seed);
  std::vector<facetsearch::ProductRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    facetsearch::ProductRecord r;
    r.asin = "T" + std::to_string(seed % 1000) + "-" + std::to_string(i);
    r.title = "item " + std::to_string(i);
    const auto roll = g() % 10;
    if (roll == 0) {
      r.price = std::nullopt;
    } else if (roll < 5) {
      r.price = kPrices[g() % std::size(kPrices)];
    } else {
      r.price = std::round(uniform01(g) * 60000.0) / 100.0;
    }
    r.average_rating = (g() % 2 == 0) ? kRatings[g() % std::size(kRatings)] : std::round(uniform01(g) * 50.0) / 10.0;
    r.review_count = (g() % 2 == 0) ? kReviews[g() % std::size(kReviews)] : static_cast<std::int64_t>(g() % 20000);
    r.subcategory = (g() % 2 == 0) ? facetsearch::Subcategory::CellPhones
                                   : facetsearch::Subcategory::CellPhoneAccessories;
    records.push_back(std::move(r));
  }
  return facetsearch::CatalogTable(std::move(records));
}

/// Random structured filters over numbers and levels, always consistent
/// after resolution is attempted by the caller.
inline facetsearch::StructuredFilters random_filters(std::mt19937_64& g) {
  using facetsearch::Level;
  facetsearch::StructuredFilters f;
  auto pick = [&](double lo, double hi, bool allow_level) -> facetsearch::BoundValue {
    const auto roll = g() % 4;
    if (roll == 0 || roll == 1) return std::monostate{};
    if (roll == 2 && allow_level) return static_cast<Level>(g() % 3);
    return std::round((lo + uniform01(g) * (hi - lo)) * 10.0) / 10.0;
  };
  f.price_min = pick(0, 400, true);
  f.price_max = pick(0, 800, true);
  f.review_count_min = pick(0, 3000, true);
  f.review_count_max = pick(0, 8000, true);
  f.average_rating_min = pick(0, 5, true);
  f.average_rating_max = pick(0, 5, true);
  const auto sub = g() % 3;
  if (sub == 1) f.subcategory = facetsearch::Subcategory::CellPhones;
  if (sub == 2) f.subcategory = facetsearch::Subcategory::CellPhoneAccessories;
  return f;
}

}  // namespace fstest
