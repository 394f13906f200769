#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "facetsearch/catalog.hpp"
#include "facetsearch/embedder.hpp"
#include "facetsearch/index.hpp"
#include "facetsearch/queryfilter.hpp"

namespace facetsearch {

/// Everything a query needs. The index and catalog must share the ID space.
struct Pipeline {
  const IvfIndex* index = nullptr;
  const CatalogTable* catalog = nullptr;
  const AdapterParams* adapter = nullptr;  // null: identity
  const ThresholdTable* thresholds = &ThresholdTable::bundled();
  const FilterExtractor* extractor = nullptr;  // null: bundled rule extractor
  std::size_t nprobe = 1;
  bool use_filters = true;
};

struct QueryOutcome {
  std::string clean_query;
  StructuredFilters filters;  // as extracted; empty when filters are off
  ResolvedFilters resolved;
  QueryResult result;
};

/// clean -> extract -> resolve -> preselect -> embed + adapt -> filtered
/// search. An empty preselection yields an empty result.
QueryOutcome run_query(std::string_view text, std::size_t k, const Pipeline& pipeline);

/// Hits among the first min(k, |hits|) that are relevant, divided by k.
double precision_at_k(const QueryResult& result, const IdSet& relevant, std::size_t k);
/// Hits among the first k that are relevant, divided by |relevant|.
double recall_at_k(const QueryResult& result, const IdSet& relevant, std::size_t k);

struct Judgment {
  std::string query;
  std::vector<std::string> relevant_asins;
};

/// Judgments file: "query<TAB>asin<TAB>asin..." per line. Repeated queries
/// merge their asins.
std::vector<Judgment> load_judgments(std::istream& in);
std::vector<Judgment> load_judgments_file(const std::string& path);

struct QueryMetrics {
  std::string query;
  std::vector<ProductId> retrieved;
  std::size_t relevant_count = 0;
  std::map<std::size_t, double> precision;  // by k
  std::map<std::size_t, double> recall;
};

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> mean_precision;
  std::map<std::size_t, double> mean_recall;
  std::vector<QueryMetrics> per_query;

  /// Fixed-width table: k, Precision@k, Recall@k.
  std::string to_table() const;
  /// JSON: {"queries": n, "rows": [{"k":..,"precision":..,"recall":..}], "per_query": [...]}
  std::string to_json() const;
};

/// Runs every judged query with depth max(ks) and macro-averages P@k and R@k.
MetricsReport run_benchmark(const std::vector<Judgment>& judgments, std::vector<std::size_t> ks,
                            const Pipeline& pipeline);

}  // namespace facetsearch
