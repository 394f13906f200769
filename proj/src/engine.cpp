#include "facetsearch/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>

#include <json.hpp>

#include "facetsearch/error.hpp"

namespace facetsearch {

QueryOutcome run_query(std::string_view text, std::size_t k, const Pipeline& p) {
  if (p.index == nullptr || p.catalog == nullptr) throw Error("pipeline needs an index and a catalog");
  if (p.index->scheme_version() != kHashSchemeVersion) {
    throw VersionMismatch("index embedding scheme", kHashSchemeVersion, p.index->scheme_version());
  }
  if (p.adapter != nullptr && p.adapter->dim() != p.index->dim()) {
    throw DimensionMismatch(static_cast<std::size_t>(p.index->dim()), static_cast<std::size_t>(p.adapter->dim()));
  }

  QueryOutcome out;
  out.clean_query = clean_text(text);

  std::optional<IdSet> allowed;
  if (p.use_filters) {
    out.filters = p.extractor != nullptr ? p.extractor->extract(out.clean_query)
                                         : extract_filters(out.clean_query);
    out.resolved = resolve_thresholds(out.filters, *p.thresholds, Subcategory::CellPhones);
    allowed = preselect_ids(out.resolved, *p.catalog);
    if (allowed->empty()) return out;
  }

  Embedding q = hash_embed(out.clean_query, p.index->dim());
  if (p.adapter != nullptr) q = adapt(q, *p.adapter);

  SearchRequest req;
  req.query = std::move(q);
  req.k = k;
  req.nprobe = p.nprobe;
  req.allowed_ids = allowed ? &*allowed : nullptr;
  out.result = search(*p.index, req);
  return out;
}

double precision_at_k(const QueryResult& result, const IdSet& relevant, std::size_t k) {
  if (k < 1) throw Error("k must be >= 1");
  const auto n = std::min(k, result.hits.size());
  std::size_t found = 0;
  for (std::size_t i = 0; i < n; ++i) found += relevant.contains(result.hits[i].id) ? 1 : 0;
  return static_cast<double>(found) / static_cast<double>(k);
}

double recall_at_k(const QueryResult& result, const IdSet& relevant, std::size_t k) {
  if (relevant.empty()) throw EmptyRelevantSet();
  if (k < 1) throw Error("k must be >= 1");
  const auto n = std::min(k, result.hits.size());
  std::size_t found = 0;
  for (std::size_t i = 0; i < n; ++i) found += relevant.contains(result.hits[i].id) ? 1 : 0;
  return static_cast<double>(found) / static_cast<double>(relevant.size());
}

std::vector<Judgment> load_judgments(std::istream& in) {
  std::vector<Judgment> out;
  std::map<std::string, std::size_t> position;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    for (;;) {
      const auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() < 2 || cols[0].empty()) throw MalformedRecord(line_no, "expected query<TAB>asin...");
    auto [it, inserted] = position.emplace(cols[0], out.size());
    if (inserted) out.push_back({cols[0], {}});
    auto& asins = out[it->second].relevant_asins;
    for (std::size_t c = 1; c < cols.size(); ++c) {
      if (cols[c].empty()) continue;
      if (std::find(asins.begin(), asins.end(), cols[c]) == asins.end()) asins.push_back(cols[c]);
    }
    if (asins.empty()) throw MalformedRecord(line_no, "no relevant asins");
  }
  return out;
}

std::vector<Judgment> load_judgments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open judgments: " + path);
  return load_judgments(in);
}

MetricsReport run_benchmark(const std::vector<Judgment>& judgments, std::vector<std::size_t> ks,
                            const Pipeline& pipeline) {
  if (ks.empty()) throw Error("at least one k is required");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) throw Error("k must be >= 1");

  // Resolve every asin up front so a bad judgments file fails before any search.
  std::vector<IdSet> relevant;
  relevant.reserve(judgments.size());
  for (const auto& j : judgments) {
    std::vector<ProductId> ids;
    for (const auto& asin : j.relevant_asins) {
      const auto id = pipeline.catalog->find(asin);
      if (!id) throw MissingAsin(asin);
      ids.push_back(*id);
    }
    if (ids.empty()) throw EmptyRelevantSet();
    relevant.emplace_back(std::move(ids));
  }

  MetricsReport report;
  report.ks = ks;
  for (const auto k : ks) {
    report.mean_precision[k] = 0.0;
    report.mean_recall[k] = 0.0;
  }
  for (std::size_t i = 0; i < judgments.size(); ++i) {
    const auto outcome = run_query(judgments[i].query, ks.back(), pipeline);
    QueryMetrics m;
    m.query = judgments[i].query;
    m.retrieved = outcome.result.ids();
    m.relevant_count = relevant[i].size();
    for (const auto k : ks) {
      m.precision[k] = precision_at_k(outcome.result, relevant[i], k);
      m.recall[k] = recall_at_k(outcome.result, relevant[i], k);
      report.mean_precision[k] += m.precision[k];
      report.mean_recall[k] += m.recall[k];
    }
    report.per_query.push_back(std::move(m));
  }
  if (!judgments.empty()) {
    const auto n = static_cast<double>(judgments.size());
    for (const auto k : ks) {
      report.mean_precision[k] /= n;
      report.mean_recall[k] /= n;
    }
  }
  return report;
}

std::string MetricsReport::to_table() const {
  std::string out = "   k  Precision@k  Recall@k\n";
  char line[64];
  for (const auto k : ks) {
    std::snprintf(line, sizeof line, "%4zu  %11.4f  %8.4f\n", k, mean_precision.at(k), mean_recall.at(k));
    out += line;
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["queries"] = per_query.size();
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto k : ks) {
    j["rows"].push_back({{"k", k}, {"precision", mean_precision.at(k)}, {"recall", mean_recall.at(k)}});
  }
  j["per_query"] = nlohmann::ordered_json::array();
  for (const auto& q : per_query) {
    nlohmann::ordered_json row;
    row["query"] = q.query;
    row["relevant"] = q.relevant_count;
    row["retrieved"] = q.retrieved;
    for (const auto k : ks) {
      row["precision@" + std::to_string(k)] = q.precision.at(k);
      row["recall@" + std::to_string(k)] = q.recall.at(k);
    }
    j["per_query"].push_back(std::move(row));
  }
  return j.dump(2);
}

}  // namespace facetsearch
