#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "facetsearch/catalog.hpp"
#include "facetsearch/embedder.hpp"

namespace facetsearch {

/// Sorted set of product IDs used to restrict a search.
class IdSet {
 public:
  IdSet() = default;
  explicit IdSet(std::vector<ProductId> ids);

  bool contains(ProductId id) const;
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<ProductId>& ids() const { return ids_; }

  friend bool operator==(const IdSet&, const IdSet&) = default;

 private:
  std::vector<ProductId> ids_;
};

struct SearchHit {
  ProductId id = 0;
  float score = 0.f;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Hits ordered by descending score, ties by ascending id.
struct QueryResult {
  std::vector<SearchHit> hits;

  std::vector<ProductId> ids() const;
  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

struct SearchRequest {
  Embedding query;
  std::size_t k = 10;
  std::size_t nprobe = 1;
  const IdSet* allowed_ids = nullptr;  // null: no restriction
};

/// Coarse quantizer, one centroid per column.
struct Centroids {
  EmbeddingMatrix vectors;

  std::size_t nlist() const { return static_cast<std::size_t>(vectors.cols()); }
  int dim() const { return static_cast<int>(vectors.rows()); }
};

inline constexpr int kDefaultKmeansIters = 25;

/// k-means (k-means++ seeding, Euclidean assignment) over the columns of
/// `sample`. An emptied cluster is re-seeded with the point farthest from its
/// centroid. Stops after `max_iters` updates or once assignments repeat.
Centroids train_centroids(const EmbeddingMatrix& sample, std::size_t nlist, std::uint64_t seed,
                          int max_iters = kDefaultKmeansIters);

/// ceil(sqrt(n)) clamped to [1, 4096].
std::size_t default_nlist(std::size_t n);
/// ceil(nlist / 8).
std::size_t default_nprobe(std::size_t nlist);

/// Seeded random subset of at most `max_per_list * nlist` columns.
EmbeddingMatrix training_sample(const EmbeddingMatrix& vectors, std::size_t nlist,
                                std::uint64_t seed, std::size_t max_per_list = 256);

struct InvertedList {
  std::vector<ProductId> ids;
  EmbeddingMatrix vectors;  // d x ids.size()
};

/// IVF-Flat index over inner product. Immutable once built.
class IvfIndex {
 public:
  IvfIndex(Centroids centroids, std::vector<InvertedList> lists, std::uint32_t scheme_version);

  int dim() const { return centroids_.dim(); }
  std::size_t nlist() const { return centroids_.nlist(); }
  std::size_t size() const { return total_; }
  std::uint32_t scheme_version() const { return scheme_; }
  const Centroids& centroids() const { return centroids_; }
  const std::vector<InvertedList>& lists() const { return lists_; }

 private:
  Centroids centroids_;
  std::vector<InvertedList> lists_;
  std::size_t total_ = 0;
  std::uint32_t scheme_ = kHashSchemeVersion;
};

/// Routes each column of `vectors` to the centroid with the largest inner
/// product (lowest centroid index on ties).
IvfIndex build_index(const EmbeddingMatrix& vectors, std::span<const ProductId> ids,
                     Centroids centroids, std::uint32_t scheme_version = kHashSchemeVersion);

/// Probes the `nprobe` best centroids by inner product and scans their lists,
/// skipping ids outside `allowed_ids`. May return fewer than k hits.
QueryResult search(const IvfIndex& index, const SearchRequest& request);

/// Brute-force scan with the same scoring and ordering as search().
QueryResult exact_search(const EmbeddingMatrix& vectors, std::span<const ProductId> ids,
                         const Embedding& query, std::size_t k,
                         const IdSet* allowed_ids = nullptr);

/// Binary layout, little-endian: magic "FSIVFIDX", u32 version, u32 d,
/// u32 nlist, u32 scheme_version, u64 total_count, nlist*d f32 centroids,
/// then per list u64 count, count*i64 ids, count*d f32 vectors; trailer u64
/// FNV-1a checksum of everything before it.
void save_index(const IvfIndex& index, std::ostream& out);
IvfIndex load_index(std::istream& in);
void save_index_file(const IvfIndex& index, const std::string& path);
IvfIndex load_index_file(const std::string& path);

}  // namespace facetsearch
