#include "facetsearch/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "rng.hpp"

namespace facetsearch {

namespace {

constexpr char kIndexMagic[] = "FSIVFIDX";
constexpr std::uint32_t kIndexVersion = 1;

// Strict "ranks before" for hits: higher score, then lower id.
bool ranks_before(const SearchHit& a, const SearchHit& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

std::span<const float> column(const EmbeddingMatrix& m, Eigen::Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

std::span<const float> as_span(const Embedding& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Bounded top-k collector; the heap top is the current worst kept hit.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}

  void offer(ProductId id, float score) {
    const SearchHit hit{id, score};
    if (heap_.size() < k_) {
      heap_.push(hit);
    } else if (ranks_before(hit, heap_.top())) {
      heap_.pop();
      heap_.push(hit);
    }
  }

  QueryResult take() {
    QueryResult r;
    r.hits.reserve(heap_.size());
    while (!heap_.empty()) {
      r.hits.push_back(heap_.top());
      heap_.pop();
    }
    std::sort(r.hits.begin(), r.hits.end(), ranks_before);
    return r;
  }

 private:
  std::size_t k_;
  std::priority_queue<SearchHit, std::vector<SearchHit>, decltype(&ranks_before)> heap_{ranks_before};
};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t best_centroid_ip(const Centroids& c, std::span<const float> v) {
  std::size_t best = 0;
  float best_score = -std::numeric_limits<float>::infinity();
  for (std::size_t j = 0; j < c.nlist(); ++j) {
    const float s = inner_product(column(c.vectors, static_cast<Eigen::Index>(j)), v);
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------

IdSet::IdSet(std::vector<ProductId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool IdSet::contains(ProductId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

std::vector<ProductId> QueryResult::ids() const {
  std::vector<ProductId> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.id);
  return out;
}

std::size_t default_nlist(std::size_t n) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(root, 1, 4096);
}

std::size_t default_nprobe(std::size_t nlist) { return std::max<std::size_t>(1, (nlist + 7) / 8); }

EmbeddingMatrix training_sample(const EmbeddingMatrix& vectors, std::size_t nlist,
                                std::uint64_t seed, std::size_t max_per_list) {
  const auto n = static_cast<std::size_t>(vectors.cols());
  const auto want = std::max(nlist, nlist * max_per_list);
  if (n <= want) return vectors;
  std::vector<Eigen::Index> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Eigen::Index>(i);
  detail::Rng rng(seed);
  rng.shuffle(order);
  order.resize(want);
  std::sort(order.begin(), order.end());
  EmbeddingMatrix out(vectors.rows(), static_cast<Eigen::Index>(want));
  for (std::size_t i = 0; i < want; ++i) out.col(static_cast<Eigen::Index>(i)) = vectors.col(order[i]);
  return out;
}

// ---------------------------------------------------------------------------
// k-means

Centroids train_centroids(const EmbeddingMatrix& sample, std::size_t nlist, std::uint64_t seed,
                          int max_iters) {
  const auto n = static_cast<std::size_t>(sample.cols());
  const auto d = sample.rows();
  if (nlist < 1) throw Error("nlist must be >= 1");
  if (n < nlist) throw TooFewVectors(n, nlist);
  if (!sample.allFinite()) throw Error("k-means sample has non-finite entries");

  const Matrix<double> x = sample.cast<double>();
  const Vector<double> x_sq = x.colwise().squaredNorm().transpose();
  detail::Rng rng(seed);

  // k-means++ seeding.
  Matrix<double> c(d, static_cast<Eigen::Index>(nlist));
  {
    Vector<double> nearest(static_cast<Eigen::Index>(n));
    auto take = [&](std::size_t j, std::size_t point) {
      c.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(point));
      const Vector<double> dist =
          (x.colwise() - x.col(static_cast<Eigen::Index>(point))).colwise().squaredNorm().transpose();
      nearest = j == 0 ? dist : nearest.cwiseMin(dist).eval();
    };
    take(0, rng.below(n));
    for (std::size_t j = 1; j < nlist; ++j) {
      const double total = nearest.sum();
      std::size_t pick = n - 1;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += nearest[static_cast<Eigen::Index>(i)];
          if (acc > r) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.below(n);
      }
      take(j, pick);
    }
  }

  std::vector<std::size_t> assign(n, 0), previous(n, std::numeric_limits<std::size_t>::max());
  Vector<double> dist(static_cast<Eigen::Index>(n));
  for (int iter = 0;; ++iter) {
    // Squared Euclidean distance via |x|^2 + |c|^2 - 2 c.x
    const Matrix<double> dots = c.transpose() * x;
    const Vector<double> c_sq = c.colwise().squaredNorm().transpose();
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nlist; ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        const double dd = x_sq[col] + c_sq[row] - 2.0 * dots(row, col);
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      assign[i] = best;
      dist[col] = std::max(best_d, 0.0);
    }
    if (assign == previous || iter >= max_iters) break;
    previous = assign;

    Matrix<double> sums = Matrix<double>::Zero(d, static_cast<Eigen::Index>(nlist));
    std::vector<std::size_t> counts(nlist, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.col(static_cast<Eigen::Index>(assign[i])) += x.col(static_cast<Eigen::Index>(i));
      ++counts[assign[i]];
    }
    for (std::size_t j = 0; j < nlist; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      if (counts[j] > 0) {
        c.col(col) = sums.col(col) / static_cast<double>(counts[j]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      Eigen::Index far = 0;
      dist.maxCoeff(&far);
      c.col(col) = x.col(far);
      dist[far] = -1.0;
      previous.assign(n, std::numeric_limits<std::size_t>::max());
    }
  }

  return {c.cast<float>()};
}

// ---------------------------------------------------------------------------
// Index

IvfIndex::IvfIndex(Centroids centroids, std::vector<InvertedList> lists, std::uint32_t scheme_version)
    : centroids_(std::move(centroids)), lists_(std::move(lists)), scheme_(scheme_version) {
  if (centroids_.nlist() < 1) throw Error("index needs at least one centroid");
  if (lists_.size() != centroids_.nlist()) throw Error("one inverted list per centroid required");
  std::unordered_set<ProductId> seen;
  for (const auto& list : lists_) {
    if (list.vectors.rows() != centroids_.dim() ||
        static_cast<std::size_t>(list.vectors.cols()) != list.ids.size()) {
      throw DimensionMismatch(static_cast<std::size_t>(centroids_.dim()),
                              static_cast<std::size_t>(list.vectors.rows()));
    }
    for (const auto id : list.ids) {
      if (!seen.insert(id).second) throw DuplicateId(id);
    }
    total_ += list.ids.size();
  }
}

IvfIndex build_index(const EmbeddingMatrix& vectors, std::span<const ProductId> ids,
                     Centroids centroids, std::uint32_t scheme_version) {
  if (static_cast<std::size_t>(vectors.cols()) != ids.size()) {
    throw DimensionMismatch(ids.size(), static_cast<std::size_t>(vectors.cols()));
  }
  if (vectors.cols() > 0 && vectors.rows() != centroids.dim()) {
    throw DimensionMismatch(static_cast<std::size_t>(centroids.dim()), static_cast<std::size_t>(vectors.rows()));
  }
  std::unordered_set<ProductId> seen;
  for (const auto id : ids) {
    if (!seen.insert(id).second) throw DuplicateId(id);
  }

  const auto nlist = centroids.nlist();
  std::vector<std::vector<Eigen::Index>> members(nlist);
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    members[best_centroid_ip(centroids, column(vectors, j))].push_back(j);
  }

  std::vector<InvertedList> lists(nlist);
  for (std::size_t l = 0; l < nlist; ++l) {
    auto& list = lists[l];
    list.vectors.resize(centroids.dim(), static_cast<Eigen::Index>(members[l].size()));
    list.ids.reserve(members[l].size());
    for (std::size_t i = 0; i < members[l].size(); ++i) {
      list.ids.push_back(ids[static_cast<std::size_t>(members[l][i])]);
      list.vectors.col(static_cast<Eigen::Index>(i)) = vectors.col(members[l][i]);
    }
  }
  return IvfIndex(std::move(centroids), std::move(lists), scheme_version);
}

QueryResult search(const IvfIndex& index, const SearchRequest& request) {
  if (request.query.size() != index.dim()) {
    throw DimensionMismatch(static_cast<std::size_t>(index.dim()), static_cast<std::size_t>(request.query.size()));
  }
  if (request.nprobe < 1 || request.nprobe > index.nlist()) {
    throw NprobeOutOfRange(request.nprobe, index.nlist());
  }
  if (request.k < 1) throw Error("k must be >= 1");

  const auto q = as_span(request.query);
  std::vector<SearchHit> probes(index.nlist());
  for (std::size_t j = 0; j < index.nlist(); ++j) {
    probes[j] = {static_cast<ProductId>(j),
                 inner_product(column(index.centroids().vectors, static_cast<Eigen::Index>(j)), q)};
  }
  std::partial_sort(probes.begin(), probes.begin() + static_cast<std::ptrdiff_t>(request.nprobe),
                    probes.end(), ranks_before);

  TopK top(request.k);
  for (std::size_t p = 0; p < request.nprobe; ++p) {
    const auto& list = index.lists()[static_cast<std::size_t>(probes[p].id)];
    for (std::size_t i = 0; i < list.ids.size(); ++i) {
      const auto id = list.ids[i];
      if (request.allowed_ids != nullptr && !request.allowed_ids->contains(id)) continue;
      top.offer(id, inner_product(column(list.vectors, static_cast<Eigen::Index>(i)), q));
    }
  }
  return top.take();
}

QueryResult exact_search(const EmbeddingMatrix& vectors, std::span<const ProductId> ids,
                         const Embedding& query, std::size_t k, const IdSet* allowed_ids) {
  if (static_cast<std::size_t>(vectors.cols()) != ids.size()) {
    throw DimensionMismatch(ids.size(), static_cast<std::size_t>(vectors.cols()));
  }
  if (vectors.cols() > 0 && query.size() != vectors.rows()) {
    throw DimensionMismatch(static_cast<std::size_t>(vectors.rows()), static_cast<std::size_t>(query.size()));
  }
  if (k < 1) throw Error("k must be >= 1");
  TopK top(k);
  const auto q = as_span(query);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (allowed_ids != nullptr && !allowed_ids->contains(ids[i])) continue;
    top.offer(ids[i], inner_product(column(vectors, static_cast<Eigen::Index>(i)), q));
  }
  return top.take();
}

// ---------------------------------------------------------------------------
// Persistence

void save_index(const IvfIndex& index, std::ostream& out) {
  std::ostringstream buf(std::ios::binary);
  detail::BinaryWriter w(buf);
  w.bytes({kIndexMagic, 8});
  w.u32(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(index.dim()));
  w.u32(static_cast<std::uint32_t>(index.nlist()));
  w.u32(index.scheme_version());
  w.u64(index.size());
  const auto& c = index.centroids().vectors;
  w.f32s(std::span<const float>(c.data(), static_cast<std::size_t>(c.size())));
  for (const auto& list : index.lists()) {
    w.u64(list.ids.size());
    for (const auto id : list.ids) w.i64(id);
    w.f32s(std::span<const float>(list.vectors.data(), static_cast<std::size_t>(list.vectors.size())));
  }
  const auto payload = buf.str();
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  detail::BinaryWriter(out).u64(fnv1a(payload));
  if (!out) throw Error("write failed: index");
}

IvfIndex load_index(std::istream& in) {
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::string_view(bytes).substr(0, 8) != std::string_view(kIndexMagic, 8)) {
    throw CorruptFile("index: bad magic");
  }
  if (bytes.size() < 8 + 4 + 8) throw CorruptFile("index: truncated");
  const std::string_view payload(bytes.data(), bytes.size() - 8);
  {
    std::istringstream tail(bytes.substr(bytes.size() - 8), std::ios::binary);
    if (detail::BinaryReader(tail, "index").u64() != fnv1a(payload)) {
      // Read the version first so files from a newer writer get a clearer error.
      std::istringstream head(bytes.substr(8, 4), std::ios::binary);
      const auto version = detail::BinaryReader(head, "index").u32();
      if (version != kIndexVersion) throw VersionMismatch("index", kIndexVersion, version);
      throw CorruptFile("index: checksum mismatch (truncated or modified)");
    }
  }

  std::istringstream body(std::string(payload.substr(8)), std::ios::binary);
  detail::BinaryReader r(body, "index");
  if (const auto v = r.u32(); v != kIndexVersion) throw VersionMismatch("index", kIndexVersion, v);
  const auto d = r.u32();
  const auto nlist = r.u32();
  const auto scheme = r.u32();
  const auto total = r.u64();
  if (d < 1 || d > (1u << 16) || nlist < 1 || nlist > (1u << 20)) {
    throw CorruptFile("index: implausible header");
  }

  auto read_floats = [&](EmbeddingMatrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const float f = r.f32();
      if (!std::isfinite(f)) throw CorruptFile("index: non-finite value");
      m.data()[i] = f;
    }
  };

  Centroids centroids{EmbeddingMatrix(d, nlist)};
  read_floats(centroids.vectors);
  std::vector<InvertedList> lists(nlist);
  std::uint64_t seen = 0;
  for (auto& list : lists) {
    const auto count = r.u64();
    if (count > total - seen) throw CorruptFile("index: list sizes exceed total count");
    seen += count;
    list.ids.resize(count);
    for (auto& id : list.ids) id = r.i64();
    list.vectors.resize(d, static_cast<Eigen::Index>(count));
    read_floats(list.vectors);
  }
  if (seen != total) throw CorruptFile("index: list sizes do not sum to total count");
  if (!r.at_end()) throw CorruptFile("index: trailing bytes");
  try {
    return IvfIndex(std::move(centroids), std::move(lists), scheme);
  } catch (const DuplicateId& e) {
    throw CorruptFile(std::string("index: ") + e.what());
  }
}

void save_index_file(const IvfIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write index: " + path);
  save_index(index, out);
}

IvfIndex load_index_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index: " + path);
  return load_index(in);
}

}  // namespace facetsearch
