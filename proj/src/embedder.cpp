#include "facetsearch/embedder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "binary_io.hpp"

namespace facetsearch {

namespace {

constexpr char kAdapterMagic[] = "FSAD";
constexpr char kVectorMagic[] = "FSVE";
constexpr std::uint32_t kAdapterVersion = 1;

void add_feature(Vector<double>& acc, std::string_view feature, double weight) {
  const auto h = feature_hash(feature);
  const auto slot = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(acc.size()));
  acc[slot] += (h >> 63) ? -weight : weight;
}

}  // namespace

std::uint64_t feature_hash(std::string_view feature) {
  // FNV-1a followed by the splitmix64 finalizer.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : feature) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

Embedding hash_embed(std::string_view clean_text, int d) {
  if (d < 8) throw Error("embedding dimension must be >= 8, got " + std::to_string(d));

  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < clean_text.size()) {
    while (pos < clean_text.size() && std::isspace(static_cast<unsigned char>(clean_text[pos]))) ++pos;
    auto end = pos;
    while (end < clean_text.size() && !std::isspace(static_cast<unsigned char>(clean_text[end]))) ++end;
    if (end > pos) tokens.push_back(clean_text.substr(pos, end - pos));
    pos = end;
  }

  Vector<double> acc = Vector<double>::Zero(d);
  std::string feature;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    feature.assign("u:").append(tokens[i]);
    add_feature(acc, feature, 1.0);
    if (i + 1 < tokens.size()) {
      feature.assign("b:").append(tokens[i]).append(" ").append(tokens[i + 1]);
      add_feature(acc, feature, 0.5);
    }
  }

  const double norm = acc.norm();
  if (norm == 0.0) return Embedding::Unit(d, 0);
  return (acc / norm).cast<float>();
}

float inner_product(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  // Four interleaved partial sums, combined in a fixed order.
  float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void adapt_columns(EmbeddingMatrix& vectors, const AdapterParams& p) {
  if (p.dim() != vectors.rows()) {
    throw DimensionMismatch(static_cast<std::size_t>(p.dim()), static_cast<std::size_t>(vectors.rows()));
  }
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    vectors.col(j) = adapt(p.matrix, vectors.col(j));
  }
}

void save_adapter(const AdapterParams& p, std::ostream& out) {
  detail::BinaryWriter w(out);
  w.bytes({kAdapterMagic, 4});
  w.u32(kAdapterVersion);
  w.u32(static_cast<std::uint32_t>(p.dim()));
  for (Eigen::Index r = 0; r < p.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.matrix.cols(); ++c) w.f32(p.matrix(r, c));
  }
  w.check("adapter");
}

AdapterParams load_adapter(std::istream& in) {
  detail::BinaryReader r(in, "adapter");
  if (r.bytes(4) != std::string_view(kAdapterMagic, 4)) throw CorruptFile("adapter: bad magic");
  if (const auto v = r.u32(); v != kAdapterVersion) throw VersionMismatch("adapter", kAdapterVersion, v);
  const auto d = r.u32();
  if (d < 1 || d > (1u << 16)) throw CorruptFile("adapter: implausible dimension");
  AdapterParams p{Matrix<float>(d, d)};
  for (std::uint32_t row = 0; row < d; ++row) {
    for (std::uint32_t col = 0; col < d; ++col) {
      const float x = r.f32();
      if (!std::isfinite(x)) throw CorruptFile("adapter: non-finite entry");
      p.matrix(row, col) = x;
    }
  }
  if (!r.at_end()) throw CorruptFile("adapter: trailing bytes");
  return p;
}

void save_adapter_file(const AdapterParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write adapter: " + path);
  save_adapter(p, out);
}

AdapterParams load_adapter_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open adapter: " + path);
  return load_adapter(in);
}

EmbeddingSet embed_catalog(const CatalogTable& catalog, int d, const AdapterParams* adapter) {
  EmbeddingSet set;
  set.scheme = kHashSchemeVersion;
  set.vectors.resize(d, static_cast<Eigen::Index>(catalog.size()));
  set.ids.resize(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto id = static_cast<ProductId>(i);
    set.ids[i] = id;
    set.vectors.col(static_cast<Eigen::Index>(i)) = hash_embed(merge_product_text(catalog[id]), d);
  }
  if (adapter != nullptr) adapt_columns(set.vectors, *adapter);
  return set;
}

void save_embeddings(const EmbeddingSet& set, std::ostream& out) {
  if (static_cast<std::size_t>(set.vectors.cols()) != set.ids.size()) {
    throw DimensionMismatch(set.ids.size(), static_cast<std::size_t>(set.vectors.cols()));
  }
  detail::BinaryWriter w(out);
  w.bytes({kVectorMagic, 4});
  w.u32(set.scheme);
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.u64(set.ids.size());
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    w.i64(set.ids[i]);
    const auto col = set.vectors.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index k = 0; k < col.size(); ++k) w.f32(col[k]);
  }
  w.check("vectors");
}

EmbeddingSet load_embeddings(std::istream& in) {
  detail::BinaryReader r(in, "vectors");
  if (r.bytes(4) != std::string_view(kVectorMagic, 4)) throw CorruptFile("vectors: bad magic");
  EmbeddingSet set;
  set.scheme = r.u32();
  if (set.scheme != kExternalScheme && set.scheme != kHashSchemeVersion) {
    throw VersionMismatch("embedding scheme", kHashSchemeVersion, set.scheme);
  }
  const auto d = r.u32();
  if (d < 1 || d > (1u << 16)) throw CorruptFile("vectors: implausible dimension");
  const auto count = r.u64();
  if (count > (1ull << 32)) throw CorruptFile("vectors: implausible count");

  set.ids.reserve(static_cast<std::size_t>(count));
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(count) * d);
  std::unordered_set<ProductId> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id = r.i64();
    if (!seen.insert(id).second) throw DuplicateId(id);
    set.ids.push_back(id);
    for (std::uint32_t k = 0; k < d; ++k) data.push_back(r.f32());
  }
  if (!r.at_end()) throw CorruptFile("vectors: trailing bytes");

  set.vectors = Eigen::Map<const EmbeddingMatrix>(data.data(), d, static_cast<Eigen::Index>(count));
  for (Eigen::Index j = 0; j < set.vectors.cols(); ++j) {
    auto col = set.vectors.col(j);
    if (!col.allFinite()) throw CorruptFile("vectors: non-finite entry for id " + std::to_string(set.ids[j]));
    const float norm = col.norm();
    if (norm == 0.f) throw CorruptFile("vectors: zero vector for id " + std::to_string(set.ids[j]));
    if (std::abs(norm - 1.f) > 1e-6f) col /= norm;
  }
  return set;
}

void save_embeddings_file(const EmbeddingSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vectors: " + path);
  save_embeddings(set, out);
}

EmbeddingSet load_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vectors: " + path);
  return load_embeddings(in);
}

}  // namespace facetsearch
