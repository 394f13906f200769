#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "facetsearch/catalog.hpp"
#include "facetsearch/error.hpp"

namespace facetsearch {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Embedding = Vector<float>;
// One embedding per column.
using EmbeddingMatrix = Matrix<float>;

inline constexpr int kDefaultDim = 256;
// Version of the hash_embed feature scheme. Index and vector files record the
// scheme that produced their vectors; 0 marks externally supplied vectors.
inline constexpr std::uint32_t kHashSchemeVersion = 1;
inline constexpr std::uint32_t kExternalScheme = 0;

/// Signed feature hashing of whitespace tokens (weight 1) and adjacent token
/// bigrams (weight 1/2), L2-normalized. Empty input, or input whose features
/// cancel exactly, maps to e0.
Embedding hash_embed(std::string_view clean_text, int d = kDefaultDim);

/// Stable 64-bit hash used to place features. Exposed for tests.
std::uint64_t feature_hash(std::string_view feature);

/// Fixed-order dot product. Every scoring path in the index goes through this
/// so scores are reproducible bit for bit.
float inner_product(std::span<const float> a, std::span<const float> b);

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar similarity(const Eigen::MatrixBase<DerivedA>& a,
                                     const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch(static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()));
  }
  return a.dot(b);
}

/// Normalized linear map v -> M v / |M v|. A (near) zero image returns v.
template <typename MatDerived, typename VecDerived>
Vector<typename VecDerived::Scalar> adapt(const Eigen::MatrixBase<MatDerived>& m,
                                          const Eigen::MatrixBase<VecDerived>& v) {
  using Scalar = typename VecDerived::Scalar;
  if (m.cols() != v.size() || m.rows() != v.size()) {
    throw DimensionMismatch(static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(v.size()));
  }
  Vector<Scalar> w = m.template cast<Scalar>() * v;
  const Scalar norm = w.norm();
  if (!(norm >= Scalar(1e-12))) return v;
  return w / norm;
}

/// The trainable square matrix applied to base embeddings.
struct AdapterParams {
  Matrix<float> matrix;

  static AdapterParams identity(int d) { return {Matrix<float>::Identity(d, d)}; }
  int dim() const { return static_cast<int>(matrix.rows()); }
};

inline Embedding adapt(const Embedding& v, const AdapterParams& p) { return adapt(p.matrix, v); }

/// Adapts every column of `vectors` in place.
void adapt_columns(EmbeddingMatrix& vectors, const AdapterParams& p);

void save_adapter(const AdapterParams& p, std::ostream& out);
AdapterParams load_adapter(std::istream& in);
void save_adapter_file(const AdapterParams& p, const std::string& path);
AdapterParams load_adapter_file(const std::string& path);

/// Vectors with their product IDs, as stored in a vector file.
struct EmbeddingSet {
  std::uint32_t scheme = kHashSchemeVersion;
  EmbeddingMatrix vectors;  // d x count
  std::vector<ProductId> ids;

  int dim() const { return static_cast<int>(vectors.rows()); }
  std::size_t size() const { return ids.size(); }
};

/// hash_embed of every record's merged text, optionally adapted; ids are
/// catalog row indices.
EmbeddingSet embed_catalog(const CatalogTable& catalog, int d = kDefaultDim,
                           const AdapterParams* adapter = nullptr);

/// Vector file: magic "FSVE", u32 scheme version (0 = external), u32 d,
/// u64 count, then count x (i64 id, d x f32), all little-endian.
void save_embeddings(const EmbeddingSet& set, std::ostream& out);
/// Rejects non-finite or zero vectors; other vectors are normalized on load.
EmbeddingSet load_embeddings(std::istream& in);
void save_embeddings_file(const EmbeddingSet& set, const std::string& path);
EmbeddingSet load_embeddings_file(const std::string& path);

}  // namespace facetsearch
