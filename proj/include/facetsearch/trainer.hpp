#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facetsearch/catalog.hpp"
#include "facetsearch/embedder.hpp"
#include "facetsearch/error.hpp"

namespace facetsearch {

struct TrainingPair {
  std::string query;  // clean text
  ProductId product_id = 0;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct TrainingBatch {
  std::vector<TrainingPair> pairs;
  std::size_t size() const { return pairs.size(); }
};

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 2.0;
  int epochs = 10;
  std::uint64_t seed = 0;
  double temperature = 20.0;  // multiplies similarities before the loss
  int dim = kDefaultDim;

  void validate() const;
};

/// `n` distinct template queries built from the record's own words.
/// Deterministic in (record, n, seed).
std::vector<std::string> synth_queries(const ProductRecord& record, int n, std::uint64_t seed);

/// `per_product` synthetic queries for every catalog record.
std::vector<TrainingPair> synth_pairs(const CatalogTable& catalog, int per_product,
                                      std::uint64_t seed);

/// Seeded shuffle, then greedy batch filling with distinct products and
/// distinct queries per batch. Pairs that conflict with the batch being
/// filled wait for a later one. A batch that cannot reach K pairs is kept when
/// it has at least two, otherwise its pairs are dropped for this call.
std::vector<TrainingBatch> make_batches(std::span<const TrainingPair> pairs, int batch_size,
                                        std::uint64_t seed);

/// Mean negative log-likelihood of the diagonal under row-wise softmax:
///   -(1/K) sum_i [ S_ii - log sum_j exp(S_ij) ]
template <typename Derived>
typename Derived::Scalar mnrl_loss(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw NonSquare(static_cast<std::size_t>(s.rows()), static_cast<std::size_t>(s.cols()));
  }
  const auto k = s.rows();
  Scalar total(0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar m = s.row(i).maxCoeff();
    const Scalar lse = m + std::log((s.row(i).array() - m).exp().sum());
    total += s(i, i) - lse;
  }
  return -total / static_cast<Scalar>(k);
}

/// d loss / d S_ij = (softmax(S_i.)_j - [i == j]) / K. Rows sum to zero.
template <typename Derived>
Matrix<typename Derived::Scalar> mnrl_grad(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw NonSquare(static_cast<std::size_t>(s.rows()), static_cast<std::size_t>(s.cols()));
  }
  const auto k = s.rows();
  Matrix<Scalar> g(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar m = s.row(i).maxCoeff();
    auto e = (s.row(i).array() - m).exp().eval();
    g.row(i) = e / e.sum();
    g(i, i) -= Scalar(1);
  }
  return g / static_cast<Scalar>(k);
}

struct AdapterLoss {
  double loss = 0.0;
  Matrix<double> grad;  // d loss / d matrix
};

/// Loss of one batch under the adapter and its exact gradient w.r.t. the
/// adapter matrix. Columns of `queries` / `products` are base embeddings of
/// x_i / y_i. Scores are temperature * <adapt(x_i), adapt(y_j)>.
AdapterLoss adapter_loss(const Matrix<double>& matrix, const Matrix<double>& queries,
                         const Matrix<double>& products, double temperature);

struct TrainResult {
  AdapterParams params;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
};

/// Plain gradient descent on the adapter starting from identity.
TrainResult train_adapter(const CatalogTable& catalog, std::span<const TrainingPair> pairs,
                          const TrainConfig& config);

/// Pairs file: "query<TAB>asin" per line.
std::vector<TrainingPair> load_pairs(std::istream& in, const CatalogTable& catalog);
std::vector<TrainingPair> load_pairs_file(const std::string& path, const CatalogTable& catalog);
void save_pairs(std::span<const TrainingPair> pairs, const CatalogTable& catalog,
                std::ostream& out);

}  // namespace facetsearch
