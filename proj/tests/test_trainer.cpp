#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "facetsearch/error.hpp"
#include "facetsearch/trainer.hpp"
#include "support.hpp"

using namespace facetsearch;

namespace {

// Loss straight from the definition, in long double, no stabilization.
double naive_loss(const Matrix<double>& s) {
  const auto k = s.rows();
  long double total = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    long double z = 0;
    for (Eigen::Index j = 0; j < k; ++j) z += std::exp(static_cast<long double>(s(i, j)));
    total += s(i, i) - std::log(z);
  }
  return static_cast<double>(-total / k);
}

Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& g, double scale = 1.0) {
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * fstest::gaussian(g);
  return m;
}

Matrix<double> unit_columns(Matrix<double> m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j).normalize();
  return m;
}

}  // namespace

TEST(MnrlLoss, SingleColumnIsZero) {
  for (double s : {-3.0, 0.0, 7.5}) {
    Matrix<double> m(1, 1);
    m(0, 0) = s;
    EXPECT_EQ(mnrl_loss(m), 0.0);
  }
}

TEST(MnrlLoss, ZerosGiveLogTwo) {
  EXPECT_NEAR(mnrl_loss(Matrix<double>::Zero(2, 2)), std::log(2.0), 1e-12);
}

TEST(MnrlLoss, IdentityMatchesHandValue) {
  EXPECT_NEAR(mnrl_loss(Matrix<double>::Identity(2, 2)), std::log(1.0 + std::exp(-1.0)), 1e-12);
}

TEST(MnrlLoss, MatchesNaiveFormula) {
  std::mt19937_64 g(3);
  for (int k : {1, 2, 3, 5, 8}) {
    const auto s = random_matrix(k, k, g, 2.0);
    EXPECT_NEAR(mnrl_loss(s), naive_loss(s), 1e-12);
  }
}

TEST(MnrlLoss, StableForLargeScores) {
  Matrix<double> s(2, 2);
  s << 1000, 0, 0, 1000;
  EXPECT_TRUE(std::isfinite(mnrl_loss(s)));
  EXPECT_NEAR(mnrl_loss(s), 0.0, 1e-12);
}

TEST(MnrlLoss, ShiftInvariant) {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_matrix(5, 5, g);
    for (double c : {-3.0, 0.7, 10.0}) {
      EXPECT_NEAR(mnrl_loss(Matrix<double>(s.array() + c)), mnrl_loss(s), 1e-9);
    }
  }
}

TEST(MnrlLoss, NonNegativeWhenDiagonalDominates) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_matrix(4, 4, g);
    for (int i = 0; i < 4; ++i) s(i, i) = s.row(i).maxCoeff() + 0.1;
    EXPECT_GE(mnrl_loss(s), 0.0);
  }
}

TEST(MnrlLoss, NonSquareRejected) {
  EXPECT_THROW(mnrl_loss(Matrix<double>::Zero(2, 3)), NonSquare);
  EXPECT_THROW(mnrl_grad(Matrix<double>::Zero(3, 2)), NonSquare);
  EXPECT_THROW(mnrl_loss(Matrix<double>(0, 0)), NonSquare);
}

TEST(MnrlGrad, ZerosHandValue) {
  Matrix<double> want(2, 2);
  want << -0.25, 0.25, 0.25, -0.25;
  EXPECT_TRUE(mnrl_grad(Matrix<double>::Zero(2, 2)).isApprox(want, 1e-15));
}

TEST(MnrlGrad, RowsSumToZero) {
  std::mt19937_64 g(6);
  for (int k : {2, 3, 7}) {
    const auto grad = mnrl_grad(random_matrix(k, k, g, 3.0));
    for (int i = 0; i < k; ++i) EXPECT_NEAR(grad.row(i).sum(), 0.0, 1e-12);
  }
}

TEST(MnrlGrad, MatchesCentralDifferences) {
  std::mt19937_64 g(7);
  const double h = 1e-5;
  for (int k : {2, 3, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = random_matrix(k, k, g);
      const auto grad = mnrl_grad(s);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          auto p = s, m = s;
          p(i, j) += h;
          m(i, j) -= h;
          const double fd = (mnrl_loss(p) - mnrl_loss(m)) / (2 * h);
          EXPECT_LT(std::abs(fd - grad(i, j)), 1e-5 * std::max(1.0, std::abs(grad(i, j))));
        }
      }
    }
  }
}

TEST(AdapterLoss, MatchesDirectComputation) {
  std::mt19937_64 g(8);
  const int d = 6, k = 4;
  const Matrix<double> m = Matrix<double>::Identity(d, d) + random_matrix(d, d, g, 0.3);
  const auto q = unit_columns(random_matrix(d, k, g));
  const auto p = unit_columns(random_matrix(d, k, g));
  Matrix<double> s(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) s(i, j) = 20.0 * (m * q.col(i)).normalized().dot((m * p.col(j)).normalized());
  EXPECT_NEAR(adapter_loss(m, q, p, 20.0).loss, naive_loss(s), 1e-10);
}

TEST(AdapterLoss, GradientMatchesCentralDifferences) {
  std::mt19937_64 g(9);
  const int d = 5, k = 3;
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix<double> m = Matrix<double>::Identity(d, d) + random_matrix(d, d, g, 0.4);
    const auto q = unit_columns(random_matrix(d, k, g));
    const auto p = unit_columns(random_matrix(d, k, g));
    const auto grad = adapter_loss(m, q, p, 5.0).grad;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        Matrix<double> mp = m, mm = m;
        mp(a, b) += h;
        mm(a, b) -= h;
        const double fd = (adapter_loss(mp, q, p, 5.0).loss - adapter_loss(mm, q, p, 5.0).loss) / (2 * h);
        EXPECT_LT(std::abs(fd - grad(a, b)), 1e-5 * std::max(1.0, std::abs(grad(a, b)))) << a << "," << b;
      }
    }
  }
}

TEST(SynthQueries, DeterministicAndDistinct) {
  ProductRecord r;
  r.asin = "B1";
  r.title = "Anker 4-Port USB Charger";
  r.description = "Charges four devices at once for travel and home";
  r.features = "fast charging; compact; foldable plug";
  EXPECT_EQ(synth_queries(r, 3, 42), synth_queries(r, 3, 42));
  const auto ten = synth_queries(r, 10, 1);
  ASSERT_EQ(ten.size(), 10u);
  EXPECT_EQ(std::set<std::string>(ten.begin(), ten.end()).size(), 10u);
}

TEST(SynthQueries, ShareATitleToken) {
  ProductRecord r;
  r.asin = "B2";
  r.title = "anker 4-port usb charger";
  r.features = "fast charging; compact";
  r.description = "travel charger";
  const auto title = lexicon_words(r.title);
  const std::set<std::string> title_words(title.begin(), title.end());
  for (const auto& q : synth_queries(r, 10, 3)) {
    bool shared = false;
    for (const auto& w : lexicon_words(q)) shared = shared || title_words.contains(w);
    EXPECT_TRUE(shared) << q;
  }
}

TEST(SynthQueries, SparseRecordStillYieldsN) {
  ProductRecord r;
  r.asin = "B3";
  r.title = "x";
  EXPECT_EQ(synth_queries(r, 6, 0).size(), 6u);
}

TEST(MakeBatches, NoConflicts) {
  const std::vector<TrainingPair> pairs = {{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}};
  const auto batches = make_batches(pairs, 2, 1);
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(batches[0].size(), 2u);
  EXPECT_EQ(batches[1].size(), 2u);
}

TEST(MakeBatches, SameQuerySplitsAcrossBatches) {
  const std::vector<TrainingPair> two = {{"q", 1}, {"q", 2}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& b : make_batches(two, 2, seed)) EXPECT_LT(b.size(), 2u);
  }
  const std::vector<TrainingPair> four = {{"q", 1}, {"q", 2}, {"a", 3}, {"b", 4}};
  bool split_seen = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    int batches_with_q = 0;
    for (const auto& b : make_batches(four, 2, seed)) {
      int q = 0;
      for (const auto& p : b.pairs) q += p.query == "q";
      EXPECT_LE(q, 1);
      batches_with_q += q;
    }
    split_seen = split_seen || batches_with_q == 2;
  }
  EXPECT_TRUE(split_seen);
}

TEST(MakeBatches, RemainderDropped) {
  const std::vector<TrainingPair> pairs = {{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}, {"e", 4}};
  const auto batches = make_batches(pairs, 2, 3);
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(batches[0].size() + batches[1].size(), 4u);
}

TEST(MakeBatches, UniquenessPropertyOnDuplicateHeavyInput) {
  std::mt19937_64 g(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TrainingPair> pairs;
    const auto n = 1 + g() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      pairs.push_back({"q" + std::to_string(g() % 8), static_cast<ProductId>(g() % 8)});
    }
    const int k = 2 + static_cast<int>(g() % 6);
    std::size_t placed = 0;
    for (const auto& b : make_batches(pairs, k, g())) {
      ASSERT_GE(b.size(), 2u);
      ASSERT_LE(b.size(), static_cast<std::size_t>(k));
      std::set<std::string> qs;
      std::set<ProductId> ps;
      for (const auto& p : b.pairs) {
        EXPECT_TRUE(qs.insert(p.query).second);
        EXPECT_TRUE(ps.insert(p.product_id).second);
      }
      placed += b.size();
    }
    EXPECT_LE(placed, pairs.size());
  }
}

TEST(MakeBatches, RejectsBatchOfOne) {
  const std::vector<TrainingPair> pairs = {{"a", 0}};
  EXPECT_THROW(make_batches(pairs, 1, 0), ConfigError);
}

namespace {

const CatalogTable& sample() {
  static const auto t = load_catalog_file(fstest::data_path("sample/catalog.jsonl"));
  return t;
}

}  // namespace

TEST(TrainAdapter, ZeroLearningRateKeepsIdentity) {
  const auto pairs = synth_pairs(sample(), 1, 0);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  cfg.dim = 32;
  const auto r = train_adapter(sample(), pairs, cfg);
  EXPECT_EQ(r.params.matrix, (Matrix<float>::Identity(32, 32)));
}

TEST(TrainAdapter, DeterministicLossTrajectory) {
  const auto pairs = synth_pairs(sample(), 2, 0);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.dim = 32;
  const auto a = train_adapter(sample(), pairs, cfg);
  const auto b = train_adapter(sample(), pairs, cfg);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_EQ(a.params.matrix, b.params.matrix);
}

TEST(TrainAdapter, EmptyPairs) {
  EXPECT_THROW(train_adapter(sample(), std::vector<TrainingPair>{}, TrainConfig{}), EmptyTrainingSet);
}

TEST(TrainAdapter, InvalidConfig) {
  const auto pairs = synth_pairs(sample(), 1, 0);
  TrainConfig cfg;
  cfg.batch_size = 1;
  EXPECT_THROW(train_adapter(sample(), pairs, cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(train_adapter(sample(), pairs, cfg), ConfigError);
}

TEST(Pairs, FileRoundTripAndMissingAsin) {
  const auto pairs = synth_pairs(sample(), 2, 5);
  std::stringstream buf;
  save_pairs(pairs, sample(), buf);
  EXPECT_EQ(load_pairs(buf, sample()), pairs);
  std::istringstream bad("some query\tNOPE\n");
  EXPECT_THROW(load_pairs(bad, sample()), MissingAsin);
  std::istringstream malformed("no tab here\n");
  EXPECT_THROW(load_pairs(malformed, sample()), MalformedRecord);
}
