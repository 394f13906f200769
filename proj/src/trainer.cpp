#include "facetsearch/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rng.hpp"

namespace facetsearch {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be positive");
  }
  if (dim < 8) throw ConfigError("dimension must be >= 8");
}

// ---------------------------------------------------------------------------
// Synthetic queries

namespace {

const std::set<std::string, std::less<>> kStopwords = {
    "a",    "an",   "and",  "the",  "for",  "with", "of",  "to",   "in",  "on",
    "by",   "from", "or",   "at",   "is",   "are",  "it",  "this", "that", "your",
    "you",  "our",  "new",  "fits", "fit",  "compatible"};

const std::set<std::string, std::less<>> kProductNouns = {
    "phone",   "phones",  "smartphone", "smartphones", "cellphone", "case",   "cases",
    "charger", "cable",   "protector",  "holder",      "mount",     "battery", "earbuds",
    "adapter", "stylus",  "band",       "strap",       "cover",     "headset", "headphones",
    "dock",    "hub",     "wallet",     "tripod",      "flip",      "bank"};

bool is_content(const std::string& w) {
  if (w.size() < 2 || kStopwords.contains(w)) return false;
  return std::any_of(w.begin(), w.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

std::string join(std::span<const std::string> words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

// Random contiguous window of `min_len`..`max_len` words.
std::string window(const std::vector<std::string>& words, std::size_t min_len, std::size_t max_len,
                   detail::Rng& rng) {
  if (words.empty()) return {};
  const auto hi = std::min(max_len, words.size());
  const auto lo = std::min(min_len, hi);
  const auto len = lo + rng.below(hi - lo + 1);
  const auto start = rng.below(words.size() - len + 1);
  return join(std::span(words).subspan(start, len));
}

}  // namespace

std::vector<std::string> synth_queries(const ProductRecord& record, int n, std::uint64_t seed) {
  if (n < 1) throw Error("synth_queries: n must be >= 1");

  auto title = lexicon_words(clean_text(record.title));
  if (title.empty()) title = lexicon_words(merge_product_text(record));
  if (title.empty()) title = {"product"};

  auto features = lexicon_words(clean_text(record.features));
  if (features.empty()) features = lexicon_words(clean_text(record.tech_specs));
  if (features.empty()) features = title;
  auto uses = lexicon_words(clean_text(record.description));
  if (uses.empty()) uses = features;

  // The noun is always a title word so every template shares content with it.
  std::string noun;
  for (auto it = title.rbegin(); it != title.rend() && noun.empty(); ++it) {
    if (kProductNouns.contains(*it)) noun = *it;
  }
  for (auto it = title.rbegin(); it != title.rend() && noun.empty(); ++it) {
    if (is_content(*it)) noun = *it;
  }
  if (noun.empty()) noun = title.back();
  const std::string& brand = title.front();

  detail::Rng rng(seed ^ feature_hash(record.asin));
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto emit = [&](std::string q) {
    if (static_cast<int>(out.size()) < n && seen.insert(q).second) out.push_back(std::move(q));
  };

  const int max_attempts = 40 * n + 40;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n; ++attempt) {
    switch (rng.below(6)) {
      case 0:  // name lookup
        emit(window(title, 2, 6, rng));
        break;
      case 1:
        emit("i am looking for a " + noun + " with " + window(features, 2, 4, rng));
        break;
      case 2:
        emit("best " + noun + " for " + window(uses, 1, 3, rng));
        break;
      case 3:
        emit("find a " + noun + " that offers " + window(features, 2, 4, rng));
        break;
      case 4:
        emit(brand + " " + noun + " " + window(features, 1, 3, rng));
        break;
      default:
        emit(noun + " with " + window(uses, 2, 4, rng));
        break;
    }
  }
  // Very short records run out of distinct windows.
  for (int i = 1; static_cast<int>(out.size()) < n; ++i) {
    emit(brand + " " + noun + " option " + std::to_string(i));
  }
  return out;
}

std::vector<TrainingPair> synth_pairs(const CatalogTable& catalog, int per_product,
                                      std::uint64_t seed) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(catalog.size() * static_cast<std::size_t>(std::max(per_product, 0)));
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto id = static_cast<ProductId>(i);
    for (auto& q : synth_queries(catalog[id], per_product, seed)) {
      pairs.push_back({std::move(q), id});
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Batching

std::vector<TrainingBatch> make_batches(std::span<const TrainingPair> pairs, int batch_size,
                                        std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  const auto k = static_cast<std::size_t>(batch_size);

  std::vector<std::size_t> pending(pairs.size());
  for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;
  detail::Rng rng(seed);
  rng.shuffle(pending);

  std::vector<TrainingBatch> batches;
  std::vector<std::size_t> deferred;
  while (!pending.empty()) {
    TrainingBatch batch;
    std::unordered_set<ProductId> products;
    std::unordered_set<std::string_view> queries;
    deferred.clear();
    for (const auto idx : pending) {
      const auto& p = pairs[idx];
      if (batch.size() < k && !products.contains(p.product_id) && !queries.contains(p.query)) {
        products.insert(p.product_id);
        queries.insert(p.query);
        batch.pairs.push_back(p);
      } else {
        deferred.push_back(idx);
      }
    }
    if (batch.size() >= 2) batches.push_back(std::move(batch));
    pending.swap(deferred);
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Loss through the adapter

AdapterLoss adapter_loss(const Matrix<double>& matrix, const Matrix<double>& queries,
                         const Matrix<double>& products, double temperature) {
  const auto d = matrix.rows();
  if (matrix.cols() != d) throw NonSquare(static_cast<std::size_t>(d), static_cast<std::size_t>(matrix.cols()));
  if (queries.rows() != d || products.rows() != d) {
    throw DimensionMismatch(static_cast<std::size_t>(d), static_cast<std::size_t>(queries.rows()));
  }
  if (queries.cols() != products.cols()) {
    throw NonSquare(static_cast<std::size_t>(queries.cols()), static_cast<std::size_t>(products.cols()));
  }

  // Normalize the images; columns with a (near) zero image fall back to the
  // base embedding and carry no gradient.
  auto normalize = [](const Matrix<double>& image, const Matrix<double>& base, Matrix<double>& unit,
                      Vector<double>& inv_norm) {
    unit.resize(image.rows(), image.cols());
    inv_norm.resize(image.cols());
    for (Eigen::Index j = 0; j < image.cols(); ++j) {
      const double n = image.col(j).norm();
      if (n >= 1e-12) {
        unit.col(j) = image.col(j) / n;
        inv_norm[j] = 1.0 / n;
      } else {
        unit.col(j) = base.col(j);
        inv_norm[j] = 0.0;
      }
    }
  };

  Matrix<double> u, v;
  Vector<double> inv_u, inv_v;
  normalize(matrix * queries, queries, u, inv_u);
  normalize(matrix * products, products, v, inv_v);

  const Matrix<double> scores = temperature * (u.transpose() * v);
  AdapterLoss out;
  out.loss = mnrl_loss(scores);
  const Matrix<double> g = mnrl_grad(scores);

  const Matrix<double> du = temperature * (v * g.transpose());
  const Matrix<double> dv = temperature * (u * g);

  // Back through x -> x / |x|: (I - u u^T) du / |x|.
  auto unnormalize = [](const Matrix<double>& unit, const Matrix<double>& grad_unit,
                        const Vector<double>& inv_norm) {
    Matrix<double> out = grad_unit;
    for (Eigen::Index j = 0; j < unit.cols(); ++j) {
      out.col(j) = (grad_unit.col(j) - unit.col(j) * unit.col(j).dot(grad_unit.col(j))) * inv_norm[j];
    }
    return out;
  };

  out.grad = unnormalize(u, du, inv_u) * queries.transpose() +
             unnormalize(v, dv, inv_v) * products.transpose();
  return out;
}

TrainResult train_adapter(const CatalogTable& catalog, std::span<const TrainingPair> pairs,
                          const TrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw EmptyTrainingSet();
  const int d = config.dim;

  // Base embeddings are fixed during training; compute each text once.
  std::unordered_map<ProductId, Vector<double>> product_vecs;
  std::unordered_map<std::string, Vector<double>> query_vecs;
  for (const auto& p : pairs) {
    if (p.product_id < 0 || static_cast<std::size_t>(p.product_id) >= catalog.size()) {
      throw Error("training pair references unknown product id " + std::to_string(p.product_id));
    }
    if (!product_vecs.contains(p.product_id)) {
      product_vecs.emplace(p.product_id,
                           hash_embed(merge_product_text(catalog[p.product_id]), d).cast<double>());
    }
    if (!query_vecs.contains(p.query)) {
      query_vecs.emplace(p.query, hash_embed(p.query, d).cast<double>());
    }
  }

  Matrix<double> m = Matrix<double>::Identity(d, d);
  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // A fresh shuffle per epoch, so pairs dropped as remainders get another turn.
    const auto batches = make_batches(pairs, config.batch_size,
                                      config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch));
    if (batches.empty()) throw EmptyTrainingSet();

    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      const auto k = static_cast<Eigen::Index>(batch.size());
      Matrix<double> q(d, k), p(d, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        const auto& pair = batch.pairs[static_cast<std::size_t>(i)];
        q.col(i) = query_vecs.at(pair.query);
        p.col(i) = product_vecs.at(pair.product_id);
      }
      const auto step = adapter_loss(m, q, p, config.temperature);
      loss_sum += step.loss;
      if (config.learning_rate > 0.0) m -= config.learning_rate * step.grad;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(batches.size()));
  }

  if (!m.allFinite()) throw Error("training diverged: non-finite adapter entries");
  result.params.matrix = m.cast<float>();
  return result;
}

// ---------------------------------------------------------------------------
// Pairs file

std::vector<TrainingPair> load_pairs(std::istream& in, const CatalogTable& catalog) {
  std::vector<TrainingPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw MalformedRecord(line_no, "expected query<TAB>asin");
    }
    auto query = clean_text(std::string_view(line).substr(0, tab));
    const auto asin = line.substr(tab + 1);
    if (query.empty()) throw MalformedRecord(line_no, "empty query");
    const auto id = catalog.find(asin);
    if (!id) throw MissingAsin(asin);
    pairs.push_back({std::move(query), *id});
  }
  return pairs;
}

std::vector<TrainingPair> load_pairs_file(const std::string& path, const CatalogTable& catalog) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pairs file: " + path);
  return load_pairs(in, catalog);
}

void save_pairs(std::span<const TrainingPair> pairs, const CatalogTable& catalog,
                std::ostream& out) {
  for (const auto& p : pairs) out << p.query << '\t' << catalog.at(p.product_id).asin << '\n';
}

}  // namespace facetsearch
