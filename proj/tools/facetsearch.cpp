// facetsearch: command-line driver for ingest, embedding, adapter training,
// index building, filter extraction, search and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facetsearch/catalog.hpp"
#include "facetsearch/config.hpp"
#include "facetsearch/embedder.hpp"
#include "facetsearch/engine.hpp"
#include "facetsearch/error.hpp"
#include "facetsearch/index.hpp"
#include "facetsearch/queryfilter.hpp"
#include "facetsearch/trainer.hpp"

namespace fs = facetsearch;

namespace {

// Binds flags to variables pre-filled from the run config, so flags win.
class Binder {
 public:
  Binder(CLI::App* app, const fs::RunConfig& cfg) : app_(app), cfg_(cfg) {}

  CLI::Option* path(const std::string& names, std::string& var, std::string_view key, bool required,
                    const std::string& help) {
    if (!key.empty()) {
      if (auto v = cfg_.text(key)) var = *v;
    }
    auto* opt = app_->add_option(names, var, help);
    if (required && var.empty()) opt->required();
    return opt;
  }

  template <class T>
  CLI::Option* integer(const std::string& names, T& var, std::string_view key, const std::string& help) {
    if (auto v = cfg_.integer(key)) var = static_cast<T>(*v);
    return app_->add_option(names, var, help)->capture_default_str();
  }

  CLI::Option* number(const std::string& names, double& var, std::string_view key, const std::string& help) {
    if (auto v = cfg_.number(key)) var = *v;
    return app_->add_option(names, var, help)->capture_default_str();
  }

  CLI::Option* flag(const std::string& names, bool& var, std::string_view key, const std::string& help) {
    if (auto v = cfg_.flag(key)) var = *v;
    return app_->add_flag(names, var, help);
  }

 private:
  CLI::App* app_;
  const fs::RunConfig& cfg_;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw fs::Error("cannot open for writing: " + path);
  return out;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || v < 1) throw CLI::ValidationError("--ks", "expected positive integers like 1,5,10");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw CLI::ValidationError("--ks", "at least one k is required");
  return ks;
}

void check_index_matches_catalog(const fs::IvfIndex& index, const fs::CatalogTable& catalog) {
  for (const auto& list : index.lists()) {
    for (const auto id : list.ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= catalog.size()) {
        throw fs::Error("index id " + std::to_string(id) + " is not a row of the catalog");
      }
    }
  }
}

std::unique_ptr<fs::FilterExtractor> make_extractor(const std::string& command) {
  if (command.empty()) return std::make_unique<fs::RuleExtractor>();
  return std::make_unique<fs::CommandExtractor>(command);
}

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string_view(argv[i]) == "--config") return argv[i + 1];
  }
  for (int i = 1; i < argc; ++i) {
    const std::string_view a(argv[i]);
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  return {};
}

int run(int argc, char** argv) {
  const auto config_path = find_config_path(argc, argv);
  const auto cfg = config_path.empty() ? fs::RunConfig::from_environment()
                                       : fs::RunConfig::load_file(config_path);

  CLI::App app{"Faceted product search over a hashed-embedding IVF index", "facetsearch"};
  app.set_version_flag("--version", "facetsearch 1.0");
  std::string config_unused;
  app.add_option("--config", config_unused, "key=value config file (default: $FACETSEARCH_CONFIG)");
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a JSONL catalog");
  std::string ingest_in, ingest_out;
  {
    Binder b(ingest, cfg);
    b.path("--in", ingest_in, "", true, "raw catalog, one JSON object per line");
    b.path("--out", ingest_out, "catalog", true, "normalized catalog output");
  }
  ingest->callback([&] {
    const auto catalog = fs::load_catalog_file(ingest_in);
    auto out = open_output(ingest_out);
    fs::save_catalog(catalog, out);
    std::cerr << "ingested " << catalog.size() << " products\n";
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Embed a catalog, or validate an external vectors file");
  std::string embed_catalog, embed_out, embed_adapter, embed_import;
  int embed_dim = fs::kDefaultDim;
  {
    Binder b(embed, cfg);
    b.path("--catalog", embed_catalog, "catalog", false, "catalog to embed");
    b.path("--out", embed_out, "", false, "vectors output file");
    b.path("--adapter", embed_adapter, "adapter", false, "adapter applied to every vector");
    b.path("--import", embed_import, "", false, "external vectors file to validate");
    b.integer("--dim", embed_dim, "d", "embedding dimension");
  }
  embed->callback([&] {
    if (!embed_import.empty()) {
      const auto set = fs::load_embeddings_file(embed_import);
      if (!embed_out.empty()) fs::save_embeddings_file(set, embed_out);
      std::cout << "vectors " << set.size() << " dim " << set.dim() << " scheme " << set.scheme << "\n";
      return;
    }
    if (embed_catalog.empty() || embed_out.empty()) {
      throw CLI::RequiredError("embed needs --catalog and --out, or --import");
    }
    const auto catalog = fs::load_catalog_file(embed_catalog);
    std::optional<fs::AdapterParams> adapter;
    if (!embed_adapter.empty()) adapter = fs::load_adapter_file(embed_adapter);
    const auto set = fs::embed_catalog(catalog, embed_dim, adapter ? &*adapter : nullptr);
    fs::save_embeddings_file(set, embed_out);
    std::cerr << "embedded " << set.size() << " products at d=" << set.dim() << "\n";
  });

  // synth-pairs
  auto* synth = app.add_subcommand("synth-pairs", "Write template-synthesized training pairs");
  std::string synth_catalog, synth_out;
  int synth_per = 3;
  std::uint64_t synth_seed = 0;
  {
    Binder b(synth, cfg);
    b.path("--catalog", synth_catalog, "catalog", true, "catalog");
    b.path("--out", synth_out, "pairs", true, "pairs output (query TAB asin)");
    b.integer("--per-product", synth_per, "", "queries per product")->check(CLI::PositiveNumber);
    b.integer("--seed", synth_seed, "seed", "random seed");
  }
  synth->callback([&] {
    const auto catalog = fs::load_catalog_file(synth_catalog);
    const auto pairs = fs::synth_pairs(catalog, synth_per, synth_seed);
    auto out = open_output(synth_out);
    fs::save_pairs(pairs, catalog, out);
    std::cerr << "wrote " << pairs.size() << " pairs\n";
  });

  // train-adapter
  auto* train = app.add_subcommand("train-adapter", "Train the linear query/product adapter");
  std::string train_catalog, train_pairs, train_out;
  fs::TrainConfig tc;
  {
    Binder b(train, cfg);
    b.path("--catalog", train_catalog, "catalog", true, "catalog");
    b.path("--pairs", train_pairs, "pairs", true, "training pairs (query TAB asin)");
    b.path("--out", train_out, "adapter", true, "adapter output file");
    b.integer("--epochs", tc.epochs, "epochs", "training epochs");
    b.number("--lr", tc.learning_rate, "lr", "learning rate");
    b.integer("--seed", tc.seed, "seed", "random seed");
    b.integer("--batch", tc.batch_size, "batch", "batch size K");
    b.integer("--dim", tc.dim, "d", "embedding dimension");
    b.number("--temperature", tc.temperature, "", "similarity scale");
  }
  train->callback([&] {
    tc.validate();
    const auto catalog = fs::load_catalog_file(train_catalog);
    const auto pairs = fs::load_pairs_file(train_pairs, catalog);
    const auto result = fs::train_adapter(catalog, pairs, tc);
    fs::save_adapter_file(result.params, train_out);
    char line[64];
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
      std::snprintf(line, sizeof line, "epoch %zu loss %.6f\n", e + 1, result.epoch_losses[e]);
      std::cout << line;
    }
  });

  // build-index
  auto* build = app.add_subcommand("build-index", "Cluster vectors and write an IVF-Flat index");
  std::string build_vecs, build_out;
  std::size_t build_nlist = 0;
  std::uint64_t build_seed = 0;
  {
    Binder b(build, cfg);
    b.path("--vecs", build_vecs, "vectors", true, "vectors file");
    b.path("--out", build_out, "index", true, "index output file");
    b.integer("--nlist", build_nlist, "nlist", "inverted lists (0: ceil(sqrt N))");
    b.integer("--seed", build_seed, "seed", "k-means seed");
  }
  build->callback([&] {
    const auto set = fs::load_embeddings_file(build_vecs);
    const auto nlist = build_nlist == 0 ? fs::default_nlist(set.size()) : build_nlist;
    const auto sample = fs::training_sample(set.vectors, nlist, build_seed);
    const auto centroids = fs::train_centroids(sample, nlist, build_seed);
    const auto index = fs::build_index(set.vectors, set.ids, centroids, set.scheme);
    fs::save_index_file(index, build_out);
    std::cerr << "indexed " << index.size() << " vectors in " << index.nlist() << " lists\n";
  });

  // extract-filters
  auto* extract = app.add_subcommand("extract-filters", "Print the structured filters of a query");
  std::string extract_query, extract_cmd;
  {
    Binder b(extract, cfg);
    b.path("--query", extract_query, "", true, "query text");
    b.path("--extractor-cmd", extract_cmd, "extractor_cmd", false, "external extractor command");
  }
  extract->callback([&] {
    const auto extractor = make_extractor(extract_cmd);
    std::cout << fs::filters_to_text(extractor->extract(fs::clean_text(extract_query))) << "\n";
  });

  // search and eval share pipeline flags
  struct PipelineFlags {
    std::string index, catalog, adapter, thresholds, extractor_cmd;
    std::size_t nprobe = 0;
    bool no_filters = false;
  };
  auto bind_pipeline = [&](CLI::App* sub, PipelineFlags& f) {
    Binder b(sub, cfg);
    b.path("--idx", f.index, "index", true, "index file");
    b.path("--catalog", f.catalog, "catalog", true, "catalog the index was built from");
    b.path("--adapter", f.adapter, "adapter", false, "adapter applied to queries");
    b.path("--thresholds", f.thresholds, "thresholds", false, "threshold table (default: bundled)");
    b.path("--extractor-cmd", f.extractor_cmd, "extractor_cmd", false, "external extractor command");
    b.integer("--nprobe", f.nprobe, "nprobe", "lists probed (0: ceil(nlist/8))");
    b.flag("--no-filters", f.no_filters, "no_filters", "skip filter extraction and preselection");
  };

  struct LoadedPipeline {
    fs::IvfIndex index;
    fs::CatalogTable catalog;
    std::optional<fs::AdapterParams> adapter;
    std::optional<fs::ThresholdTable> thresholds;
    std::unique_ptr<fs::FilterExtractor> extractor;
    fs::Pipeline pipeline;
  };
  auto load_pipeline = [](const PipelineFlags& f) {
    auto lp = std::make_unique<LoadedPipeline>(LoadedPipeline{
        fs::load_index_file(f.index), fs::load_catalog_file(f.catalog), std::nullopt, std::nullopt,
        make_extractor(f.extractor_cmd), {}});
    check_index_matches_catalog(lp->index, lp->catalog);
    if (!f.adapter.empty()) lp->adapter = fs::load_adapter_file(f.adapter);
    if (!f.thresholds.empty()) lp->thresholds = fs::ThresholdTable::load_file(f.thresholds);
    auto& p = lp->pipeline;
    p.index = &lp->index;
    p.catalog = &lp->catalog;
    p.adapter = lp->adapter ? &*lp->adapter : nullptr;
    if (lp->thresholds) p.thresholds = &*lp->thresholds;
    p.extractor = lp->extractor.get();
    p.nprobe = f.nprobe == 0 ? fs::default_nprobe(lp->index.nlist()) : f.nprobe;
    p.use_filters = !f.no_filters;
    return lp;
  };

  // search
  auto* search = app.add_subcommand("search", "Run one query through the pipeline");
  PipelineFlags search_flags;
  std::string search_query;
  std::size_t search_k = 10;
  bind_pipeline(search, search_flags);
  {
    Binder b(search, cfg);
    b.path("--query", search_query, "", true, "query text");
    b.integer("-k", search_k, "k", "results to return")->check(CLI::PositiveNumber);
  }
  search->callback([&] {
    const auto lp = load_pipeline(search_flags);
    const auto outcome = fs::run_query(search_query, search_k, lp->pipeline);
    if (lp->pipeline.use_filters) std::cerr << "filters " << fs::filters_to_text(outcome.filters) << "\n";
    char score[32];
    std::size_t rank = 0;
    for (const auto& hit : outcome.result.hits) {
      const auto& r = lp->catalog.at(hit.id);
      std::snprintf(score, sizeof score, "%.6f", static_cast<double>(hit.score));
      std::cout << ++rank << '\t' << r.asin << '\t' << score << '\t' << r.title << '\n';
    }
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Precision@k and Recall@k over a judgments file");
  PipelineFlags eval_flags;
  std::string eval_judgments, eval_ks = "1,2,3,5,10", eval_json;
  bind_pipeline(eval, eval_flags);
  {
    Binder b(eval, cfg);
    b.path("--judgments", eval_judgments, "judgments", true, "judgments (query TAB asin ...)");
    b.path("--ks", eval_ks, "", false, "comma-separated cutoffs")->capture_default_str();
    b.path("--json", eval_json, "", false, "also write the report as JSON here");
  }
  eval->callback([&] {
    const auto ks = parse_ks(eval_ks);
    const auto lp = load_pipeline(eval_flags);
    const auto judgments = fs::load_judgments_file(eval_judgments);
    const auto report = fs::run_benchmark(judgments, ks, lp->pipeline);
    std::cout << report.to_table();
    if (!eval_json.empty()) open_output(eval_json) << report.to_json() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.back()->help());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fs::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
