#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace fsys = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fsys::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fsys::temp_directory_path() / ("facetsearch_cli_" + std::string(info->name()) + "_" +
                                          std::to_string(::getpid()));
    fsys::create_directories(dir_);
  }
  void TearDown() override { fsys::remove_all(dir_); }

  fsys::path file(const std::string& name) const { return dir_ / name; }

  CliRun run(const std::string& args, const std::string& env = "") const {
    const auto out = file("stdout.txt"), err = file("stderr.txt");
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + FACETSEARCH_CLI + "' " + args +
                            " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  // ingest -> embed -> build-index on the sample catalog.
  void build_sample() const {
    const auto catalog = fstest::data_path("sample/catalog.jsonl");
    ASSERT_EQ(run("ingest --in '" + catalog + "' --out catalog.jsonl").code, 0);
    ASSERT_EQ(run("embed --catalog catalog.jsonl --out vecs.bin").code, 0);
    ASSERT_EQ(run("build-index --vecs vecs.bin --out index.bin --seed 3").code, 0);
  }

  fsys::path dir_;
};

}  // namespace

TEST_F(Cli, SearchWithoutIndexIsUsageError) {
  const auto r = run("search --query x");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--idx"), std::string::npos);
}

TEST_F(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run("frobnicate").code, 2); }

TEST_F(Cli, EmbedNeedsCatalogOrImport) { EXPECT_EQ(run("embed --out x.bin").code, 2); }

TEST_F(Cli, ExtractFiltersPrintsJson) {
  const auto r = run("extract-filters --query 'cheap iphone se case'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("price_max"), "low");
  EXPECT_EQ(j.at("subcategory"), "Cell Phone Accessories");
  EXPECT_TRUE(j.at("price_min").is_null());
}

TEST_F(Cli, MissingInputIsDomainError) {
  const auto r = run("search --idx nope.bin --catalog nope.jsonl --query x");
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, CorruptIndexIsDomainError) {
  build_sample();
  {
    std::ofstream out(file("index.bin"), std::ios::binary | std::ios::app);
    out << "junk";
  }
  EXPECT_EQ(run("search --idx index.bin --catalog catalog.jsonl --query case").code, 1);
}

TEST_F(Cli, SearchIsDeterministicAndFiltered) {
  build_sample();
  // Probe all lists: the price filter leaves only a few candidates.
  const std::string cmd = "search --idx index.bin --catalog catalog.jsonl --query 'phone case under $20' -k 5 --nprobe 23";
  const auto a = run(cmd);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(run(cmd).out, a.out);
  std::istringstream lines(a.out);
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    EXPECT_EQ(line.rfind(std::to_string(n + 1) + "\t", 0), 0u) << line;
  }
  EXPECT_GT(n, 0);
  EXPECT_LE(n, 5);
}

TEST_F(Cli, EvalSmokeAndRerunsAreIdentical) {
  build_sample();
  const auto judgments = fstest::data_path("sample/judgments.tsv");
  const std::string cmd = "eval --idx index.bin --catalog catalog.jsonl --judgments '" + judgments +
                          "' --ks 1,5,10 --json report.json";
  const auto a = run(cmd);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("Precision@k"), std::string::npos);
  const auto first = slurp(file("report.json"));
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j.at("queries"), 40);
  EXPECT_EQ(j.at("rows").size(), 3u);

  // Whole pipeline again from scratch: byte-identical artifacts and report.
  const auto vecs = slurp(file("vecs.bin")), index = slurp(file("index.bin"));
  build_sample();
  EXPECT_EQ(slurp(file("vecs.bin")), vecs);
  EXPECT_EQ(slurp(file("index.bin")), index);
  EXPECT_EQ(run(cmd).out, a.out);
  EXPECT_EQ(slurp(file("report.json")), first);
}

TEST_F(Cli, ConfigFileSuppliesAndFlagsOverride) {
  build_sample();
  {
    std::ofstream cfg(file("run.conf"));
    cfg << "index = index.bin\ncatalog = catalog.jsonl\nk = 2\n";
  }
  const auto from_file = run("--config run.conf search --query 'usb charger'");
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(std::count(from_file.out.begin(), from_file.out.end(), '\n'), 2);

  const auto overridden = run("--config run.conf search --query 'usb charger' -k 4");
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_EQ(std::count(overridden.out.begin(), overridden.out.end(), '\n'), 4);

  const auto via_env = run("search --query 'usb charger'", "FACETSEARCH_CONFIG=run.conf");
  EXPECT_EQ(via_env.out, from_file.out);

  {
    std::ofstream bad(file("bad.conf"));
    bad << "colour = red\n";
  }
  EXPECT_EQ(run("--config bad.conf search --query x").code, 2);
}

TEST_F(Cli, TrainAdapterPrintsLossPerEpoch) {
  const auto catalog = fstest::data_path("sample/catalog.jsonl");
  ASSERT_EQ(run("synth-pairs --catalog '" + catalog + "' --out pairs.tsv --seed 1").code, 0);
  const auto r = run("train-adapter --catalog '" + catalog + "' --pairs pairs.tsv --out adapter.bin --epochs 2 --dim 64");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE((r.out + r.err).find("epoch 2 loss"), std::string::npos);
  EXPECT_TRUE(fsys::exists(file("adapter.bin")));
  ASSERT_EQ(run("embed --catalog '" + catalog + "' --adapter adapter.bin --dim 64 --out v.bin").code, 0);
}
