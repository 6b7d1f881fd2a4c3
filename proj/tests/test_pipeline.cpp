#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ctime>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqp/config.hpp"
#include "vqp/io.hpp"
#include "vqp/pipeline.hpp"

using namespace vqp;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "vqproxy");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (auto& a : args) argv.push_back(a.data());
  return pipe::run_cli(static_cast<int>(argv.size()), argv.data());
}

// Shared tiny corpus, built once by the first end-to-end test case (doctest
// runs cases in declaration order) and reused by the cheaper negative tests.
struct Paths {
  fs::path root;
  std::string data_dir, manifest, targets, labels, ckpt, features, report;
  bool built = false;
};

Paths& ws() {
  static Paths p = [] {
    Paths q;
    q.root = fs::temp_directory_path() /
             ("vqp_cli_test_" + std::to_string(std::time(nullptr)));
    fs::create_directories(q.root);
    q.data_dir = (q.root / "data").string();
    q.manifest = (q.root / "data" / "manifest.txt").string();
    q.targets = (q.root / "targets.csv").string();
    q.labels = (q.root / "labels.csv").string();
    q.ckpt = (q.root / "ckpt").string();
    q.features = (q.root / "features.csv").string();
    q.report = (q.root / "report.csv").string();
    return q;
  }();
  return p;
}

std::string slurp(const std::string& path) { return io::read_text_file(path); }

}  // namespace

TEST_CASE("cli end-to-end: generate -> targets -> pretrain -> features -> evaluate -> report") {
  Paths& p = ws();
  REQUIRE(run({"generate", "--seed", "5", "--contents", "6", "--frames", "3", "--size", "32x32",
               "--out", p.data_dir}) == pipe::kExitOk);
  io::Manifest m = io::read_manifest(p.manifest);
  CHECK(m.entries.size() == 36);  // 6 contents x 6 ladder rungs
  CHECK(m.provenance.count("config_hash") == 1);

  REQUIRE(run({"compute-fr", "--seed", "5", "--manifest", p.manifest, "--out", p.targets,
               "--labels-out", p.labels}) == pipe::kExitOk);
  io::Csv targets = io::read_csv(p.targets);
  CHECK(targets.header ==
        std::vector<std::string>{"content_id", "level", "frame_index", "ssim", "ms_ssim",
                                 "psnr_norm"});
  CHECK(targets.rows.size() == 30u * 4);  // 3 frame rows + 1 clip-mean row per distorted clip
  io::Csv labels = io::read_csv(p.labels);
  CHECK(labels.rows.size() == 36);

  REQUIRE(run({"pretrain", "--seed", "5", "--set", "train.epochs=2", "--set",
               "train.embed_dim=8", "--set", "train.batch_size=10", "--set",
               "train.tasks=ssim,psnr_norm", "--manifest", p.manifest, "--targets", p.targets,
               "--out", p.ckpt}) == pipe::kExitOk);
  const std::string checkpoint = (fs::path(p.ckpt) / "checkpoint.bin").string();
  REQUIRE(fs::is_regular_file(checkpoint));
  REQUIRE(fs::is_regular_file((fs::path(p.ckpt) / "train_log.csv").string()));

  REQUIRE(run({"extract-features", "--seed", "5", "--manifest", p.manifest, "--checkpoint",
               checkpoint, "--out", p.features}) == pipe::kExitOk);
  io::Csv feats = io::read_csv(p.features);
  CHECK(feats.rows.size() == 36);
  CHECK(feats.header.size() == 2 + 8);

  REQUIRE(run({"evaluate", "--seed", "5", "--protocol", "standard", "--set", "eval.runs=2",
               "--features", p.features, "--labels", p.labels, "--out", p.report}) ==
          pipe::kExitOk);
  io::Csv report = io::read_csv(p.report);
  REQUIRE(report.rows.size() == 3);  // 2 runs + median
  CHECK(report.rows.back()[0] == "median");
  CHECK_FALSE(report.rows.back()[2].empty());  // median srcc defined

  const std::string summary = (ws().root / "summary.csv").string();
  REQUIRE(run({"report", "--inputs", p.report, "--out", summary}) == pipe::kExitOk);
  io::Csv sum = io::read_csv(summary);
  REQUIRE(sum.rows.size() == 1);  // per-run rows dropped, median kept
  CHECK(sum.rows[0][1] == "median");
  CHECK(sum.rows[0][3] == report.rows.back()[2]);

  p.built = true;
}

TEST_CASE("fit-head writes loadable ridge and svr models") {
  Paths& p = ws();
  REQUIRE(p.built);
  const std::string ridge_out = (p.root / "head_ridge.bin").string();
  REQUIRE(run({"fit-head", "--features", p.features, "--labels", p.labels, "--model", "ridge",
               "--out", ridge_out}) == pipe::kExitOk);
  CHECK(io::load_head(ridge_out).kind == io::HeadModel::Kind::Ridge);

  const std::string svr_out = (p.root / "head_svr.bin").string();
  REQUIRE(run({"fit-head", "--seed", "5", "--features", p.features, "--labels", p.labels,
               "--model", "svr", "--out", svr_out}) == pipe::kExitOk);
  CHECK(io::load_head(svr_out).kind == io::HeadModel::Kind::Svr);

  CHECK(run({"fit-head", "--features", p.features, "--labels", p.labels, "--model", "tree",
             "--out", ridge_out}) == pipe::kExitValidation);
}

TEST_CASE("fixed seeds reproduce artifacts byte for byte") {
  Paths& p = ws();
  REQUIRE(p.built);
  const std::string again = (p.root / "data_again").string();
  REQUIRE(run({"generate", "--seed", "5", "--contents", "6", "--frames", "3", "--size", "32x32",
               "--out", again}) == pipe::kExitOk);
  CHECK(slurp((fs::path(again) / "manifest.txt").string()) == slurp(p.manifest));
  CHECK(slurp((fs::path(again) / "c0003_l4.raw").string()) ==
        slurp((fs::path(p.data_dir) / "c0003_l4.raw").string()));
  CHECK(slurp((fs::path(again) / "c0000_l0.raw").string()) ==
        slurp((fs::path(p.data_dir) / "c0000_l0.raw").string()));
}

TEST_CASE("worker thread count never changes results") {
  Paths& p = ws();
  REQUIRE(p.built);
  const std::string checkpoint = (fs::path(p.ckpt) / "checkpoint.bin").string();
  const std::string feats4 = (p.root / "features_t4.csv").string();
  REQUIRE(run({"extract-features", "--seed", "5", "--threads", "4", "--manifest", p.manifest,
               "--checkpoint", checkpoint, "--out", feats4}) == pipe::kExitOk);
  CHECK(slurp(feats4) == slurp(p.features));

  const std::string report4 = (p.root / "report_t4.csv").string();
  REQUIRE(run({"evaluate", "--seed", "5", "--threads", "4", "--protocol", "standard", "--set",
               "eval.runs=2", "--features", p.features, "--labels", p.labels, "--out",
               report4}) == pipe::kExitOk);
  CHECK(slurp(report4) == slurp(p.report));
}

TEST_CASE("content filters narrow feature extraction") {
  Paths& p = ws();
  REQUIRE(p.built);
  const std::string checkpoint = (fs::path(p.ckpt) / "checkpoint.bin").string();
  const std::string subset = (p.root / "features_subset.csv").string();
  REQUIRE(run({"extract-features", "--manifest", p.manifest, "--checkpoint", checkpoint,
               "--contents", "0-2", "--out", subset}) == pipe::kExitOk);
  io::Csv csv = io::read_csv(subset);
  CHECK(csv.rows.size() == 18);  // 3 contents x 6 levels
  for (const auto& row : csv.rows) CHECK(std::stoi(row[0]) <= 2);

  CHECK(run({"extract-features", "--manifest", p.manifest, "--checkpoint", checkpoint,
             "--contents", "99", "--out", subset}) == pipe::kExitValidation);
}

TEST_CASE("cli surfaces validation failures as exit 2") {
  Paths& p = ws();
  REQUIRE(p.built);
  CHECK(run({}) == pipe::kExitValidation);                 // missing subcommand
  CHECK(run({"frobnicate"}) == pipe::kExitValidation);     // unknown subcommand
  CHECK(run({"--help"}) == pipe::kExitOk);                 // help is a clean exit
  CHECK(run({"generate"}) == pipe::kExitValidation);       // missing required --out
  CHECK(run({"generate", "--out", (p.root / "x").string(), "--size", "abc"}) ==
        pipe::kExitValidation);
  CHECK(run({"generate", "--out", (p.root / "x").string(), "--set", "data.bogus=1"}) ==
        pipe::kExitValidation);
  CHECK(run({"generate", "--out", (p.root / "x").string(), "--threads", "0"}) ==
        pipe::kExitValidation);
  CHECK(run({"compute-fr", "--manifest", (p.root / "absent.txt").string(), "--out",
             (p.root / "t.csv").string()}) == pipe::kExitValidation);
  CHECK(run({"evaluate", "--protocol", "fewshot", "--features", p.features, "--labels", p.labels,
             "--out", (p.root / "r.csv").string(), "--svg", (p.root / "s.svg").string()}) ==
        pipe::kExitValidation);
  CHECK(run({"evaluate", "--protocol", "zeroshot", "--features", p.features, "--labels",
             p.labels, "--out", (p.root / "r.csv").string()}) == pipe::kExitValidation);
  CHECK(run({"report", "--inputs", p.labels, "--out", (p.root / "s.csv").string()}) ==
        pipe::kExitValidation);
}

TEST_CASE("id set specs expand singles and ranges") {
  std::set<int> got = pipe::parse_id_set("3,7,10-19");
  CHECK(got.size() == 12);
  CHECK(got.count(3));
  CHECK(got.count(7));
  CHECK(got.count(10));
  CHECK(got.count(19));
  CHECK_FALSE(got.count(9));
  CHECK(pipe::parse_id_set("").empty());
  CHECK(pipe::parse_id_set("4-4") == std::set<int>{4});
  CHECK_THROWS_AS(pipe::parse_id_set("abc"), std::invalid_argument);
  CHECK_THROWS_AS(pipe::parse_id_set("9-5"), std::invalid_argument);
  CHECK_THROWS_AS(pipe::parse_id_set("5-"), std::invalid_argument);
}

TEST_CASE("config resolution layers file, overrides, and seed flag") {
  pipe::CommonOpts opts;
  opts.overrides = {"data.width=40", "seed=3"};
  cfg::Config c = pipe::resolve_config(opts);
  CHECK(c.get_int("data.width", 0) == 40);
  CHECK(pipe::resolve_seed(c, opts) == 3);

  opts.seed_override = 7;
  CHECK(pipe::resolve_seed(c, opts) == 7);

  pipe::CommonOpts none;
  CHECK(pipe::resolve_seed(pipe::resolve_config(none), none) == 0);

  pipe::CommonOpts bad;
  bad.overrides = {"data.wdith=1"};
  CHECK_THROWS_AS(pipe::resolve_config(bad), std::invalid_argument);

  pipe::CommonOpts missing;
  missing.config_path = "/nonexistent/vqp.cfg";
  CHECK_THROWS_AS(pipe::resolve_config(missing), std::invalid_argument);
}

TEST_CASE("cleanup") {
  std::error_code ec;
  fs::remove_all(ws().root, ec);
  CHECK_FALSE(ec);
}
