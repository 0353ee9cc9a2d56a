#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "gatr/nbody/nbody.hpp"
#include "run_config.hpp"

using namespace gatr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

int gatr_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gatr");
  return cli::run(args);
}

}  // namespace

TEST_CASE("run config: defaults, seeds, unknown keys") {
  const cli::RunConfig c = cli::parse_run_config({{"seed", 5}, {"training", {{"steps", 7}}}});
  CHECK(c.training.steps == 7);
  CHECK(c.training.seed == 5);
  CHECK(c.dataset.seed == 5);
  CHECK(c.dataset.train_samples == 1000);
  CHECK(c.dataset.eval_samples == 500);
  const cli::RunConfig o = cli::parse_run_config({{"seed", 5}, {"verify", {{"seed", 9}}}}, 11);
  CHECK(o.verify.seed == 11);
  CHECK(o.training.seed == 11);
  CHECK_THROWS_AS(cli::parse_run_config({{"datset", nlohmann::json::object()}}), InvalidArgument);
  CHECK_THROWS_AS(cli::parse_run_config({{"dataset", {{"dt", -1.0}}}}), InvalidArgument);
  CHECK_THROWS_AS(cli::parse_run_config({{"model", {{"gatr", {{"n_head", 2}}}}}}), InvalidArgument);
  CHECK_THROWS_AS(cli::parse_run_config({{"training", {{"steps", "many"}}}}), InvalidArgument);
  const cli::RunConfig back = cli::parse_run_config(cli::to_json(c));
  CHECK(back.training.steps == 7);
  CHECK(back.dataset.seed == 5);
}

TEST_CASE("gen-data splits and reproducibility") {
  TempDir dir("gatr_cli_gen");
  CHECK(gatr_cli({"gen-data", "--split", "eval-translated", "--samples", "20", "--seed", "3", "--out", dir / "t.bin"}) == 0);
  const nbody::Dataset t = nbody::load_dataset(dir / "t.bin");
  CHECK(t.translation_mean == nbody::Vec3{200.0, 0.0, 0.0});
  CHECK(gatr_cli({"gen-data", "--split", "eval-more-planets", "--samples", "5", "--out", dir / "m.bin"}) == 0);
  CHECK(nbody::load_dataset(dir / "m.bin").n_bodies == 6);
  CHECK(gatr_cli({"gen-data", "--split", "eval-translated", "--samples", "20", "--seed", "3", "--out", dir / "u.bin"}) == 0);
  CHECK(read_file(dir / "t.bin") == read_file(dir / "u.bin"));
  CHECK(gatr_cli({"gen-data", "--split", "eval", "--samples", "20", "--seed", "3", "--out", dir / "e.bin"}) == 0);
  CHECK(nbody::load_dataset(dir / "e.bin").samples[0].pos0 != t.samples[0].pos0);
  CHECK(gatr_cli({"gen-data", "--split", "sideways", "--out", dir / "x.bin"}) == cli::kExitUsage);
  CHECK(gatr_cli({"gen-data", "--split", "eval", "--samples", "2", "--out", "/nonexistent/dir/x.bin"}) ==
        cli::kExitRuntime);
}

TEST_CASE("GATR_SEED overrides the configured seed") {
  TempDir dir("gatr_cli_env");
  setenv("GATR_SEED", "17", 1);
  CHECK(gatr_cli({"gen-data", "--split", "eval", "--samples", "3", "--out", dir / "a.bin"}) == 0);
  unsetenv("GATR_SEED");
  write_file(dir / "c.json", R"({"seed": 17})");
  CHECK(gatr_cli({"-c", dir / "c.json", "gen-data", "--split", "eval", "--samples", "3", "--out", dir / "b.bin"}) == 0);
  CHECK(read_file(dir / "a.bin") == read_file(dir / "b.bin"));
  setenv("GATR_SEED", "seventeen", 1);
  CHECK(gatr_cli({"gen-data", "--split", "eval", "--samples", "3", "--out", dir / "c.bin"}) == cli::kExitUsage);
  unsetenv("GATR_SEED");
}

TEST_CASE("verify exit codes") {
  CHECK(gatr_cli({"verify", "--suite", "algebra", "--trials", "20"}) == 0);
  CHECK(gatr_cli({"verify", "--suite", "algebra", "--trials", "20", "--tolerance", "1e-30"}) == cli::kExitVerifyFailed);
  TempDir dir("gatr_cli_verify");
  write_file(dir / "bad.json", R"({"verify": {"trails": 3}})");
  CHECK(gatr_cli({"-c", dir / "bad.json", "verify", "--suite", "algebra"}) == cli::kExitUsage);
  CHECK(gatr_cli({"verify", "--suite", "everything"}) == cli::kExitUsage);
}

TEST_CASE("train, eval and report") {
  TempDir dir("gatr_cli_train");
  write_file(dir / "cfg.json", R"({"training": {"steps": 3, "batch_size": 8}, "model": {"gatr": {"n_blocks": 1}}})");
  const std::string cfg = dir / "cfg.json";
  CHECK(gatr_cli({"gen-data", "--split", "train", "--samples", "16", "--out", dir / "train.bin"}) == 0);
  CHECK(gatr_cli({"gen-data", "--split", "eval", "--samples", "8", "--out", dir / "eval.bin"}) == 0);
  CHECK(gatr_cli({"gen-data", "--split", "eval-translated", "--samples", "8", "--out", dir / "tr.bin"}) == 0);
  CHECK(gatr_cli({"-c", cfg, "train", "--data", dir / "train.bin", "--model", "gatr", "--out", dir / "runs/a", "--eval",
                  dir / "eval.bin", "--eval", dir / "tr.bin"}) == 0);
  CHECK(read_file(dir / "runs/a/loss.csv").rfind("step,loss,lr\n", 0) == 0);
  CHECK(fs::exists(dir / "runs/a/metamorphic.csv"));
  const std::string metrics = read_file(dir / "runs/a/metrics.csv");
  CHECK(metrics.rfind("split,mse,stderr\n", 0) == 0);

  // Re-evaluating the checkpoint reproduces the training-time metrics.
  CHECK(gatr_cli({"-c", cfg, "eval", "--checkpoint", dir / "runs/a/checkpoint.bin", "--data", dir / "eval.bin",
                  "--data", dir / "tr.bin", "--out", dir / "again.csv"}) == 0);
  CHECK(read_file(dir / "again.csv") == metrics);

  // Empty dataset: error and no output file.
  CHECK(gatr_cli({"gen-data", "--split", "eval", "--samples", "0", "--out", dir / "empty.bin"}) == 0);
  CHECK(gatr_cli({"eval", "--checkpoint", dir / "runs/a/checkpoint.bin", "--data", dir / "empty.bin", "--out",
                  dir / "empty.csv"}) == cli::kExitUsage);
  CHECK_FALSE(fs::exists(dir / "empty.csv"));

  // MLP trained on four bodies cannot evaluate six.
  CHECK(gatr_cli({"gen-data", "--split", "eval-more-planets", "--samples", "4", "--out", dir / "more.bin"}) == 0);
  CHECK(gatr_cli({"-c", cfg, "train", "--data", dir / "train.bin", "--model", "mlp", "--out", dir / "runs/m"}) == 0);
  CHECK(gatr_cli({"eval", "--checkpoint", dir / "runs/m/checkpoint.bin", "--data", dir / "more.bin"}) ==
        cli::kExitUsage);

  CHECK(gatr_cli({"report", "--runs", dir / "runs", "--out", dir / "report.csv"}) == 0);
  std::istringstream rep(read_file(dir / "report.csv"));
  std::string line;
  std::getline(rep, line);
  CHECK(line == "model,train_size,split,mse,stderr");
  int rows = 0;
  while (std::getline(rep, line)) {
    CHECK(line.rfind("gatr,16,", 0) == 0);
    ++rows;
  }
  CHECK(rows == 2);
  CHECK(gatr_cli({"report", "--runs", dir / "nothing", "--out", dir / "r.csv"}) == cli::kExitUsage);
}

TEST_CASE("report aggregates seeds with mean and standard error") {
  TempDir dir("gatr_cli_report");
  const double mses[] = {1.0, 2.0, 6.0};
  for (int s = 0; s < 3; ++s) {
    const fs::path run = dir.path / ("seed" + std::to_string(s));
    fs::create_directories(run);
    write_file((run / "run.json").string(), R"({"model": "transformer", "train_size": 100})");
    write_file((run / "metrics.csv").string(), "split,mse,stderr\neval," + std::to_string(mses[s]) + ",0.1\n");
  }
  CHECK(gatr_cli({"report", "--runs", dir.path.string(), "--out", dir / "r.csv"}) == 0);
  std::istringstream rep(read_file(dir / "r.csv"));
  std::string header, row;
  std::getline(rep, header);
  std::getline(rep, row);
  std::stringstream cells(row);
  std::vector<std::string> v;
  for (std::string c; std::getline(cells, c, ',');) v.push_back(c);
  REQUIRE(v.size() == 5);
  CHECK(v[0] == "transformer");
  CHECK(v[2] == "eval");
  CHECK(std::stod(v[3]) == doctest::Approx(3.0));
  CHECK(std::stod(v[4]) == doctest::Approx(std::sqrt(7.0 / 3.0)));
}

TEST_CASE("dump-tables reproduces the golden files") {
  TempDir dir("gatr_cli_tables");
  CHECK(gatr_cli({"dump-tables", "--out", dir.path.string()}) == 0);
  for (const char* f : {"cayley_geometric.txt", "cayley_wedge.txt", "dual_signs.txt", "embedding_signs.txt"}) {
    CHECK(read_file(dir / f) == read_file(std::string(GATR_GOLDEN_DIR) + "/" + f));
  }
}
