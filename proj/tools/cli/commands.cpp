#include "commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "gatr/ga/cayley.hpp"
#include "gatr/ga/embedding.hpp"
#include "run_config.hpp"

namespace gatr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kSplits = {"train", "eval", "eval-more-planets", "eval-translated"};

struct Common {
  std::string config;
  bool deterministic = false;
};

RunConfig load_config(const Common& c) {
  const auto seed = env_seed();
  return c.config.empty() ? parse_run_config(json::object(), seed) : load_run_config(c.config, seed);
}

std::ofstream open_out(const std::string& path) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  os << std::setprecision(17);
  return os;
}

std::string infer_split(const nbody::Dataset& d) {
  if (d.translation_mean != nbody::Vec3{0.0, 0.0, 0.0}) return "eval-translated";
  if (d.n_bodies != 4) return "eval-more-planets";
  return "eval";
}

// ---- gen-data

struct GenArgs {
  std::string out, split = "train", csv;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
};

int gen_data(const Common& c, const GenArgs& a) {
  const RunConfig cfg = load_config(c);
  const nbody::SplitSpec spec = nbody::split_spec(a.split);
  const std::uint64_t base = a.seed.value_or(cfg.dataset.seed);
  const std::size_t n =
      a.samples.value_or(a.split == "train" ? cfg.dataset.train_samples : cfg.dataset.eval_samples);
  const nbody::Dataset d =
      nbody::generate_dataset(split_seed(base, a.split), n, spec.n_planets, spec.translation_mean, cfg.dataset.generation);
  nbody::save_dataset(a.out, d);
  if (!a.csv.empty()) nbody::export_csv(a.csv, d);
  std::cout << "wrote " << d.samples.size() << " " << a.split << " samples (" << d.n_bodies << " bodies) to " << a.out
            << "\n";
  return kExitOk;
}

// ---- verify

struct VerifyArgs {
  std::string suite = "all";
  std::optional<int> trials;
  std::optional<double> tolerance;
};

int verify_cmd(const Common& c, const VerifyArgs& a) {
  const RunConfig cfg = load_config(c);
  verify::VerifyOptions opt = cfg.verify;
  if (a.trials) opt.trials = *a.trials;
  if (a.tolerance) opt.tolerance = *a.tolerance;
  bool ok = true;
  auto run_one = [&](const verify::SuiteReport& r) {
    r.print(std::cout);
    ok = ok && r.passed();
  };
  if (a.suite == "algebra" || a.suite == "all") run_one(verify::run_algebra_suite(opt));
  if (a.suite == "equivariance" || a.suite == "all") run_one(verify::run_equivariance_suite(opt));
  if (a.suite == "gradients" || a.suite == "all") run_one(verify::run_gradient_suite(opt));
  std::cout << (ok ? "verification passed\n" : "verification FAILED\n");
  return ok ? kExitOk : kExitVerifyFailed;
}

// ---- eval

struct MetricRow {
  std::string split;
  double mse, stderr_;
};

std::vector<MetricRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<MetricRow> rows;
  std::string line;
  std::getline(in, line);
  if (line != "split,mse,stderr") throw IoError("unexpected metrics header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    MetricRow r;
    std::string mse, se;
    if (!std::getline(ss, r.split, ',') || !std::getline(ss, mse, ',') || !std::getline(ss, se)) {
      throw IoError("malformed metrics row in " + path + ": " + line);
    }
    r.mse = std::stod(mse);
    r.stderr_ = std::stod(se);
    rows.push_back(r);
  }
  return rows;
}

// Replaces the row of the same split, keeping the others.
void upsert_metric(const std::string& path, const MetricRow& row) {
  std::vector<MetricRow> rows;
  if (fs::exists(path)) rows = read_metrics(path);
  std::erase_if(rows, [&](const MetricRow& r) { return r.split == row.split; });
  rows.push_back(row);
  std::ofstream os = open_out(path);
  os << "split,mse,stderr\n";
  for (const MetricRow& r : rows) os << r.split << ',' << r.mse << ',' << r.stderr_ << '\n';
}

struct EvalArgs {
  std::string checkpoint, split, out;
  std::vector<std::string> data;
};

void eval_one(const RunConfig& cfg, const nbody::Model& m, const std::string& data, std::string split,
              const std::string& out) {
  const nbody::Dataset d = nbody::load_dataset(data);
  if (split.empty()) split = infer_split(d);
  const nbody::EvalResult r = nbody::evaluate(m, d, cfg.eval.batch_size);
  std::cout << std::setprecision(6) << nbody::to_string(m.kind) << " " << split << ": mse " << r.mse << " +- "
            << r.stderr_ << " over " << r.n_samples << " samples";
  if (r.fallbacks) std::cout << " (" << r.fallbacks << " predictions at infinity scored with pos0)";
  std::cout << "\n";
  if (!out.empty()) upsert_metric(out, {split, r.mse, r.stderr_});

  if (cfg.eval.metamorphic && m.kind == nbody::ModelKind::gatr && split == "eval-translated") {
    const nbody::MetamorphicResult mr = nbody::metamorphic_translation(m, d, d.translation_mean, cfg.eval.batch_size);
    std::cout << "metamorphic translation check: max abs deviation " << mr.max_abs_deviation << ", relative "
              << mr.max_rel_deviation << "\n";
    if (!out.empty()) {
      std::ofstream os = open_out((fs::path(out).parent_path() / "metamorphic.csv").string());
      os << "split,max_abs_deviation,max_rel_deviation\n" << split << ',' << mr.max_abs_deviation << ','
         << mr.max_rel_deviation << '\n';
    }
  }
}

int eval_cmd(const Common& c, const EvalArgs& a) {
  const RunConfig cfg = load_config(c);
  const nbody::Model m = nbody::Model::load(a.checkpoint);
  if (!a.split.empty() && a.data.size() > 1) throw InvalidArgument("eval: --split applies to a single --data file");
  for (const std::string& data : a.data) eval_one(cfg, m, data, a.split, a.out);
  return kExitOk;
}

// ---- train

struct TrainArgs {
  std::string data, model = "gatr", out;
  std::vector<std::string> eval;
};

int train_cmd(const Common& c, const TrainArgs& a) {
  const RunConfig cfg = load_config(c);
  const nbody::ModelKind kind = nbody::parse_model_kind(a.model);
  const nbody::Dataset d = nbody::load_dataset(a.data);
  nbody::Model m = nbody::make_model(kind, cfg.model_section(kind), d.n_bodies, cfg.training.seed);

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  std::ofstream loss = open_out((dir / "loss.csv").string());
  loss << "step,loss,lr\n";
  const int every = std::max(1, cfg.training.steps / 20);
  std::cout << "training " << a.model << " (" << m.params.count() << " parameters) on " << d.samples.size()
            << " samples for " << cfg.training.steps << " steps\n";
  nbody::train(m, d, cfg.training, [&](const nbody::LossRow& r) {
    loss << r.step << ',' << r.loss << ',' << r.lr << '\n';
    if (r.step % every == 0 || r.step + 1 == cfg.training.steps) {
      std::cout << "  step " << r.step << " loss " << std::setprecision(6) << r.loss << "\n";
    }
  });
  loss.close();
  m.save((dir / "checkpoint.bin").string());
  json run = {{"model", a.model},
              {"train_size", d.samples.size()},
              {"seed", cfg.training.seed},
              {"data", a.data},
              {"deterministic", c.deterministic},
              {"architecture", m.describe()},
              {"config", to_json(cfg)}};
  open_out((dir / "run.json").string()) << run.dump(2) << "\n";
  for (const std::string& e : a.eval) eval_one(cfg, m, e, "", (dir / "metrics.csv").string());
  return kExitOk;
}

// ---- report

struct ReportArgs {
  std::string runs, out;
};

int report_cmd(const ReportArgs& a) {
  if (!fs::is_directory(a.runs)) throw InvalidArgument("report: not a directory: " + a.runs);
  std::vector<fs::path> dirs{a.runs};
  for (const auto& e : fs::recursive_directory_iterator(a.runs)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  // (model, train_size, split) -> per-run (mse, stderr)
  std::map<std::tuple<std::string, std::size_t, std::string>, std::vector<std::pair<double, double>>> groups;
  std::size_t runs = 0;
  for (const fs::path& dir : dirs) {
    if (!fs::exists(dir / "run.json")) continue;
    if (!fs::exists(dir / "metrics.csv")) {
      std::cerr << "warning: " << dir.string() << " has no metrics.csv; skipped\n";
      continue;
    }
    std::ifstream in(dir / "run.json");
    const json run = json::parse(in);
    ++runs;
    for (const MetricRow& r : read_metrics((dir / "metrics.csv").string())) {
      groups[{run.at("model").get<std::string>(), run.at("train_size").get<std::size_t>(), r.split}].push_back(
          {r.mse, r.stderr_});
    }
  }
  if (runs == 0) throw InvalidArgument("report: no completed runs under " + a.runs);
  std::ofstream os = open_out(a.out);
  os << "model,train_size,split,mse,stderr\n";
  for (const auto& [key, v] : groups) {
    double mean = 0.0;
    for (const auto& p : v) mean += p.first;
    mean /= static_cast<double>(v.size());
    double se = v.front().second;
    if (v.size() > 1) {
      double var = 0.0;
      for (const auto& p : v) var += (p.first - mean) * (p.first - mean);
      se = std::sqrt(var / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    os << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << mean << ',' << se << '\n';
  }
  std::cout << "aggregated " << runs << " runs into " << groups.size() << " rows: " << a.out << "\n";
  return kExitOk;
}

// ---- dump-tables

int dump_tables(const std::string& out) {
  fs::create_directories(out);
  const ga::CliffordTables& t = ga::pga_tables();
  const fs::path dir(out);
  {
    std::ofstream os = open_out((dir / "cayley_geometric.txt").string());
    t.write_geometric(os);
  }
  {
    std::ofstream os = open_out((dir / "cayley_wedge.txt").string());
    t.write_wedge(os);
  }
  {
    std::ofstream os = open_out((dir / "dual_signs.txt").string());
    t.write_dual(os);
  }
  {
    std::ofstream os = open_out((dir / "embedding_signs.txt").string());
    ga::write_embedding_signs(os);
  }
  std::cout << "wrote tables to " << out << "\n";
  return kExitOk;
}

}  // namespace

std::uint64_t split_seed(std::uint64_t base, const std::string& split) {
  const auto it = std::find(kSplits.begin(), kSplits.end(), split);
  if (it == kSplits.end()) throw InvalidArgument("unknown split '" + split + "'");
  return nbody::sample_seed(base, 0x5eed0000u + static_cast<std::uint64_t>(it - kSplits.begin()));
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Geometric algebra transformer toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config, "JSON run configuration");
  app.add_flag("--deterministic", common.deterministic, "Sequential reductions (always the case in this build)");

  GenArgs gen;
  CLI::App* g = app.add_subcommand("gen-data", "Generate an n-body dataset split");
  g->add_option("--out", gen.out, "Output dataset file")->required();
  g->add_option("--split", gen.split, "Dataset split")->check(CLI::IsMember(kSplits));
  g->add_option("--seed", gen.seed, "Base seed (overrides config and GATR_SEED)");
  g->add_option("--samples", gen.samples, "Number of samples (default from config)");
  g->add_option("--csv", gen.csv, "Also export one row per body as CSV");

  VerifyArgs ver;
  CLI::App* v = app.add_subcommand("verify", "Run the property suites");
  v->add_option("--suite", ver.suite, "Suite to run")->check(CLI::IsMember({"algebra", "equivariance", "gradients", "all"}));
  v->add_option("--trials", ver.trials, "Random instances per property");
  v->add_option("--tolerance", ver.tolerance, "Replace every property's tolerance");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train a model on a dataset");
  t->add_option("--data", tr.data, "Training dataset")->required();
  t->add_option("--model", tr.model, "Model kind")->check(CLI::IsMember({"gatr", "transformer", "mlp"}));
  t->add_option("--out", tr.out, "Run directory (checkpoint.bin, loss.csv, run.json)")->required();
  t->add_option("--eval", tr.eval, "Datasets to evaluate after training (metrics.csv)");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Evaluation dataset(s)")->required();
  e->add_option("--split", ev.split, "Split label (inferred from the dataset header by default)");
  e->add_option("--out", ev.out, "Metrics CSV to update");

  ReportArgs rep;
  CLI::App* r = app.add_subcommand("report", "Aggregate run directories into one CSV");
  r->add_option("--runs", rep.runs, "Directory containing run directories")->required();
  r->add_option("--out", rep.out, "Output CSV")->required();

  std::string tables_out;
  CLI::App* d = app.add_subcommand("dump-tables", "Write the multiplication and sign tables");
  d->add_option("--out", tables_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return gen_data(common, gen);
    if (v->parsed()) return verify_cmd(common, ver);
    if (t->parsed()) return train_cmd(common, tr);
    if (e->parsed()) return eval_cmd(common, ev);
    if (r->parsed()) return report_cmd(rep);
    if (d->parsed()) return dump_tables(tables_out);
  } catch (const InvalidArgument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gatr::cli
