// One PASS/FAIL line per acceptance criterion; exit status 0 only if all pass.
// Usage: acceptance [criterion-name ...] to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "gatr/model/gatr.hpp"
#include "gatr/nbody/experiment.hpp"
#include "gatr/verify/suites.hpp"

using namespace gatr;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kAlgebraSeconds = 60.0;
constexpr double kNullSpaceAngle = 1e-8;
constexpr double kNullSpaceSeconds = 60.0;
constexpr double kEquivarianceSeconds = 120.0;
constexpr double kGradientSeconds = 120.0;
constexpr double kMetamorphicMaxDeviation = 1e-4;
constexpr double kParamTarget = 1.9e6;
constexpr double kParamBand = 0.25;

constexpr int kDeskTrain = 1000;
constexpr int kDeskEval = 500;
constexpr int kDeskSteps = 3000;
constexpr int kDeskBatch = 64;
constexpr int kDeskSeeds = 3;
constexpr int kReproSteps = 100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome suite_outcome(const verify::SuiteReport& r, double budget) {
  r.print(std::cout);
  const bool fast = r.seconds < budget;
  return {r.passed() && fast, std::to_string(r.properties.size()) + " properties, " + fmt(r.seconds) + " s (budget " +
                                  fmt(budget) + " s)"};
}

Outcome algebra() { return suite_outcome(verify::run_algebra_suite(), kAlgebraSeconds); }

Outcome null_space() {
  const auto t0 = Clock::now();
  const auto pga = verify::equivariant_map_space({0, 1, 1, 1}, 100, 1, verify::declared_pga_basis());
  const auto euc = verify::equivariant_map_space({1, 1, 1}, 100, 2, verify::euclidean_grade_projections());
  const double secs = since(t0);
  std::ostringstream os;
  os << "G(3,0,1) dim " << pga.dimension << " angle " << fmt(pga.subspace_angle) << ", G(3,0,0) dim " << euc.dimension
     << " angle " << fmt(euc.subspace_angle) << ", " << fmt(secs) << " s";
  const bool ok = pga.dimension == 9 && euc.dimension == 4 && pga.subspace_angle <= kNullSpaceAngle &&
                  euc.subspace_angle <= kNullSpaceAngle && secs < kNullSpaceSeconds;
  return {ok, os.str()};
}

Outcome equivariance() { return suite_outcome(verify::run_equivariance_suite(), kEquivarianceSeconds); }

Outcome gradients() { return suite_outcome(verify::run_gradient_suite(), kGradientSeconds); }

nbody::Dataset split_data(std::uint64_t seed, const std::string& split, std::size_t n) {
  const nbody::SplitSpec spec = nbody::split_spec(split);
  return nbody::generate_dataset(cli::split_seed(seed, split), n, spec.n_planets, spec.translation_mean);
}

Outcome desk_experiment() {
  const auto t0 = Clock::now();
  std::map<nbody::ModelKind, std::vector<double>> mse;
  double worst_dev = 0.0, worst_rel = 0.0;
  for (int s = 0; s < kDeskSeeds; ++s) {
    const std::uint64_t seed = static_cast<std::uint64_t>(s);
    const nbody::Dataset train = split_data(seed, "train", kDeskTrain);
    const nbody::Dataset eval = split_data(seed, "eval", kDeskEval);
    const nbody::Dataset translated = split_data(seed, "eval-translated", kDeskEval);
    for (nbody::ModelKind kind : {nbody::ModelKind::gatr, nbody::ModelKind::transformer, nbody::ModelKind::mlp}) {
      nbody::Model m = nbody::make_model(kind, nlohmann::json::object(), train.n_bodies, seed);
      nbody::TrainConfig tc;
      tc.steps = kDeskSteps;
      tc.batch_size = kDeskBatch;
      tc.seed = seed;
      const auto t1 = Clock::now();
      const auto losses = nbody::train(m, train, tc);
      const nbody::EvalResult r = nbody::evaluate(m, eval, kDeskBatch);
      mse[kind].push_back(r.mse);
      std::cout << "  seed " << s << ' ' << nbody::to_string(kind) << ": final loss " << fmt(losses.back().loss)
                << ", eval mse " << fmt(r.mse) << " +- " << fmt(r.stderr_) << " (" << fmt(since(t1)) << " s)";
      if (kind == nbody::ModelKind::gatr) {
        const auto mr = nbody::metamorphic_translation(m, translated, translated.translation_mean, kDeskBatch);
        worst_dev = std::max(worst_dev, mr.max_abs_deviation);
        worst_rel = std::max(worst_rel, mr.max_rel_deviation);
        std::cout << ", metamorphic deviation " << fmt(mr.max_abs_deviation) << " (relative "
                  << fmt(mr.max_rel_deviation) << ")";
      }
      std::cout << std::endl;
    }
  }
  auto mean = [&](nbody::ModelKind k) {
    double acc = 0.0;
    for (double v : mse[k]) acc += v;
    return acc / static_cast<double>(mse[k].size());
  };
  const double g = mean(nbody::ModelKind::gatr), t = mean(nbody::ModelKind::transformer),
               m = mean(nbody::ModelKind::mlp);
  std::ostringstream os;
  os << "mean eval mse gatr " << fmt(g) << " < transformer " << fmt(t) << " < mlp " << fmt(m)
     << "; metamorphic deviation " << fmt(worst_dev) << " (relative " << fmt(worst_rel) << ", limit "
     << fmt(kMetamorphicMaxDeviation) << "); " << fmt(since(t0)) << " s";
  return {g < t && t < m && worst_dev < kMetamorphicMaxDeviation, os.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Generates a dataset and trains for a few steps, returning the bytes of both files
// plus the loss history.
std::string repro_run(const fs::path& dir) {
  fs::create_directories(dir);
  const nbody::Dataset d = split_data(7, "train", 200);
  nbody::save_dataset((dir / "data.bin").string(), d);
  const nbody::Dataset loaded = nbody::load_dataset((dir / "data.bin").string());
  nbody::Model m = nbody::make_model(nbody::ModelKind::gatr, nlohmann::json::object(), loaded.n_bodies, 7);
  nbody::TrainConfig tc;
  tc.steps = kReproSteps;
  tc.batch_size = kDeskBatch;
  tc.seed = 7;
  std::ostringstream losses;
  losses.precision(17);
  for (const auto& row : nbody::train(m, loaded, tc)) losses << row.step << ',' << row.loss << ',' << row.lr << '\n';
  m.save((dir / "checkpoint.bin").string());
  return slurp((dir / "data.bin").string()) + '|' + slurp((dir / "checkpoint.bin").string()) + '|' + losses.str();
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "gatr_acceptance_repro";
  fs::remove_all(root);
  const std::string a = repro_run(root / "a");
  const std::string b = repro_run(root / "b");
  const bool same_data = slurp((root / "a/data.bin").string()) == slurp((root / "b/data.bin").string());
  const bool same_ckpt = slurp((root / "a/checkpoint.bin").string()) == slurp((root / "b/checkpoint.bin").string());
  fs::remove_all(root);
  return {a == b && same_data && same_ckpt,
          std::string("dataset bytes ") + (same_data ? "identical" : "differ") + ", checkpoint after " +
              std::to_string(kReproSteps) + " steps " + (same_ckpt ? "identical" : "differs") + ", loss history " +
              (a == b ? "identical" : "differs")};
}

Outcome parameter_count() {
  const model::ParameterSet p = model::init_gatr_params(model::table3_config());
  for (const auto& [name, n] : p.breakdown(2)) std::cout << "  " << name << ": " << n << "\n";
  const double n = static_cast<double>(p.count());
  const double rel = n / kParamTarget - 1.0;
  return {std::abs(rel) <= kParamBand,
          std::to_string(p.count()) + " parameters, " + fmt(100.0 * rel) + "% from " + fmt(kParamTarget)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"algebra-suite", algebra},
      {"equivariant-map-space", null_space},
      {"equivariance", equivariance},
      {"gradients", gradients},
      {"nbody-desk-experiment", desk_experiment},
      {"reproducibility", reproducibility},
      {"parameter-count", parameter_count},
  };
  std::vector<std::string> only(argv + 1, argv + argc);
  std::vector<std::string> lines;
  bool all = true;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    std::cout << "== " << name << std::endl;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    lines.push_back((o.pass ? "PASS " : "FAIL ") + name + ": " + o.detail);
    std::cout << lines.back() << std::endl;
  }
  std::cout << "\n== summary\n";
  for (const auto& l : lines) std::cout << l << "\n";
  std::cout << (all ? "acceptance: all criteria pass" : "acceptance: FAILED") << std::endl;
  return all ? 0 : 1;
}
