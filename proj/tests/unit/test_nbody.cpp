#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gatr/ga/embedding.hpp"
#include "gatr/nbody/experiment.hpp"

using namespace gatr;
using nbody::Vec3;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t star_slot(const nbody::NBodySample& s) {
  return static_cast<std::size_t>(std::max_element(s.masses.begin(), s.masses.end()) - s.masses.begin());
}

}  // namespace

TEST_CASE("euler: free body moves uniformly") {
  std::vector<double> pos{1.0, 2.0, 3.0}, vel{0.5, -1.0, 2.0};
  nbody::euler_integrate({1.0}, pos, vel, 1e-4, 100);
  CHECK(pos[0] == doctest::Approx(1.0 + 0.5 * 1e-2));
  CHECK(pos[1] == doctest::Approx(2.0 - 1.0 * 1e-2));
  CHECK(pos[2] == doctest::Approx(3.0 + 2.0 * 1e-2));
}

TEST_CASE("euler: two equal masses attract symmetrically") {
  const double m = 2.0, r = 0.5, dt = 1e-3;
  std::vector<double> pos{-r, 0, 0, r, 0, 0}, vel(6, 0.0);
  nbody::euler_integrate({m, m}, pos, vel, dt, 1);
  const double a = m / ((2 * r) * (2 * r));
  CHECK(vel[0] == doctest::Approx(a * dt));
  CHECK(vel[3] == doctest::Approx(-a * dt));
  std::vector<double> same{0, 0, 0, 0, 0, 0};
  std::vector<double> v0(6, 0.0);
  CHECK_THROWS_AS(nbody::euler_integrate({1.0, 1.0}, same, v0, dt, 1), NumericError);
}

TEST_CASE("euler: linear momentum is conserved") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> masses{1.0 + std::abs(n(rng)), 0.1, 0.05, 0.3};
    std::vector<double> pos(12), vel(12);
    for (double& p : pos) p = n(rng);
    for (double& v : vel) v = n(rng);
    auto momentum = [&](int axis) {
      double p = 0.0;
      for (std::size_t b = 0; b < 4; ++b) p += masses[b] * vel[b * 3 + axis];
      return p;
    };
    const double before = momentum(0);
    nbody::euler_integrate(masses, pos, vel, 1e-4, 1);
    CHECK(std::abs(momentum(0) - before) < 1e-12);
  }
}

TEST_CASE("noise-free single planet stays on its circle") {
  nbody::GenerationOptions opt;
  opt.velocity_noise = 0.0;
  opt.translation_std = 0.0;
  opt.random_rotation = false;
  opt.permute = false;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const nbody::NBodySample s = nbody::generate_sample(rng, 1, {0, 0, 0}, opt);
    auto radius = [](const std::vector<double>& p) {
      return std::sqrt((p[3] - p[0]) * (p[3] - p[0]) + (p[4] - p[1]) * (p[4] - p[1]) + (p[5] - p[2]) * (p[5] - p[2]));
    };
    CHECK(std::abs(radius(s.pos1) / radius(s.pos0) - 1.0) < 0.01);
  }
}

TEST_CASE("translated split is centred at (200, 0, 0)") {
  const std::size_t n = 400;
  const nbody::Dataset d = nbody::generate_dataset(3, n, 3, {200.0, 0.0, 0.0});
  Vec3 mean{0, 0, 0};
  for (const auto& s : d.samples) {
    const std::size_t k = star_slot(s);
    for (int a = 0; a < 3; ++a) mean[a] += s.pos0[k * 3 + a] / n;
  }
  const double bound = 3.0 * 20.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean[0] - 200.0) < bound);
  CHECK(std::abs(mean[1]) < bound);
  CHECK(std::abs(mean[2]) < bound);
}

TEST_CASE("permutation makes every body slot equally likely to hold the star") {
  const std::size_t n = 10000;
  const nbody::Dataset d = nbody::generate_dataset(4, n, 3, {0, 0, 0});
  std::array<double, 4> counts{};
  for (const auto& s : d.samples) counts[star_slot(s)] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  CHECK(chi2 < 16.27);  // p = 0.001 at three degrees of freedom
}

TEST_CASE("every emitted sample obeys the rejection rule") {
  const nbody::Dataset d = nbody::generate_dataset(5, 300, 5, {0, 0, 0});
  CHECK(d.n_bodies == 6);
  for (const auto& s : d.samples) {
    CHECK(s.max_displacement() <= 2.0);
    for (double m : s.masses) CHECK(m > 0.0);
  }
}

TEST_CASE("dataset files are reproducible and round trip") {
  const std::string a = temp_path("gatr_unit_a.bin"), b = temp_path("gatr_unit_b.bin");
  nbody::save_dataset(a, nbody::generate_dataset(6, 50, 3, {200.0, 0.0, 0.0}));
  nbody::save_dataset(b, nbody::generate_dataset(6, 50, 3, {200.0, 0.0, 0.0}));
  CHECK(read_bytes(a) == read_bytes(b));
  const nbody::Dataset back = nbody::load_dataset(a);
  CHECK(back.samples.size() == 50);
  CHECK(back.translation_mean == Vec3{200.0, 0.0, 0.0});
  const nbody::Dataset fresh = nbody::generate_dataset(6, 50, 3, {200.0, 0.0, 0.0});
  CHECK(back.samples[17].pos1 == fresh.samples[17].pos1);
  // A prefix of a larger dataset matches the smaller one: samples do not depend on generation order.
  CHECK(nbody::generate_dataset(6, 80, 3, {200.0, 0.0, 0.0}).samples[49].pos0 == fresh.samples[49].pos0);
  std::ofstream(b, std::ios::trunc) << "not a dataset";
  CHECK_THROWS_AS(nbody::load_dataset(b), IoError);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("body embedding") {
  const double pos[3] = {1.0, -2.0, 0.5}, zero[3] = {0, 0, 0}, vel[3] = {0.3, 0.1, -0.2};
  double point[16], v[16];
  nbody::embed_body(pos, zero, point, v);
  for (double c : v) CHECK(c == 0.0);
  double out[3];
  CHECK(nbody::extract_or_fallback(point, zero, out));
  for (int a = 0; a < 3; ++a) CHECK(out[a] == doctest::Approx(pos[a]));

  // Translating the body equals the translation sandwich on both channels.
  const Vec3 t{5.0, -1.0, 2.0};
  const double moved[3] = {pos[0] + t[0], pos[1] + t[1], pos[2] + t[2]};
  double p0[16], v0[16], p1[16], v1[16];
  nbody::embed_body(pos, vel, p0, v0);
  nbody::embed_body(moved, vel, p1, v1);
  const ga::SandwichMatrix m = ga::sandwich_matrix(ga::embed_translation(t));
  double tp[16], tv[16];
  ga::apply_sandwich(m, p0, tp);
  ga::apply_sandwich(m, v0, tv);
  for (int k = 0; k < 16; ++k) {
    CHECK(tp[k] == doctest::Approx(p1[k]));
    CHECK(tv[k] == doctest::Approx(v1[k]));
  }
  double infinity[16] = {};
  double fallback_out[3];
  CHECK_FALSE(nbody::extract_or_fallback(infinity, pos, fallback_out));
  CHECK(fallback_out[0] == pos[0]);
}

TEST_CASE("one-sample overfit") {
  const nbody::Dataset d = nbody::generate_dataset(7, 1, 3, {0, 0, 0});
  nbody::TrainConfig tc;
  tc.steps = 2000;
  tc.batch_size = 1;
  tc.lr_start = 1e-3;
  tc.lr_end = 1e-5;
  for (const char* kind : {"gatr", "mlp"}) {
    const nlohmann::json arch = std::string(kind) == "gatr" ? nlohmann::json{{"n_blocks", 1}} : nlohmann::json::object();
    nbody::Model m = nbody::make_model(nbody::parse_model_kind(kind), arch, d.n_bodies, 0);
    const auto curve = nbody::train(m, d, tc);
    CHECK_MESSAGE(curve.back().loss < 1e-4 * curve.front().loss, kind);
  }
}

TEST_CASE("GATr: translated evaluation, more planets, determinism") {
  const nbody::Dataset train = nbody::generate_dataset(8, 64, 3, {0, 0, 0});
  nbody::Model m = nbody::make_model(nbody::ModelKind::gatr, nlohmann::json::object(), 4, 0);
  nbody::TrainConfig tc;
  tc.steps = 5;
  tc.batch_size = 16;
  const auto c1 = nbody::train(m, train, tc);
  nbody::Model m2 = nbody::make_model(nbody::ModelKind::gatr, nlohmann::json::object(), 4, 0);
  const auto c2 = nbody::train(m2, train, tc);
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].loss == c2[i].loss);
  CHECK(m.params == m2.params);

  const nbody::Dataset translated = nbody::generate_dataset(9, 32, 3, {200.0, 0.0, 0.0});
  const nbody::MetamorphicResult mr = nbody::metamorphic_translation(m, translated, translated.translation_mean);
  CHECK(mr.max_abs_deviation < 1e-4);

  const nbody::Dataset more = nbody::generate_dataset(10, 16, 5, {0, 0, 0});
  const nbody::EvalResult r = nbody::evaluate(m, more);
  CHECK(std::isfinite(r.mse));
  CHECK(r.n_samples == 16);

  const std::string path = temp_path("gatr_unit_model.bin");
  m.save(path);
  const nbody::Model loaded = nbody::Model::load(path);
  CHECK(nbody::evaluate(loaded, more).mse == r.mse);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(nbody::evaluate(m, nbody::Dataset{}), InvalidArgument);
  nbody::Model mlp = nbody::make_model(nbody::ModelKind::mlp, nlohmann::json::object(), 4, 0);
  CHECK_THROWS_AS(nbody::evaluate(mlp, more), InvalidArgument);
  CHECK_THROWS_AS(nbody::train(mlp, more, tc), InvalidArgument);
  CHECK_THROWS_AS(nbody::parse_model_kind("cnn"), InvalidArgument);
}
