#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gatr/ga/embedding.hpp"
#include "gatr/nn/tensor.hpp"

namespace gatr::nbody {

using Tensor = nn::Tensor<double>;
using ga::Vec3;

/// One gravitational system. Positions/velocities are flat [n x 3].
struct NBodySample {
  std::vector<double> masses;
  std::vector<double> pos0;
  std::vector<double> vel0;
  std::vector<double> pos1;

  std::size_t n_bodies() const { return masses.size(); }
  /// max_i |pos1_i - pos0_i|.
  double max_displacement() const;
};

struct Dataset {
  std::uint64_t seed = 0;
  std::size_t n_bodies = 0;
  Vec3 translation_mean{0.0, 0.0, 0.0};
  std::vector<NBodySample> samples;
};

struct GenerationOptions {
  double star_mass_min = 1.0, star_mass_max = 10.0;
  double planet_mass_min = 0.01, planet_mass_max = 0.1;
  double radius_min = 0.1, radius_max = 1.0;
  double velocity_noise = 0.01;
  double translation_std = 20.0;
  bool random_rotation = true;
  bool permute = true;
  double dt = 1e-4;
  int steps = 100;
  double max_displacement = 2.0;
  /// Abort once this many consecutive attempts are more than 99% rejections.
  int rejection_window = 1000;
};

/// Explicit Euler with pairwise Newtonian gravity, G = 1. Throws NumericError if two
/// bodies come within 1e-9 of each other.
void euler_integrate(const std::vector<double>& masses, std::vector<double>& pos, std::vector<double>& vel, double dt,
                     int steps);

/// Rejection-sampled system of one star and `n_planets` planets. `attempts` (if given)
/// receives the number of draws used.
NBodySample generate_sample(std::mt19937_64& rng, int n_planets, const Vec3& translation_mean,
                            const GenerationOptions& opt = {}, int* attempts = nullptr);

/// Seed for sample `index` of a dataset, independent of generation order.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

Dataset generate_dataset(std::uint64_t seed, std::size_t n_samples, int n_planets, const Vec3& translation_mean,
                         const GenerationOptions& opt = {});

/// Splits of the benchmark: train, eval, eval-more-planets, eval-translated.
struct SplitSpec {
  int n_planets;
  Vec3 translation_mean;
};
SplitSpec split_spec(const std::string& split);

/// Little-endian binary: magic "GATRNBD1", u32 version, u64 n_samples, u32 n_bodies,
/// u64 seed, f64[3] translation mean, then per sample masses, pos0, vel0, pos1 as f64.
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);
/// One row per body: sample,body,mass,x0,y0,z0,vx,vy,vz,x1,y1,z1.
void export_csv(const std::string& path, const Dataset& d);

inline constexpr std::uint32_t kDatasetVersion = 1;

/// Network inputs for a batch of samples (all with the same body count).
struct Batch {
  Tensor mv;        // [B, n, 2, 16]: point, velocity bivector
  Tensor scalars;   // [B, n, 1, 1]: mass
  Tensor features;  // [B, n, 7, 1]: mass, pos0, vel0
  Tensor pos0;      // [B, n, 1, 3]
  Tensor target;    // [B, n, 1, 3]
};

Batch make_batch(const Dataset& d, const std::vector<std::size_t>& indices);

/// Channel 0 = embed_point(p); channel 1 = v1 e01 + v2 e02 + v3 e03.
void embed_body(const double* pos, const double* vel, double* point_mv, double* velocity_mv);

/// Point read from `mv`, or `fallback` if it is at infinity. Returns false on fallback.
bool extract_or_fallback(const double* mv, const double* fallback, double* out);

/// Translated copy of a sample (all positions shifted by t).
NBodySample translated(const NBodySample& s, const Vec3& t);

}  // namespace gatr::nbody
