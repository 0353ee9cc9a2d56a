#include "gatr/nbody/nbody.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <numbers>
#include <numeric>

#include "gatr/ga/multivector.hpp"

namespace gatr::nbody {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr char kMagic[8] = {'G', 'A', 'T', 'R', 'N', 'B', 'D', '1'};
constexpr double kCoincident = 1e-9;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

template <class V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V take(std::istream& is, const std::string& path) {
  V v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(V))) throw IoError("truncated dataset: " + path);
  return v;
}

void put_array(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void take_array(std::istream& is, std::vector<double>& v, std::size_t n, const std::string& path) {
  v.resize(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw IoError("truncated dataset: " + path);
  }
}

}  // namespace

double NBodySample::max_displacement() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n_bodies(); ++i) {
    const double dx = pos1[3 * i] - pos0[3 * i];
    const double dy = pos1[3 * i + 1] - pos0[3 * i + 1];
    const double dz = pos1[3 * i + 2] - pos0[3 * i + 2];
    m = std::max(m, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return m;
}

void euler_integrate(const std::vector<double>& masses, std::vector<double>& pos, std::vector<double>& vel, double dt,
                     int steps) {
  const std::size_t n = masses.size();
  if (pos.size() != 3 * n || vel.size() != 3 * n) throw ShapeError("euler_integrate: expected n x 3 positions/velocities");
  std::vector<double> force(3 * n);
  for (int step = 0; step < steps; ++step) {
    std::fill(force.begin(), force.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double d[3];
        double r2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          d[a] = pos[3 * j + a] - pos[3 * i + a];
          r2 += d[a] * d[a];
        }
        const double r = std::sqrt(r2);
        if (!(r >= kCoincident)) throw NumericError("euler_integrate: coincident bodies");
        const double k = masses[i] * masses[j] / (r2 * r);
        for (int a = 0; a < 3; ++a) {
          force[3 * i + a] += k * d[a];
          force[3 * j + a] -= k * d[a];
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) {
        pos[3 * i + a] += vel[3 * i + a] * dt;
        vel[3 * i + a] += force[3 * i + a] / masses[i] * dt;
      }
    }
  }
}

NBodySample generate_sample(std::mt19937_64& rng, int n_planets, const Vec3& translation_mean,
                            const GenerationOptions& opt, int* attempts) {
  if (n_planets < 1) throw InvalidArgument("generate_sample: n_planets must be >= 1");
  const std::size_t n = static_cast<std::size_t>(n_planets) + 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 1;; ++attempt) {
    if (attempt > opt.rejection_window) {
      throw NumericError("generate_sample: rejection rate above 0.99 over " + std::to_string(opt.rejection_window) +
                         " attempts (max displacement " + std::to_string(opt.max_displacement) + ")");
    }
    NBodySample s;
    s.masses.resize(n);
    s.pos0.assign(3 * n, 0.0);
    s.vel0.assign(3 * n, 0.0);
    s.masses[0] = log_uniform(rng, opt.star_mass_min, opt.star_mass_max);
    for (std::size_t i = 1; i < n; ++i) {
      s.masses[i] = log_uniform(rng, opt.planet_mass_min, opt.planet_mass_max);
      const double r2lo = opt.radius_min * opt.radius_min;
      const double r2hi = opt.radius_max * opt.radius_max;
      const double r = std::sqrt(r2lo + (r2hi - r2lo) * unit(rng));
      const double phi = 2.0 * std::numbers::pi * unit(rng);
      const double speed = std::sqrt(s.masses[0] / r);
      s.pos0[3 * i] = r * std::cos(phi);
      s.pos0[3 * i + 1] = r * std::sin(phi);
      s.vel0[3 * i] = -speed * std::sin(phi);
      s.vel0[3 * i + 1] = speed * std::cos(phi);
      for (int a = 0; a < 3; ++a) s.vel0[3 * i + a] += opt.velocity_noise * normal(rng);
    }
    if (opt.random_rotation) {
      ga::Quaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
      const double len = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
      q = {q.w / len, q.x / len, q.y / len, q.z / len};
      const auto rot = ga::rotation_matrix(q);
      for (std::vector<double>* v : {&s.pos0, &s.vel0}) {
        for (std::size_t i = 0; i < n; ++i) {
          const Vec3 p{(*v)[3 * i], (*v)[3 * i + 1], (*v)[3 * i + 2]};
          for (int a = 0; a < 3; ++a) {
            (*v)[3 * i + a] = rot[a][0] * p[0] + rot[a][1] * p[1] + rot[a][2] * p[2];
          }
        }
      }
    }
    Vec3 shift{};
    for (int a = 0; a < 3; ++a) shift[a] = translation_mean[a] + opt.translation_std * normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) s.pos0[3 * i + a] += shift[a];
    }
    if (opt.permute) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      NBodySample p = s;
      for (std::size_t i = 0; i < n; ++i) {
        p.masses[i] = s.masses[order[i]];
        for (int a = 0; a < 3; ++a) {
          p.pos0[3 * i + a] = s.pos0[3 * order[i] + a];
          p.vel0[3 * i + a] = s.vel0[3 * order[i] + a];
        }
      }
      s = std::move(p);
    }
    s.pos1 = s.pos0;
    std::vector<double> vel = s.vel0;
    euler_integrate(s.masses, s.pos1, vel, opt.dt, opt.steps);
    if (s.max_displacement() <= opt.max_displacement) {
      if (attempts) *attempts = attempt;
      return s;
    }
  }
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL));
}

Dataset generate_dataset(std::uint64_t seed, std::size_t n_samples, int n_planets, const Vec3& translation_mean,
                         const GenerationOptions& opt) {
  Dataset d;
  d.seed = seed;
  d.n_bodies = static_cast<std::size_t>(n_planets) + 1;
  d.translation_mean = translation_mean;
  d.samples.reserve(n_samples);
  std::deque<int> window;
  int window_attempts = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::mt19937_64 rng(sample_seed(seed, i));
    int attempts = 0;
    d.samples.push_back(generate_sample(rng, n_planets, translation_mean, opt, &attempts));
    window.push_back(attempts);
    window_attempts += attempts;
    while (window_attempts - window.front() >= opt.rejection_window) {
      window_attempts -= window.front();
      window.pop_front();
    }
    if (window_attempts >= opt.rejection_window &&
        static_cast<double>(window.size()) / window_attempts < 0.01) {
      throw NumericError("generate_dataset: rejection rate above 0.99 at sample " + std::to_string(i));
    }
  }
  return d;
}

SplitSpec split_spec(const std::string& split) {
  if (split == "train" || split == "eval") return {3, {0.0, 0.0, 0.0}};
  if (split == "eval-more-planets") return {5, {0.0, 0.0, 0.0}};
  if (split == "eval-translated") return {3, {200.0, 0.0, 0.0}};
  throw InvalidArgument("unknown split '" + split + "' (expected train, eval, eval-more-planets, eval-translated)");
}

void save_dataset(const std::string& path, const Dataset& d) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write dataset: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kDatasetVersion);
  put<std::uint64_t>(os, d.samples.size());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(d.n_bodies));
  put<std::uint64_t>(os, d.seed);
  for (double v : d.translation_mean) put<double>(os, v);
  for (const NBodySample& s : d.samples) {
    if (s.n_bodies() != d.n_bodies) throw ShapeError("save_dataset: sample body count differs from header");
    put_array(os, s.masses);
    put_array(os, s.pos0);
    put_array(os, s.vel0);
    put_array(os, s.pos1);
  }
  if (!os) throw IoError("error writing dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset: " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IoError("not a dataset file: " + path);
  }
  if (take<std::uint32_t>(is, path) != kDatasetVersion) throw IoError("unsupported dataset version: " + path);
  Dataset d;
  const auto n_samples = take<std::uint64_t>(is, path);
  d.n_bodies = take<std::uint32_t>(is, path);
  d.seed = take<std::uint64_t>(is, path);
  for (double& v : d.translation_mean) v = take<double>(is, path);
  d.samples.resize(n_samples);
  for (NBodySample& s : d.samples) {
    take_array(is, s.masses, d.n_bodies, path);
    take_array(is, s.pos0, 3 * d.n_bodies, path);
    take_array(is, s.vel0, 3 * d.n_bodies, path);
    take_array(is, s.pos1, 3 * d.n_bodies, path);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in dataset: " + path);
  return d;
}

void export_csv(const std::string& path, const Dataset& d) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write CSV: " + path);
  os.precision(17);
  os << "sample,body,mass,x0,y0,z0,vx,vy,vz,x1,y1,z1\n";
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const NBodySample& s = d.samples[i];
    for (std::size_t b = 0; b < s.n_bodies(); ++b) {
      os << i << ',' << b << ',' << s.masses[b];
      for (const auto* v : {&s.pos0, &s.vel0, &s.pos1}) {
        for (int a = 0; a < 3; ++a) os << ',' << (*v)[3 * b + a];
      }
      os << '\n';
    }
  }
}

void embed_body(const double* pos, const double* vel, double* point_mv, double* velocity_mv) {
  const ga::Multivector p = ga::embed_point({pos[0], pos[1], pos[2]});
  std::copy(p.coeffs.begin(), p.coeffs.end(), point_mv);
  std::fill(velocity_mv, velocity_mv + ga::kNumBlades, 0.0);
  velocity_mv[ga::blade::e01] = vel[0];
  velocity_mv[ga::blade::e02] = vel[1];
  velocity_mv[ga::blade::e03] = vel[2];
}

bool extract_or_fallback(const double* mv, const double* fallback, double* out) {
  const double w = mv[ga::blade::e123];
  if (!(std::abs(w) >= ga::kPointAtInfinityTolerance) || !std::isfinite(w)) {
    std::copy(fallback, fallback + 3, out);
    return false;
  }
  out[0] = mv[ga::blade::e023] / w;
  out[1] = -mv[ga::blade::e013] / w;
  out[2] = mv[ga::blade::e012] / w;
  return true;
}

Batch make_batch(const Dataset& d, const std::vector<std::size_t>& indices) {
  const std::size_t bsz = indices.size();
  const std::size_t n = d.n_bodies;
  Batch b{Tensor({bsz, n, 2, ga::kNumBlades}), Tensor({bsz, n, 1, 1}), Tensor({bsz, n, 7, 1}), Tensor({bsz, n, 1, 3}),
          Tensor({bsz, n, 1, 3})};
  for (std::size_t k = 0; k < bsz; ++k) {
    const NBodySample& s = d.samples.at(indices[k]);
    if (s.n_bodies() != n) throw ShapeError("make_batch: sample body count differs from dataset");
    for (std::size_t i = 0; i < n; ++i) {
      embed_body(&s.pos0[3 * i], &s.vel0[3 * i], &b.mv.at(k, i, 0, 0), &b.mv.at(k, i, 1, 0));
      b.scalars.at(k, i, 0) = s.masses[i];
      b.features.at(k, i, 0) = s.masses[i];
      for (int a = 0; a < 3; ++a) {
        b.features.at(k, i, 1 + a) = s.pos0[3 * i + a];
        b.features.at(k, i, 4 + a) = s.vel0[3 * i + a];
        b.pos0.at(k, i, 0, a) = s.pos0[3 * i + a];
        b.target.at(k, i, 0, a) = s.pos1[3 * i + a];
      }
    }
  }
  return b;
}

NBodySample translated(const NBodySample& s, const Vec3& t) {
  NBodySample r = s;
  for (std::size_t i = 0; i < s.n_bodies(); ++i) {
    for (int a = 0; a < 3; ++a) {
      r.pos0[3 * i + a] += t[a];
      r.pos1[3 * i + a] += t[a];
    }
  }
  return r;
}

}  // namespace gatr::nbody
