#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace gatr::cli {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InvalidArgument("config: section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) throw InvalidArgument("config: unknown key '" + (section.empty() ? key : section + "." + key) + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_generation(const json& j, nbody::GenerationOptions& g) {
  read(j, "star_mass_min", g.star_mass_min);
  read(j, "star_mass_max", g.star_mass_max);
  read(j, "planet_mass_min", g.planet_mass_min);
  read(j, "planet_mass_max", g.planet_mass_max);
  read(j, "radius_min", g.radius_min);
  read(j, "radius_max", g.radius_max);
  read(j, "velocity_noise", g.velocity_noise);
  read(j, "translation_std", g.translation_std);
  read(j, "random_rotation", g.random_rotation);
  read(j, "permute", g.permute);
  read(j, "dt", g.dt);
  read(j, "steps", g.steps);
  read(j, "max_displacement", g.max_displacement);
  read(j, "rejection_window", g.rejection_window);
  if (!(g.star_mass_min > 0 && g.star_mass_min <= g.star_mass_max && g.planet_mass_min > 0 &&
        g.planet_mass_min <= g.planet_mass_max && g.radius_min > 0 && g.radius_min <= g.radius_max &&
        g.velocity_noise >= 0 && g.translation_std >= 0 && g.dt > 0 && g.steps >= 0 && g.max_displacement > 0 &&
        g.rejection_window > 0)) {
    throw InvalidArgument("config: dataset generation parameters out of range");
  }
}

json generation_json(const nbody::GenerationOptions& g) {
  return {{"star_mass_min", g.star_mass_min},     {"star_mass_max", g.star_mass_max},
          {"planet_mass_min", g.planet_mass_min}, {"planet_mass_max", g.planet_mass_max},
          {"radius_min", g.radius_min},           {"radius_max", g.radius_max},
          {"velocity_noise", g.velocity_noise},   {"translation_std", g.translation_std},
          {"random_rotation", g.random_rotation}, {"permute", g.permute},
          {"dt", g.dt},                           {"steps", g.steps},
          {"max_displacement", g.max_displacement}, {"rejection_window", g.rejection_window}};
}

const std::set<std::string> kGenerationKeys = {
    "star_mass_min", "star_mass_max", "planet_mass_min", "planet_mass_max", "radius_min",
    "radius_max",    "velocity_noise", "translation_std", "random_rotation", "permute",
    "dt",            "steps",          "max_displacement", "rejection_window"};

}  // namespace

json RunConfig::model_section(nbody::ModelKind kind) const {
  const std::string key = nbody::to_string(kind);
  return model.contains(key) ? model.at(key) : json::object();
}

RunConfig parse_run_config(const json& j, std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  try {
    check_keys(j, "", {"seed", "dataset", "model", "training", "eval", "verify"});
    read(j, "seed", c.seed);
    if (seed_override) c.seed = *seed_override;

    c.dataset.seed = c.seed;
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      std::set<std::string> keys = kGenerationKeys;
      keys.insert({"seed", "train_samples", "eval_samples"});
      check_keys(d, "dataset", keys);
      read(d, "seed", c.dataset.seed);
      read(d, "train_samples", c.dataset.train_samples);
      read(d, "eval_samples", c.dataset.eval_samples);
      parse_generation(d, c.dataset.generation);
    }

    if (j.contains("model")) {
      check_keys(j.at("model"), "model", {"gatr", "transformer", "mlp"});
      c.model = j.at("model");
      // Validate every section now, before any work starts.
      for (nbody::ModelKind kind : {nbody::ModelKind::gatr, nbody::ModelKind::transformer, nbody::ModelKind::mlp}) {
        nbody::make_model(kind, c.model_section(kind), 4, 0);
      }
    }

    c.training.seed = c.seed;
    if (j.contains("training")) nbody::from_json(j.at("training"), c.training);
    if (c.training.steps < 0 || c.training.batch_size < 1 || !(c.training.lr_start > 0) || !(c.training.lr_end > 0)) {
      throw InvalidArgument("config: training needs steps >= 0, batch_size >= 1 and positive learning rates");
    }

    if (j.contains("eval")) {
      check_keys(j.at("eval"), "eval", {"batch_size", "metamorphic"});
      read(j.at("eval"), "batch_size", c.eval.batch_size);
      read(j.at("eval"), "metamorphic", c.eval.metamorphic);
      if (c.eval.batch_size < 1) throw InvalidArgument("config: eval.batch_size must be >= 1");
    }

    c.verify.seed = c.seed;
    if (j.contains("verify")) {
      check_keys(j.at("verify"), "verify", {"trials", "tolerance", "seed"});
      read(j.at("verify"), "trials", c.verify.trials);
      read(j.at("verify"), "tolerance", c.verify.tolerance);
      read(j.at("verify"), "seed", c.verify.seed);
    }

    if (seed_override) c.dataset.seed = c.training.seed = c.verify.seed = *seed_override;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config: " + path + ": " + e.what());
  }
  return parse_run_config(j, seed_override);
}

json to_json(const RunConfig& c) {
  json d = generation_json(c.dataset.generation);
  d["seed"] = c.dataset.seed;
  d["train_samples"] = c.dataset.train_samples;
  d["eval_samples"] = c.dataset.eval_samples;
  json training;
  nbody::to_json(training, c.training);
  return {{"seed", c.seed},
          {"dataset", d},
          {"model", c.model},
          {"training", training},
          {"eval", {{"batch_size", c.eval.batch_size}, {"metamorphic", c.eval.metamorphic}}},
          {"verify", {{"trials", c.verify.trials}, {"tolerance", c.verify.tolerance}, {"seed", c.verify.seed}}}};
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("GATR_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0' || v[0] == '-') throw InvalidArgument("GATR_SEED must be a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::uint64_t>(s);
}

}  // namespace gatr::cli
