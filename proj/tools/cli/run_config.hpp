#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gatr/nbody/experiment.hpp"
#include "gatr/verify/suites.hpp"

namespace gatr::cli {

struct DatasetSection {
  std::uint64_t seed = 0;
  std::size_t train_samples = 1000;
  std::size_t eval_samples = 500;
  nbody::GenerationOptions generation;
};

struct EvalSection {
  int batch_size = 64;
  /// Run the translation metamorphic check when evaluating GATr on a translated split.
  bool metamorphic = true;
};

/// Everything a run depends on. Section seeds default to the top-level seed.
struct RunConfig {
  std::uint64_t seed = 0;
  DatasetSection dataset;
  /// Architecture keys per model kind: {"gatr": {...}, "transformer": {...}, "mlp": {...}}.
  nlohmann::json model = nlohmann::json::object();
  nbody::TrainConfig training;
  EvalSection eval;
  verify::VerifyOptions verify;

  nlohmann::json model_section(nbody::ModelKind kind) const;
};

/// Validates the whole document; unknown keys or bad values throw InvalidArgument.
/// `seed_override` (GATR_SEED) replaces the top-level and every section seed.
RunConfig parse_run_config(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = {});
RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override = {});
nlohmann::json to_json(const RunConfig& c);

/// GATR_SEED from the environment, if set; throws InvalidArgument when malformed.
std::optional<std::uint64_t> env_seed();

}  // namespace gatr::cli
