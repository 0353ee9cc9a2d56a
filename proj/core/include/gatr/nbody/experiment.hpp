#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gatr/autodiff/adam.hpp"
#include "gatr/model/baselines.hpp"
#include "gatr/model/gatr.hpp"
#include "gatr/nbody/nbody.hpp"

namespace gatr::nbody {

enum class ModelKind { gatr, transformer, mlp };
ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

/// A trainable predictor of final positions with its configuration.
struct Model {
  ModelKind kind = ModelKind::gatr;
  model::GatrConfig gatr;
  model::TransformerConfig transformer;
  model::MlpConfig mlp;
  model::ParameterSet params;

  /// {"kind": ..., "config": {...}} as stored in checkpoints.
  nlohmann::json describe() const;
  void save(const std::string& path) const;
  static Model load(const std::string& path);
};

/// Builds and initializes a model. `config` holds the architecture keys of the chosen
/// kind (unknown keys rejected); the input/output widths are set for the n-body task.
Model make_model(ModelKind kind, const nlohmann::json& config, std::size_t n_bodies, std::uint64_t seed);

struct Prediction {
  Tensor positions;  // [B, n, 1, 3]
  std::size_t fallbacks = 0;
};

/// Final positions predicted at precision T. GATr reads the point in output channel 0
/// added to the input point; the baselines add their output to pos0.
template <class T>
Prediction predict(const Model& m, const Batch& batch);

/// Tape version of `predict` (64-bit, throws at points at infinity).
ad::Var predict_tape(const model::TapeBackend& b, const Model& m, const Batch& batch);

struct TrainConfig {
  int steps = 3000;
  int batch_size = 64;
  double lr_start = 3e-4;
  double lr_end = 3e-6;
  double clip_norm = 0.0;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct LossRow {
  int step;
  double loss;
  double lr;
};

/// Minimizes the mean squared distance between predicted and true final positions.
/// Throws NumericError on a non-finite loss, naming the step.
std::vector<LossRow> train(Model& m, const Dataset& d, const TrainConfig& cfg,
                           const std::function<void(const LossRow&)>& on_step = {});

struct EvalResult {
  double mse = 0.0;
  double stderr_ = 0.0;
  std::size_t n_samples = 0;
  std::size_t fallbacks = 0;
};

/// Mean over samples of the per-sample mean squared body displacement error.
EvalResult evaluate(const Model& m, const Dataset& d, int batch_size = 64);

struct MetamorphicResult {
  double max_abs_deviation = 0.0;
  /// Deviation divided by the largest coordinate magnitude involved.
  double max_rel_deviation = 0.0;
};

/// Compares f(x) with f(x - t) + t for every sample of `d` at 32-bit precision.
MetamorphicResult metamorphic_translation(const Model& m, const Dataset& d, const Vec3& t, int batch_size = 64);

}  // namespace gatr::nbody
