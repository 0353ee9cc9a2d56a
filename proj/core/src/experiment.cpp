#include "gatr/nbody/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace gatr::nbody {
namespace {

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gatr") return ModelKind::gatr;
  if (name == "transformer") return ModelKind::transformer;
  if (name == "mlp") return ModelKind::mlp;
  throw InvalidArgument("unknown model '" + name + "' (expected gatr, transformer or mlp)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gatr:
      return "gatr";
    case ModelKind::transformer:
      return "transformer";
    case ModelKind::mlp:
      return "mlp";
  }
  return "?";
}

nlohmann::json Model::describe() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  switch (kind) {
    case ModelKind::gatr:
      j["config"] = gatr;
      break;
    case ModelKind::transformer:
      j["config"] = transformer;
      break;
    case ModelKind::mlp:
      j["config"] = mlp;
      break;
  }
  return j;
}

void Model::save(const std::string& path) const { model::save_checkpoint(path, describe(), params); }

Model Model::load(const std::string& path) {
  model::Checkpoint ck = model::load_checkpoint(path);
  Model m;
  m.kind = parse_model_kind(ck.config.at("kind").get<std::string>());
  const nlohmann::json& c = ck.config.at("config");
  model::ParameterSet expected;
  switch (m.kind) {
    case ModelKind::gatr:
      c.get_to(m.gatr);
      expected = model::init_gatr_params(m.gatr);
      break;
    case ModelKind::transformer:
      c.get_to(m.transformer);
      expected = model::init_transformer_params(m.transformer);
      break;
    case ModelKind::mlp:
      c.get_to(m.mlp);
      expected = model::init_mlp_params(m.mlp);
      break;
  }
  if (expected.names() != ck.params.names()) throw IoError("checkpoint parameters do not match its config: " + path);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected.arrays()[i].shape() != ck.params.arrays()[i].shape()) {
      throw IoError("checkpoint array shape mismatch for " + expected.names()[i] + ": " + path);
    }
  }
  m.params = std::move(ck.params);
  return m;
}

Model make_model(ModelKind kind, const nlohmann::json& config, std::size_t n_bodies, std::uint64_t seed) {
  Model m;
  m.kind = kind;
  const nlohmann::json cfg = config.is_null() ? nlohmann::json::object() : config;
  switch (kind) {
    case ModelKind::gatr:
      cfg.get_to(m.gatr);
      m.gatr.in_mv_channels = 2;
      m.gatr.in_scalar_channels = 1;
      m.gatr.out_mv_channels = 1;
      m.gatr.out_scalar_channels = 1;
      m.gatr.axial = false;
      m.gatr.seed = seed;
      m.params = model::init_gatr_params(m.gatr);
      break;
    case ModelKind::transformer:
      cfg.get_to(m.transformer);
      m.transformer.in_features = 7;
      m.transformer.out_features = 3;
      m.transformer.seed = seed;
      m.params = model::init_transformer_params(m.transformer);
      break;
    case ModelKind::mlp:
      cfg.get_to(m.mlp);
      m.mlp.n_items = static_cast<int>(n_bodies);
      m.mlp.in_features = 7;
      m.mlp.out_features = 3;
      m.mlp.seed = seed;
      m.params = model::init_mlp_params(m.mlp);
      break;
  }
  return m;
}

template <class T>
Prediction predict(const Model& m, const Batch& batch) {
  model::PlainBackend<T> b(m.params);
  const std::size_t bsz = batch.pos0.dim(0);
  const std::size_t n = batch.pos0.dim(1);
  Prediction p{Tensor({bsz, n, 1, 3}), 0};
  if (m.kind == ModelKind::gatr) {
    auto out = model::gatr_forward(b, m.gatr, batch.mv, batch.scalars).first;
    const auto point = b.input(nn::slice_channels(batch.mv, 0, 1));
    const Tensor sum = b.value(b.add(b.slice_channels(out, 0, 1), point));
    for (std::size_t k = 0; k < bsz; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!extract_or_fallback(&sum.at(k, i, 0, 0), &batch.pos0.at(k, i, 0, 0), &p.positions.at(k, i, 0, 0))) {
          ++p.fallbacks;
        }
      }
    }
    return p;
  }
  const auto out = m.kind == ModelKind::transformer ? model::transformer_forward(b, m.transformer, batch.features)
                                                    : model::mlp_forward(b, m.mlp, batch.features);
  const Tensor sum = b.value(b.add(out.reshaped({bsz, n, 1, 3}), b.input(batch.pos0)));
  p.positions = sum;
  return p;
}

template Prediction predict<float>(const Model&, const Batch&);
template Prediction predict<double>(const Model&, const Batch&);

ad::Var predict_tape(const model::TapeBackend& b, const Model& m, const Batch& batch) {
  ad::Tape& tape = b.tape();
  const std::size_t bsz = batch.pos0.dim(0);
  const std::size_t n = batch.pos0.dim(1);
  if (m.kind == ModelKind::gatr) {
    auto out = model::gatr_forward(b, m.gatr, batch.mv, batch.scalars).first;
    auto sum = b.add(b.slice_channels(out, 0, 1), b.input(nn::slice_channels(batch.mv, 0, 1)));
    return tape.extract_points(sum, 0);
  }
  auto out = m.kind == ModelKind::transformer ? model::transformer_forward(b, m.transformer, batch.features)
                                              : model::mlp_forward(b, m.mlp, batch.features);
  return b.add(b.reshape(out, {bsz, n, 1, 3}), b.input(batch.pos0));
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"steps", c.steps},       {"batch_size", c.batch_size}, {"lr_start", c.lr_start},
       {"lr_end", c.lr_end},     {"clip_norm", c.clip_norm},   {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::set<std::string> keys = {"steps", "batch_size", "lr_start", "lr_end", "clip_norm", "seed"};
  if (!j.is_object()) throw InvalidArgument("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (keys.count(key) == 0) throw InvalidArgument("training config: unknown key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("steps", c.steps);
  get("batch_size", c.batch_size);
  get("lr_start", c.lr_start);
  get("lr_end", c.lr_end);
  get("clip_norm", c.clip_norm);
  get("seed", c.seed);
}

std::vector<LossRow> train(Model& m, const Dataset& d, const TrainConfig& cfg,
                           const std::function<void(const LossRow&)>& on_step) {
  if (d.samples.empty()) throw InvalidArgument("train: empty dataset");
  if (cfg.steps < 0 || cfg.batch_size < 1) throw InvalidArgument("train: steps must be >= 0 and batch_size >= 1");
  if (m.kind == ModelKind::mlp && static_cast<std::size_t>(m.mlp.n_items) != d.n_bodies) {
    throw InvalidArgument("train: the MLP baseline was built for " + std::to_string(m.mlp.n_items) +
                          " bodies but the dataset has " + std::to_string(d.n_bodies));
  }
  ad::AdamConfig acfg;
  acfg.lr_start = cfg.lr_start;
  acfg.lr_end = cfg.lr_end;
  acfg.total_steps = cfg.steps;
  acfg.clip_norm = cfg.clip_norm;
  ad::Adam adam(acfg);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = range(0, d.samples.size());
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t bsz = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), d.samples.size());
  std::size_t cursor = 0;

  std::vector<LossRow> curve;
  curve.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    if (cursor + bsz > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                       order.begin() + static_cast<std::ptrdiff_t>(cursor + bsz));
    cursor += bsz;
    const Batch batch = make_batch(d, idx);

    ad::Tape tape;
    model::TapeBackend b(tape, m.params);
    ad::Var loss;
    try {
      loss = tape.squared_error(predict_tape(b, m, batch), b.input(batch.target));
    } catch (const NumericError& e) {
      throw NumericError("train: step " + std::to_string(step) + ": " + e.what());
    }
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step) + " (last finite loss " +
                         (curve.empty() ? std::string("n/a") : std::to_string(curve.back().loss)) + ")");
    }
    tape.backward(loss);
    std::vector<Tensor> grads = b.gradients();
    const double lr = adam.step(m.params.arrays(), grads);
    curve.push_back({step, value, lr});
    if (on_step) on_step(curve.back());
  }
  return curve;
}

EvalResult evaluate(const Model& m, const Dataset& d, int batch_size) {
  if (d.samples.empty()) throw InvalidArgument("evaluate: empty dataset");
  if (m.kind == ModelKind::mlp && static_cast<std::size_t>(m.mlp.n_items) != d.n_bodies) {
    throw InvalidArgument("evaluate: the MLP baseline only supports " + std::to_string(m.mlp.n_items) +
                          "-body systems; the dataset has " + std::to_string(d.n_bodies));
  }
  std::vector<double> per_sample;
  per_sample.reserve(d.samples.size());
  EvalResult r;
  const auto bsz = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < d.samples.size(); start += bsz) {
    const Batch batch = make_batch(d, range(start, std::min(d.samples.size(), start + bsz)));
    const Prediction p = predict<double>(m, batch);
    r.fallbacks += p.fallbacks;
    for (std::size_t k = 0; k < batch.pos0.dim(0); ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d.n_bodies; ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
          const double e = p.positions.at(k, i, 0, a) - batch.target.at(k, i, 0, a);
          acc += e * e;
        }
      }
      per_sample.push_back(acc / static_cast<double>(d.n_bodies));
    }
  }
  const double n = static_cast<double>(per_sample.size());
  for (double v : per_sample) r.mse += v;
  r.mse /= n;
  if (per_sample.size() > 1) {
    double var = 0.0;
    for (double v : per_sample) var += (v - r.mse) * (v - r.mse);
    r.stderr_ = std::sqrt(var / (n - 1.0) / n);
  }
  r.n_samples = per_sample.size();
  if (!std::isfinite(r.mse)) throw NumericError("evaluate: non-finite MSE");
  return r;
}

MetamorphicResult metamorphic_translation(const Model& m, const Dataset& d, const Vec3& t, int batch_size) {
  if (d.samples.empty()) throw InvalidArgument("metamorphic_translation: empty dataset");
  Dataset shifted = d;
  const Vec3 back{-t[0], -t[1], -t[2]};
  for (NBodySample& s : shifted.samples) s = translated(s, back);
  MetamorphicResult r;
  const auto bsz = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < d.samples.size(); start += bsz) {
    const auto idx = range(start, std::min(d.samples.size(), start + bsz));
    const Prediction direct = predict<float>(m, make_batch(d, idx));
    const Prediction moved = predict<float>(m, make_batch(shifted, idx));
    for (std::size_t i = 0; i < direct.positions.size(); ++i) {
      const double expected = moved.positions[i] + t[i % 3];
      const double dev = std::abs(direct.positions[i] - expected);
      const double scale = std::max({1.0, std::abs(direct.positions[i]), std::abs(expected)});
      r.max_abs_deviation = std::max(r.max_abs_deviation, dev);
      r.max_rel_deviation = std::max(r.max_rel_deviation, dev / scale);
    }
  }
  return r;
}

}  // namespace gatr::nbody
