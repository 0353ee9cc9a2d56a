#pragma once

// Two interchangeable execution backends for the model wiring: plain tensors of
// any precision (inference) and the autodiff tape (training, 64-bit).

#include <string_view>
#include <vector>

#include "gatr/autodiff/tape.hpp"
#include "gatr/model/parameters.hpp"
#include "gatr/nn/primitives.hpp"

namespace gatr::model {

template <class T>
class PlainBackend {
 public:
  using Value = nn::Tensor<T>;

  explicit PlainBackend(const ParameterSet& params) : params_(&params) {
    cast_.reserve(params.size());
    for (const Tensor& t : params.arrays()) cast_.push_back(t.template cast<T>());
  }

  const Value& param(std::string_view name) const { return cast_[params_->index_of(name)]; }
  bool has_param(std::string_view name) const { return params_->contains(name); }
  Value input(const nn::Tensor<double>& t) const { return t.template cast<T>(); }
  nn::Tensor<double> value(const Value& v) const { return v.template cast<double>(); }

  Value equi_linear(const Value& x, const Value& w) const { return nn::equi_linear(x, w); }
  Value equi_linear(const Value& x, const Value& w, const Value& b) const { return nn::equi_linear(x, w, b); }
  Value dense(const Value& s, const Value& w) const { return nn::dense(s, w); }
  Value dense(const Value& s, const Value& w, const Value& b) const { return nn::dense(s, w, b); }
  Value scalar_part(const Value& x) const { return nn::scalar_part(x); }
  Value scalar_to_mv(const Value& s) const { return nn::scalar_to_mv(s); }
  Value add(const Value& a, const Value& b) const { return nn::add(a, b); }
  Value concat_channels(const Value& a, const Value& b) const { return nn::concat_channels(a, b); }
  Value slice_channels(const Value& x, std::size_t begin, std::size_t count) const {
    return nn::slice_channels(x, begin, count);
  }
  Value geometric_product(const Value& x, const Value& y) const { return nn::geometric_product(x, y); }
  Value equi_join(const Value& x, const Value& y, const Value& ref) const { return nn::equi_join(x, y, ref); }
  Value gated_gelu(const Value& x) const { return nn::gated_gelu(x); }
  Value gelu(const Value& s) const { return nn::gelu(s); }
  Value mv_layer_norm(const Value& x) const { return nn::mv_layer_norm(x, T(nn::kDefaultLayerNormEps)); }
  Value layer_norm(const Value& s) const { return nn::layer_norm(s, T(nn::kDefaultLayerNormEps)); }
  Value attention_logits(const Value& q, const Value& k, const Value& qs, const Value& ks, std::size_t heads) const {
    return nn::attention_logits(q, k, qs, ks, heads);
  }
  Value softmax(const Value& l) const { return nn::softmax(l); }
  Value attend(const Value& w, const Value& v) const { return nn::attend(w, v); }
  Value rotary_embed(const Value& s, const std::vector<double>& positions, double base, std::size_t heads) const {
    return nn::rotary_embed(s, positions, base, heads);
  }
  Value transpose_grid(const Value& x, std::size_t samples) const { return nn::transpose_grid(x, samples); }
  Value reshape(const Value& x, typename Value::Shape shape) const { return x.reshaped(shape); }
  const typename Value::Shape& shape(const Value& v) const { return v.shape(); }

 private:
  const ParameterSet* params_;
  std::vector<Value> cast_;
};

/// Records onto a tape; every parameter array becomes a gradient-requiring leaf.
class TapeBackend {
 public:
  using Value = ad::Var;

  TapeBackend(ad::Tape& tape, const ParameterSet& params) : tape_(&tape), params_(&params) {
    leaves_.reserve(params.size());
    for (const Tensor& t : params.arrays()) leaves_.push_back(tape.leaf(t, true));
  }

  ad::Tape& tape() const { return *tape_; }
  Value param(std::string_view name) const { return leaves_[params_->index_of(name)]; }
  bool has_param(std::string_view name) const { return params_->contains(name); }
  Value input(const nn::Tensor<double>& t) const { return tape_->leaf(t, false); }
  nn::Tensor<double> value(Value v) const { return tape_->value(v); }

  /// Gradients of every parameter array, in declaration order, after tape().backward().
  std::vector<Tensor> gradients() const {
    std::vector<Tensor> g;
    g.reserve(leaves_.size());
    for (Value v : leaves_) g.push_back(tape_->grad(v));
    return g;
  }

  Value equi_linear(Value x, Value w) const { return tape_->equi_linear(x, w); }
  Value equi_linear(Value x, Value w, Value b) const { return tape_->equi_linear(x, w, b); }
  Value dense(Value s, Value w) const { return tape_->dense(s, w); }
  Value dense(Value s, Value w, Value b) const { return tape_->dense(s, w, b); }
  Value scalar_part(Value x) const { return tape_->scalar_part(x); }
  Value scalar_to_mv(Value s) const { return tape_->scalar_to_mv(s); }
  Value add(Value a, Value b) const { return tape_->add(a, b); }
  Value concat_channels(Value a, Value b) const { return tape_->concat_channels(a, b); }
  Value slice_channels(Value x, std::size_t begin, std::size_t count) const {
    return tape_->slice_channels(x, begin, count);
  }
  Value geometric_product(Value x, Value y) const { return tape_->geometric_product(x, y); }
  Value equi_join(Value x, Value y, Value ref) const { return tape_->equi_join(x, y, ref); }
  Value gated_gelu(Value x) const { return tape_->gated_gelu(x); }
  Value gelu(Value s) const { return tape_->gelu(s); }
  Value mv_layer_norm(Value x) const { return tape_->mv_layer_norm(x, nn::kDefaultLayerNormEps); }
  Value layer_norm(Value s) const { return tape_->layer_norm(s, nn::kDefaultLayerNormEps); }
  Value attention_logits(Value q, Value k, Value qs, Value ks, std::size_t heads) const {
    return tape_->attention_logits(q, k, qs, ks, heads);
  }
  Value softmax(Value l) const { return tape_->softmax(l); }
  Value attend(Value w, Value v) const { return tape_->attend(w, v); }
  Value rotary_embed(Value s, const std::vector<double>& positions, double base, std::size_t heads) const {
    return tape_->rotary_embed(s, positions, base, heads);
  }
  Value transpose_grid(Value x, std::size_t samples) const { return tape_->transpose_grid(x, samples); }
  Value reshape(Value x, Tensor::Shape shape) const { return tape_->reshape(x, shape); }
  const Tensor::Shape& shape(Value v) const { return tape_->value(v).shape(); }

 private:
  ad::Tape* tape_;
  const ParameterSet* params_;
  std::vector<Value> leaves_;
};

}  // namespace gatr::model
