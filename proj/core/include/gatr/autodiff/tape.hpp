#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatr/nn/tensor.hpp"

namespace gatr::ad {

using Tensor = nn::Tensor<double>;

/// Handle to a node on a tape.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

/// Static attributes of a recorded op.
struct OpAttrs {
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  double f = 0.0;
  std::vector<double> positions;
  nn::Tensor<double>::Shape shape{};
};

using ForwardFn = Tensor (*)(std::span<const Tensor* const> inputs, const OpAttrs& attrs);
/// Accumulates into grads[k] (null when input k needs no gradient).
using BackwardFn = void (*)(std::span<const Tensor* const> inputs, const Tensor& output, const Tensor& grad_output,
                            const OpAttrs& attrs, std::span<Tensor* const> grads);

struct OpKernel {
  std::string_view name;
  int min_arity;
  int max_arity;
  ForwardFn forward;
  BackwardFn backward;
};

/// All ops the tape can record, in registration order.
std::span<const OpKernel> registered_ops();
/// Index into registered_ops(); throws InvalidArgument for an unregistered name.
int op_id(std::string_view name);

/// Recorded computation graph with reverse-mode gradients.
///
/// Values are computed when an op is recorded. Changing a leaf with `set_value`
/// marks the tape stale until `forward()` replays it; `backward()` on a stale
/// tape throws.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = true);
  Var record(std::string_view op, std::initializer_list<Var> inputs, OpAttrs attrs = {});
  Var record(int op, std::span<const Var> inputs, OpAttrs attrs = {});

  const Tensor& value(Var v) const;
  /// Gradient accumulated by the last backward(); zero-filled if none reached `v`.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  void set_value(Var leaf, Tensor value);
  /// Recomputes every non-leaf node in recording order.
  void forward();
  /// Seeds d(output) with `seed` (ones when empty) and back-propagates.
  void backward(Var output, const Tensor& seed = {});

  std::size_t size() const { return nodes_.size(); }
  std::string_view op_name(Var v) const;

  // Typed helpers for the registered ops.
  Var equi_linear(Var x, Var w, Var bias);
  Var equi_linear(Var x, Var w);
  Var dense(Var s, Var w, Var bias);
  Var dense(Var s, Var w);
  Var scalar_part(Var x);
  Var scalar_to_mv(Var s);
  Var add(Var a, Var b);
  Var scale(Var a, double factor);
  Var concat_channels(Var a, Var b);
  Var slice_channels(Var x, std::size_t begin, std::size_t count);
  Var geometric_product(Var x, Var y);
  Var wedge(Var x, Var y);
  Var join(Var x, Var y);
  Var equi_join(Var x, Var y, Var reference);
  Var dual(Var x);
  Var grade_projection(Var x, int grade);
  Var inner(Var x, Var y);
  Var gated_gelu(Var x);
  Var gelu(Var s);
  Var mv_layer_norm(Var x, double eps);
  Var layer_norm(Var s, double eps);
  Var attention_logits(Var q, Var k, Var qs, Var ks, std::size_t heads);
  Var softmax(Var logits);
  Var attend(Var weights, Var v);
  Var rotary_embed(Var s, std::vector<double> positions, double base, std::size_t heads);
  Var transpose_grid(Var x, std::size_t samples);
  Var reshape(Var x, nn::Tensor<double>::Shape shape);
  Var extract_points(Var x, std::size_t channel);
  Var squared_error(Var prediction, Var target);
  Var sum(Var x);

 private:
  struct Node {
    int op = -1;  // -1 for leaves
    std::vector<Var> inputs;
    OpAttrs attrs;
    Tensor value;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Tensor compute(const Node& n) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool stale_ = false;
};

}  // namespace gatr::ad
