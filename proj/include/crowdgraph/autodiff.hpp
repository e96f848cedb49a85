#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "crowdgraph/tensor.hpp"

namespace crowdgraph {

class AutodiffError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
// insertion order is a valid topological order for the backward sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  // Appends an op result. `backward` runs only when some input needs a gradient.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  // Gradient of the backward root w.r.t. v; zeros if v did not influence it.
  Tensor grad(Var v) const;

  // Root must hold a single element; its seed gradient is 1.
  void backward(Var root);
  void backward(Var root, const Tensor& seed);
  // Drops every node so the tape can record a fresh pass.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  std::string_view op_name(std::size_t id) const { return nodes_.at(id).op; }
  const std::vector<Var>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }

  // For use inside BackwardFn.
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
  // Accumulation buffer, allocated on first use; nullptr when v needs no gradient.
  Tensor* grad_sink(Var v);

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

namespace ops {

Var sum(Tape& tape, Var x);
Var add(Tape& tape, Var x, Var y);

// x [T, N, Cin] times w [Cin, Cout] (+ b [Cout]) over the channel axis.
Var channel_map(Tape& tape, Var x, Var w, std::optional<Var> b);

// out[t, i, c] = sum_j m[t, i, j] * x[t, j, c].
Var graph_mix(Tape& tape, Var m, Var x);

// Parametric ReLU with one learned slope (shape [1]).
Var prelu(Tape& tape, Var x, Var slope);

// Convolution along the frame axis of x [T, N, Cin] with w [Cout, Cin, K] (K odd),
// symmetric zero padding, output [T, N, Cout].
Var temporal_conv(Tape& tape, Var x, Var w, std::optional<Var> b);

// 2-D convolution of x [Cin, H, W] with w [Cout, Cin, K, K] (K odd), stride 1,
// symmetric zero padding, output [Cout, H, W].
Var plane_conv(Tape& tape, Var x, Var w, std::optional<Var> b);

// Mean over [T, N] of the bivariate Gaussian NLL of target [T, N, 2] under the
// raw head outputs [T, N, 5]. Scalar result.
Var gaussian_nll_mean(Tape& tape, Var raw, Var target);

}  // namespace ops

}  // namespace crowdgraph
