#include "crowdgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowdgraph/gaussian_head.hpp"

namespace crowdgraph {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, {}, false});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{"parameter", std::move(value), {}, {}, {}, true});
  return Var{nodes_.size() - 1};
}

Var Tape::record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (backward_done_) throw AutodiffError("tape already differentiated; call reset() first");
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [&](Var v) { return node(v).requires_grad; });
  nodes_.push_back(Node{op, std::move(value), {}, std::move(inputs),
                        needs ? std::move(backward) : BackwardFn{}, needs});
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw AutodiffError("variable does not belong to this tape");
  return nodes_[v.id];
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

Tensor* Tape::grad_sink(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

void Tape::backward(Var root) {
  if (node(root).value.size() != 1) {
    throw AutodiffError("backward() without a seed needs a scalar root");
  }
  backward(root, Tensor(node(root).value.shape(), 1.0));
}

void Tape::backward(Var root, const Tensor& seed) {
  if (backward_done_) throw AutodiffError("backward() called twice without reset()");
  seed.expect_shape(node(root).value.shape(), "backward seed");
  backward_done_ = true;
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = seed;
  for (std::size_t k = root.id + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (n.backward && !n.grad.empty()) n.backward(*this, k);
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

namespace ops {

namespace {

void expect_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(t.shape()));
  }
}

}  // namespace

Var sum(Tape& tape, Var x) {
  double total = 0.0;
  for (double v : tape.value(x).data()) total += v;
  return tape.record("sum", Tensor({1}, total), {x}, [x](Tape& tp, std::size_t self) {
    const double g = tp.grad_of(self)[0];
    Tensor* gx = tp.grad_sink(x);
    for (double& v : gx->data()) v += g;
  });
}

Var add(Tape& tape, Var x, Var y) {
  Tensor out = tape.value(x);
  out.add_scaled(tape.value(y));
  return tape.record("add", std::move(out), {x, y}, [x, y](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    if (Tensor* gx = tp.grad_sink(x)) gx->add_scaled(g);
    if (Tensor* gy = tp.grad_sink(y)) gy->add_scaled(g);
  });
}

Var channel_map(Tape& tape, Var x, Var w, std::optional<Var> b) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(w);
  expect_rank(xv, 3, "channel_map input");
  expect_rank(wv, 2, "channel_map weight");
  const std::size_t rows = xv.dim(0) * xv.dim(1);
  const std::size_t cin = xv.dim(2);
  const std::size_t cout = wv.dim(1);
  if (wv.dim(0) != cin) throw ShapeError("channel_map: weight rows must equal input channels");
  if (b) tape.value(*b).expect_shape({cout}, "channel_map bias");

  Tensor out({xv.dim(0), xv.dim(1), cout});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t co = 0; co < cout; ++co) {
      double acc = b ? tape.value(*b)[co] : 0.0;
      for (std::size_t ci = 0; ci < cin; ++ci) acc += xv[r * cin + ci] * wv[ci * cout + co];
      out[r * cout + co] = acc;
    }
  }
  std::vector<Var> inputs{x, w};
  if (b) inputs.push_back(*b);
  return tape.record("channel_map", std::move(out), std::move(inputs),
                     [x, w, b, rows, cin, cout](Tape& tp, std::size_t self) {
                       const Tensor& g = tp.grad_of(self);
                       const Tensor& xv = tp.value(x);
                       const Tensor& wv = tp.value(w);
                       Tensor* gx = tp.grad_sink(x);
                       Tensor* gw = tp.grad_sink(w);
                       Tensor* gb = b ? tp.grad_sink(*b) : nullptr;
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t co = 0; co < cout; ++co) {
                           const double go = g[r * cout + co];
                           if (gb) (*gb)[co] += go;
                           for (std::size_t ci = 0; ci < cin; ++ci) {
                             if (gx) (*gx)[r * cin + ci] += go * wv[ci * cout + co];
                             if (gw) (*gw)[ci * cout + co] += go * xv[r * cin + ci];
                           }
                         }
                       }
                     });
}

Var graph_mix(Tape& tape, Var m, Var x) {
  const Tensor& mv = tape.value(m);
  const Tensor& xv = tape.value(x);
  expect_rank(xv, 3, "graph_mix features");
  const std::size_t frames = xv.dim(0);
  const std::size_t n = xv.dim(1);
  const std::size_t c = xv.dim(2);
  mv.expect_shape({frames, n, n}, "graph_mix operator");

  Tensor out({frames, n, c});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += mv.at(t, i, j) * xv.at(t, j, ch);
        out.at(t, i, ch) = acc;
      }
    }
  }
  return tape.record("graph_mix", std::move(out), {m, x},
                     [m, x, frames, n, c](Tape& tp, std::size_t self) {
                       const Tensor& g = tp.grad_of(self);
                       const Tensor& mv = tp.value(m);
                       const Tensor& xv = tp.value(x);
                       Tensor* gm = tp.grad_sink(m);
                       Tensor* gx = tp.grad_sink(x);
                       for (std::size_t t = 0; t < frames; ++t) {
                         for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < n; ++j) {
                             for (std::size_t ch = 0; ch < c; ++ch) {
                               const double go = g.at(t, i, ch);
                               if (gm) gm->at(t, i, j) += go * xv.at(t, j, ch);
                               if (gx) gx->at(t, j, ch) += go * mv.at(t, i, j);
                             }
                           }
                         }
                       }
                     });
}

Var prelu(Tape& tape, Var x, Var slope) {
  const Tensor& xv = tape.value(x);
  tape.value(slope).expect_shape({1}, "prelu slope");
  const double a = tape.value(slope)[0];
  Tensor out = xv;
  for (double& v : out.data()) {
    if (v < 0.0) v *= a;
  }
  return tape.record("prelu", std::move(out), {x, slope}, [x, slope](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    const Tensor& xv = tp.value(x);
    const double a = tp.value(slope)[0];
    Tensor* gx = tp.grad_sink(x);
    Tensor* ga = tp.grad_sink(slope);
    for (std::size_t k = 0; k < xv.size(); ++k) {
      const bool negative = xv[k] < 0.0;
      if (gx) (*gx)[k] += negative ? a * g[k] : g[k];
      if (ga && negative) (*ga)[0] += xv[k] * g[k];
    }
  });
}

Var temporal_conv(Tape& tape, Var x, Var w, std::optional<Var> b) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(w);
  expect_rank(xv, 3, "temporal_conv input");
  expect_rank(wv, 3, "temporal_conv weight");
  const std::size_t frames = xv.dim(0);
  const std::size_t n = xv.dim(1);
  const std::size_t cin = xv.dim(2);
  const std::size_t cout = wv.dim(0);
  const std::size_t k = wv.dim(2);
  if (wv.dim(1) != cin) throw ShapeError("temporal_conv: weight input channels mismatch");
  if (k % 2 == 0) throw ShapeError("temporal_conv: kernel width must be odd");
  if (b) tape.value(*b).expect_shape({cout}, "temporal_conv bias");
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto T = static_cast<std::ptrdiff_t>(frames);

  Tensor out({frames, n, cout});
  for (std::ptrdiff_t t = 0; t < T; ++t) {
    for (std::size_t node = 0; node < n; ++node) {
      for (std::size_t co = 0; co < cout; ++co) {
        double acc = b ? tape.value(*b)[co] : 0.0;
        for (std::size_t tap = 0; tap < k; ++tap) {
          const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(tap) - pad;
          if (src < 0 || src >= T) continue;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            acc += wv.at(co, ci, tap) * xv.at(static_cast<std::size_t>(src), node, ci);
          }
        }
        out.at(static_cast<std::size_t>(t), node, co) = acc;
      }
    }
  }
  std::vector<Var> inputs{x, w};
  if (b) inputs.push_back(*b);
  return tape.record(
      "temporal_conv", std::move(out), std::move(inputs),
      [x, w, b, n, cin, cout, k, pad, T](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        const Tensor& xv = tp.value(x);
        const Tensor& wv = tp.value(w);
        Tensor* gx = tp.grad_sink(x);
        Tensor* gw = tp.grad_sink(w);
        Tensor* gb = b ? tp.grad_sink(*b) : nullptr;
        for (std::ptrdiff_t t = 0; t < T; ++t) {
          for (std::size_t node = 0; node < n; ++node) {
            for (std::size_t co = 0; co < cout; ++co) {
              const double go = g.at(static_cast<std::size_t>(t), node, co);
              if (gb) (*gb)[co] += go;
              for (std::size_t tap = 0; tap < k; ++tap) {
                const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(tap) - pad;
                if (src < 0 || src >= T) continue;
                const auto s = static_cast<std::size_t>(src);
                for (std::size_t ci = 0; ci < cin; ++ci) {
                  if (gx) gx->at(s, node, ci) += go * wv.at(co, ci, tap);
                  if (gw) gw->at(co, ci, tap) += go * xv.at(s, node, ci);
                }
              }
            }
          }
        }
      });
}

Var plane_conv(Tape& tape, Var x, Var w, std::optional<Var> b) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(w);
  expect_rank(xv, 3, "plane_conv input");
  expect_rank(wv, 4, "plane_conv weight");
  const std::size_t cin = xv.dim(0);
  const std::size_t height = xv.dim(1);
  const std::size_t width = xv.dim(2);
  const std::size_t cout = wv.dim(0);
  const std::size_t k = wv.dim(2);
  if (wv.dim(1) != cin) {
    throw ShapeError("plane_conv: weight expects " + std::to_string(wv.dim(1)) +
                     " input channels, input has " + std::to_string(cin));
  }
  if (wv.dim(3) != k || k % 2 == 0) throw ShapeError("plane_conv: kernel must be square and odd");
  if (b) tape.value(*b).expect_shape({cout}, "plane_conv bias");
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(height);
  const auto W = static_cast<std::ptrdiff_t>(width);

  Tensor out({cout, height, width});
  for (std::size_t co = 0; co < cout; ++co) {
    const double bias = b ? tape.value(*b)[co] : 0.0;
    for (std::ptrdiff_t h = 0; h < H; ++h) {
      for (std::ptrdiff_t wpos = 0; wpos < W; ++wpos) {
        double acc = bias;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t kh = 0; kh < k; ++kh) {
            const std::ptrdiff_t sh = h + static_cast<std::ptrdiff_t>(kh) - pad;
            if (sh < 0 || sh >= H) continue;
            for (std::size_t kw = 0; kw < k; ++kw) {
              const std::ptrdiff_t sw = wpos + static_cast<std::ptrdiff_t>(kw) - pad;
              if (sw < 0 || sw >= W) continue;
              acc += wv.at(co, ci, kh, kw) *
                     xv.at(ci, static_cast<std::size_t>(sh), static_cast<std::size_t>(sw));
            }
          }
        }
        out.at(co, static_cast<std::size_t>(h), static_cast<std::size_t>(wpos)) = acc;
      }
    }
  }
  std::vector<Var> inputs{x, w};
  if (b) inputs.push_back(*b);
  return tape.record(
      "plane_conv", std::move(out), std::move(inputs),
      [x, w, b, cin, cout, k, pad, H, W](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        const Tensor& xv = tp.value(x);
        const Tensor& wv = tp.value(w);
        Tensor* gx = tp.grad_sink(x);
        Tensor* gw = tp.grad_sink(w);
        Tensor* gb = b ? tp.grad_sink(*b) : nullptr;
        for (std::size_t co = 0; co < cout; ++co) {
          for (std::ptrdiff_t h = 0; h < H; ++h) {
            for (std::ptrdiff_t wpos = 0; wpos < W; ++wpos) {
              const double go =
                  g.at(co, static_cast<std::size_t>(h), static_cast<std::size_t>(wpos));
              if (gb) (*gb)[co] += go;
              for (std::size_t ci = 0; ci < cin; ++ci) {
                for (std::size_t kh = 0; kh < k; ++kh) {
                  const std::ptrdiff_t sh = h + static_cast<std::ptrdiff_t>(kh) - pad;
                  if (sh < 0 || sh >= H) continue;
                  for (std::size_t kw = 0; kw < k; ++kw) {
                    const std::ptrdiff_t sw = wpos + static_cast<std::ptrdiff_t>(kw) - pad;
                    if (sw < 0 || sw >= W) continue;
                    const auto uh = static_cast<std::size_t>(sh);
                    const auto uw = static_cast<std::size_t>(sw);
                    if (gx) gx->at(ci, uh, uw) += go * wv.at(co, ci, kh, kw);
                    if (gw) gw->at(co, ci, kh, kw) += go * xv.at(ci, uh, uw);
                  }
                }
              }
            }
          }
        }
      });
}

Var gaussian_nll_mean(Tape& tape, Var raw, Var target) {
  const Tensor& rv = tape.value(raw);
  const Tensor& tv = tape.value(target);
  expect_rank(rv, 3, "gaussian_nll_mean raw");
  if (rv.dim(2) != kGaussianChannels) throw ShapeError("gaussian_nll_mean: raw needs 5 channels");
  tv.expect_shape({rv.dim(0), rv.dim(1), 2}, "gaussian_nll_mean target");
  const std::size_t points = rv.dim(0) * rv.dim(1);
  if (points == 0) throw ShapeError("gaussian_nll_mean: empty input");

  Tensor d_raw(rv.shape());
  double total = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    const std::span<const double, kGaussianChannels> r(&rv.data()[p * kGaussianChannels],
                                                        kGaussianChannels);
    const NllGradient res = nll_with_raw_gradient({tv[2 * p], tv[2 * p + 1]}, r);
    total += res.value;
    for (std::size_t c = 0; c < kGaussianChannels; ++c) {
      d_raw[p * kGaussianChannels + c] = res.d_raw[c] / static_cast<double>(points);
    }
  }
  return tape.record("gaussian_nll_mean", Tensor({1}, total / static_cast<double>(points)),
                     {raw, target},
                     [raw, d_raw = std::move(d_raw)](Tape& tp, std::size_t self) {
                       if (Tensor* gr = tp.grad_sink(raw)) gr->add_scaled(d_raw, tp.grad_of(self)[0]);
                     });
}

}  // namespace ops

}  // namespace crowdgraph
