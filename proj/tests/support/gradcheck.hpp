#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "crowdgraph/autodiff.hpp"
#include "crowdgraph/model.hpp"
#include "support/oracles.hpp"

namespace crowdgraph::testing {

struct ProbedLoss {
  double loss = 0.0;
  std::vector<bool> prelu_negative;  // sign of every PReLU input on the tape
};

inline ProbedLoss probe_loss(const PreparedWindow& w, const ModelParameters& params,
                             const ModelConfig& cfg) {
  Tape tape;
  const BoundParameters p = bind(tape, params, false);
  Var raw = model_forward(tape, w, p, cfg);
  Var loss = ops::gaussian_nll_mean(tape, raw, tape.constant(w.target));
  ProbedLoss out;
  out.loss = tape.value(loss)[0];
  for (std::size_t id = 0; id < tape.size(); ++id) {
    if (tape.op_name(id) != "prelu") continue;
    for (double v : tape.value(tape.inputs(id)[0]).data()) out.prelu_negative.push_back(v < 0.0);
  }
  return out;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t central = 0;
  std::size_t one_sided = 0;  // a PReLU input changed sign on one side of the probe
  std::size_t skipped = 0;    // sign changes on both sides
};

// Compares backprop gradients of the window loss with finite differences for
// every parameter scalar. Central differences with step h; where a PReLU kink
// lies inside [theta - h, theta + h] the second-order one-sided formula on the
// kink-free side is used instead.
inline GradCheckReport check_window_gradient(const PreparedWindow& w, const ModelParameters& params,
                                             const ModelConfig& cfg, double h = 1e-5) {
  const LossAndGradient analytic = window_loss_and_gradient(w, params, cfg);
  const ProbedLoss base = probe_loss(w, params, cfg);
  GradCheckReport report;
  ModelParameters probe = params;
  for (std::size_t ti = 0; ti < probe.tensors().size(); ++ti) {
    Tensor& value = probe.tensors()[ti].value;
    const Tensor& grad = analytic.grads.tensors()[ti].value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double theta = value[k];
      auto at = [&](double offset) {
        value[k] = theta + offset;
        ProbedLoss r = probe_loss(w, probe, cfg);
        value[k] = theta;
        return r;
      };
      const ProbedLoss up = at(h);
      const ProbedLoss down = at(-h);
      const bool up_ok = up.prelu_negative == base.prelu_negative;
      const bool down_ok = down.prelu_negative == base.prelu_negative;
      double fd = 0.0;
      if (up_ok && down_ok) {
        fd = (up.loss - down.loss) / (2.0 * h);
        ++report.central;
      } else {
        const double dir = up_ok ? 1.0 : -1.0;
        const ProbedLoss far = at(2.0 * h * dir);
        if ((!up_ok && !down_ok) || far.prelu_negative != base.prelu_negative) {
          ++report.skipped;
          continue;
        }
        const ProbedLoss& near = up_ok ? up : down;
        fd = dir * (-3.0 * base.loss + 4.0 * near.loss - far.loss) / (2.0 * h);
        ++report.one_sided;
      }
      const double err = relative_error(grad[k], fd);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = probe.tensors()[ti].name + "[" + std::to_string(k) + "] analytic " +
                       std::to_string(grad[k]) + " numeric " + std::to_string(fd);
      }
    }
  }
  return report;
}

}  // namespace crowdgraph::testing
