#include "bcdlab/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bcdlab/errors.hpp"

namespace bcdlab {

OptimHyper OptimHyper::sgd_defaults() { return OptimHyper{}; }

OptimHyper OptimHyper::adam_defaults() {
  OptimHyper h;
  h.kind = OptimKind::kAdam;
  h.lr = 1e-4;
  h.momentum = 0.0;
  return h;
}

OptimHyper OptimHyper::adam_large_model_defaults() {
  OptimHyper h = adam_defaults();
  h.lr = 5e-5;
  return h;
}

void OptimHyper::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
}

std::size_t state_buffers(OptimKind kind) { return kind == OptimKind::kSgd ? 1 : 2; }

std::size_t OptimState::float_units() const {
  std::size_t n = 0;
  for (const auto& [_, bufs] : buffers) {
    for (const auto& b : bufs) n += bcdlab::float_units(b);
  }
  return n;
}

OptimState alloc_state(const ModelSpec& model, const FreezeMask& mask, const OptimHyper& hyper) {
  hyper.validate();
  if (mask.layer_count() != model.layer_count()) throw ShapeError("mask does not match the model");
  OptimState state;
  state.kind = hyper.kind;
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    if (!mask.layer_trainable[i]) continue;
    const auto shapes = param_shapes(model.layers[i]);
    if (shapes.empty()) continue;
    auto& bufs = state.buffers[i];
    for (std::size_t b = 0; b < state_buffers(hyper.kind); ++b) {
      std::vector<Tensor> tensors;
      for (const auto& s : shapes) tensors.emplace_back(s);
      bufs.push_back(std::move(tensors));
    }
  }
  if (state.buffers.empty()) throw std::invalid_argument("no trainable parameters in mask");
  return state;
}

void step(ParamSet& params, const GradSet& grads, OptimState& state, const OptimHyper& hyper) {
  if (grads.size() != state.buffers.size()) {
    throw std::invalid_argument("gradients cover " + std::to_string(grads.size()) + " layers, optimizer holds " +
                                std::to_string(state.buffers.size()));
  }
  for (const auto& [layer, _] : grads) {
    if (!state.buffers.contains(layer)) {
      throw std::invalid_argument("gradient for layer " + std::to_string(layer) + " has no optimizer state");
    }
  }
  if (state.kind != hyper.kind) throw std::invalid_argument("optimizer kind changed under existing state");

  const std::uint64_t t = ++state.steps;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));

  for (auto& [layer, bufs] : state.buffers) {
    const auto& g_layer = grads.at(layer);
    auto& p_layer = params[layer];
    for (std::size_t ti = 0; ti < p_layer.size(); ++ti) {
      auto w = p_layer[ti].data();
      auto g = g_layer[ti].data();
      if (g.size() != w.size()) throw ShapeError("gradient shape differs from parameter shape");
      if (hyper.kind == OptimKind::kSgd) {
        auto v = bufs[0][ti].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
          v[k] = hyper.momentum * v[k] + g[k] + hyper.weight_decay * w[k];
          w[k] -= hyper.lr * v[k];
        }
      } else {
        auto m = bufs[0][ti].data();
        auto v = bufs[1][ti].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
          m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
          v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
          const double m_hat = m[k] / bc1;
          const double v_hat = v[k] / bc2;
          w[k] -= hyper.lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + hyper.weight_decay * w[k]);
        }
      }
      require_finite(p_layer[ti], "parameter update");
    }
  }
}

}  // namespace bcdlab
