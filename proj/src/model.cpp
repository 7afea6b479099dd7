#include "bcdlab/model.hpp"

#include <cmath>
#include <stdexcept>

#include "bcdlab/errors.hpp"
#include "bcdlab/rng.hpp"

namespace bcdlab {
namespace {

void init_layer(const LayerSpec& l, Rng& rng, std::vector<Tensor>& out) {
  auto kaiming = [&](std::size_t fan_in, Shape shape) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
  };
  switch (l.kind) {
    case LayerKind::kLinear:
      out.push_back(kaiming(l.in, {l.in, l.out}));
      if (l.bias) out.emplace_back(Shape{l.out});
      break;
    case LayerKind::kLayerNorm:
      out.emplace_back(Shape{l.dim}, 1.0);
      out.emplace_back(Shape{l.dim});
      break;
    case LayerKind::kEmbedding: {
      Tensor t({l.vocab, l.dim});
      for (auto& v : t.data()) v = rng.normal(0.0, 0.02);
      out.push_back(std::move(t));
      break;
    }
    case LayerKind::kAttention:
      for (int i = 0; i < 4; ++i) out.push_back(kaiming(l.dim, {l.dim, l.dim}));
      break;
    case LayerKind::kResidual:
      for (const auto& inner : l.inner) init_layer(inner, rng, out);
      break;
    default: break;
  }
}

}  // namespace

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += bcdlab::param_count(l);
  return n;
}

std::size_t ModelSpec::input_width() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  const auto& first = layers.front();
  switch (first.kind) {
    case LayerKind::kLinear: return first.in;
    case LayerKind::kEmbedding: return first.seq_len;
    case LayerKind::kLayerNorm:
    case LayerKind::kAttention: return first.dim;
    case LayerKind::kResidual:
      for (const auto& inner : first.inner) {
        if (inner.kind == LayerKind::kLinear) return inner.in;
        if (inner.kind == LayerKind::kLayerNorm || inner.kind == LayerKind::kAttention) return inner.dim;
      }
      break;
    default: break;
  }
  throw ShapeError("cannot infer model input width from a leading '" + std::string(kind_name(first.kind)) + "' layer");
}

std::vector<LayerPlan> plan_model(const ModelSpec& model) {
  const auto& layers = model.layers;
  if (layers.size() < 2) throw ShapeError("model needs at least one layer and a loss head");
  if (!layers.back().is_head()) throw ShapeError("last layer must be a loss head (mse or softmax_xent)");
  if (model.param_count() == 0) throw ShapeError("model has no parameterized layer");
  std::vector<LayerPlan> plan(layers.size());
  std::size_t width = model.input_width();
  std::size_t rps = 1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.is_head() && i + 1 != layers.size()) throw ShapeError("loss head must be the last layer");
    if (l.kind == LayerKind::kEmbedding && i != 0) throw ShapeError("embedding must be the first layer");
    plan[i].in_width = width;
    plan[i].rows_per_sample = rps;
    try {
      width = output_width(l, width);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
    if (l.kind == LayerKind::kEmbedding) rps = l.seq_len;
    plan[i].out_width = width;
  }
  return plan;
}

ParamSet init_params(const ModelSpec& model) {
  plan_model(model);
  if (model.init != "kaiming_uniform") throw std::invalid_argument("unknown init scheme '" + model.init + "'");
  Rng rng(model.seed);
  ParamSet params(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) init_layer(model.layers[i], rng, params[i]);
  return params;
}

std::size_t float_units(const std::vector<Tensor>& tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

std::size_t float_units(const ParamSet& params) {
  std::size_t n = 0;
  for (const auto& l : params) n += float_units(l);
  return n;
}

std::size_t float_units(const GradSet& grads) {
  std::size_t n = 0;
  for (const auto& [_, g] : grads) n += float_units(g);
  return n;
}

void Tape::save(std::size_t layer, Tensor input) {
  if (layer != backward_start_ + saved_.size()) throw std::logic_error("tape entries must be saved in layer order");
  saved_.push_back(std::move(input));
}

bool Tape::has(std::size_t layer) const noexcept {
  return layer >= backward_start_ && layer - backward_start_ < saved_.size();
}

const Tensor& Tape::input_of(std::size_t layer) const {
  if (!has(layer)) throw std::out_of_range("tape holds no activation for layer " + std::to_string(layer));
  return saved_[layer - backward_start_];
}

std::size_t Tape::float_units() const noexcept {
  std::size_t n = 0;
  for (const auto& t : saved_) n += t.size();
  return n;
}

ForwardResult forward_from(const ModelSpec& model, const ParamSet& params, const Tensor& activation,
                           std::size_t start_layer, const Tensor& targets, std::size_t backward_start,
                           OpCounter* ops, std::uint64_t batch_id) {
  const auto plan = plan_model(model);
  const std::size_t n = model.layer_count();
  if (params.size() != n) throw ShapeError("parameter set does not match model layer count");
  if (backward_start > n) throw std::out_of_range("backward_start beyond layer count");
  if (start_layer > backward_start) throw std::invalid_argument("forward cannot start after backward_start");
  if (activation.rank() != 2 || activation.cols() != plan[start_layer].in_width) {
    throw ShapeError("input " + shape_str(activation.shape()) + " does not match layer " + std::to_string(start_layer) +
                     " width " + std::to_string(plan[start_layer].in_width));
  }
  ForwardResult result;
  result.tape = Tape(n, backward_start, batch_id);
  Tensor h = activation;
  for (std::size_t i = start_layer; i < n; ++i) {
    const auto& l = model.layers[i];
    if (ops) ops->forward += forward_flops(l, h.rows(), h.cols(), plan[i].rows_per_sample);
    if (i >= backward_start) result.tape.save(i, h);
    if (l.is_head()) {
      result.loss = head_loss(l, h, targets);
    } else {
      h = layer_forward(l, params[i], h, plan[i].rows_per_sample);
    }
  }
  if (!std::isfinite(result.loss)) throw NonFiniteError("non-finite loss");
  if (backward_start < n) result.tape.targets = targets;
  return result;
}

ForwardResult forward(const ModelSpec& model, const ParamSet& params, const Batch& batch, std::size_t backward_start,
                      OpCounter* ops, std::uint64_t batch_id) {
  return forward_from(model, params, batch.inputs, 0, batch.targets, backward_start, ops, batch_id);
}

Tensor forward_prefix(const ModelSpec& model, const ParamSet& params, const Tensor& inputs, std::size_t end_layer,
                      OpCounter* ops) {
  const auto plan = plan_model(model);
  if (end_layer >= model.layer_count()) throw std::out_of_range("prefix must end before the loss head");
  if (inputs.rank() != 2 || inputs.cols() != plan[0].in_width) throw ShapeError("prefix input width mismatch");
  Tensor h = inputs;
  for (std::size_t i = 0; i < end_layer; ++i) {
    if (ops) ops->forward += forward_flops(model.layers[i], h.rows(), h.cols(), plan[i].rows_per_sample);
    h = layer_forward(model.layers[i], params[i], h, plan[i].rows_per_sample);
  }
  return h;
}

double evaluate_loss(const ModelSpec& model, const ParamSet& params, const Batch& batch) {
  return forward(model, params, batch, model.layer_count()).loss;
}

GradSet backward(const ModelSpec& model, const ParamSet& params, const Tape& tape, const FreezeMask& mask) {
  const std::size_t n = model.layer_count();
  if (tape.layer_count() != n || mask.layer_count() != n) throw ShapeError("tape/mask do not match the model");
  GradSet grads;
  const std::size_t first = mask.first_trainable();
  if (first == n) return grads;
  if (tape.backward_start() > first) {
    throw std::invalid_argument("tape starts at layer " + std::to_string(tape.backward_start()) +
                                " but layer " + std::to_string(first) + " is trainable");
  }
  const auto plan = plan_model(model);
  const std::size_t head = n - 1;
  Tensor g = head_grad(model.layers[head], tape.input_of(head), tape.targets);
  for (std::size_t i = head; i-- > first;) {
    const bool want_params = mask.layer_trainable[i] && !params[i].empty();
    const bool want_input = i > first;
    LayerGrads lg = layer_backward(model.layers[i], params[i], tape.input_of(i), g, plan[i].rows_per_sample,
                                   want_input, want_params);
    if (want_params) grads.emplace(i, std::move(lg.params));
    if (want_input) g = std::move(lg.input);
  }
  return grads;
}

}  // namespace bcdlab
