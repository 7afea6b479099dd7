#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bcdlab/freeze_mask.hpp"
#include "bcdlab/layer.hpp"
#include "bcdlab/tensor.hpp"

namespace bcdlab {

/// Sequential model ending in exactly one loss head.
struct ModelSpec {
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
  std::string init = "kaiming_uniform";

  std::size_t layer_count() const noexcept { return layers.size(); }
  std::size_t param_count() const;
  /// Width of one input sample row (token count for embedding models).
  std::size_t input_width() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Shape bookkeeping for one layer, derived from the model.
struct LayerPlan {
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  /// Activation rows contributed by one sample at the layer's input.
  std::size_t rows_per_sample = 1;
};

/// Validates composition and returns per-layer shapes. Throws ShapeError.
std::vector<LayerPlan> plan_model(const ModelSpec& model);

/// Parameters indexed by top-level layer, then by tensor within the layer.
using ParamSet = std::vector<std::vector<Tensor>>;

/// Gradients keyed by layer index; only trainable parameterized layers appear.
using GradSet = std::map<std::size_t, std::vector<Tensor>>;

/// Deterministic initialization from model.seed.
/// Linear and attention weights are Kaiming-uniform, biases zero, embeddings N(0, 0.02),
/// layer norm gain one and shift zero.
ParamSet init_params(const ModelSpec& model);

std::size_t float_units(const ParamSet& params);
std::size_t float_units(const GradSet& grads);
std::size_t float_units(const std::vector<Tensor>& tensors);

struct Batch {
  Tensor inputs;
  Tensor targets;
};

/// Counts forward float operations of executed layers.
struct OpCounter {
  std::uint64_t forward = 0;
};

/// Saved layer inputs for backward. Entry k holds the input of layer backward_start + k.
class Tape {
 public:
  Tape() = default;
  Tape(std::size_t layer_count, std::size_t backward_start, std::uint64_t batch_id)
      : layer_count_(layer_count), backward_start_(backward_start), batch_id_(batch_id) {}

  std::size_t layer_count() const noexcept { return layer_count_; }
  std::size_t backward_start() const noexcept { return backward_start_; }
  std::uint64_t batch_id() const noexcept { return batch_id_; }

  void save(std::size_t layer, Tensor input);
  const Tensor& input_of(std::size_t layer) const;
  bool has(std::size_t layer) const noexcept;

  std::size_t stored_count() const noexcept { return saved_.size(); }
  std::size_t float_units() const noexcept;

  Tensor targets;

 private:
  std::size_t layer_count_ = 0;
  std::size_t backward_start_ = 0;
  std::uint64_t batch_id_ = 0;
  std::vector<Tensor> saved_;
};

struct ForwardResult {
  double loss = 0.0;
  Tape tape;
};

/// Mean loss over the batch; keeps activations only for layers >= backward_start.
ForwardResult forward(const ModelSpec& model, const ParamSet& params, const Batch& batch, std::size_t backward_start,
                      OpCounter* ops = nullptr, std::uint64_t batch_id = 0);

/// Same as forward, but begins at `start_layer` with `activation` as that layer's input.
ForwardResult forward_from(const ModelSpec& model, const ParamSet& params, const Tensor& activation,
                           std::size_t start_layer, const Tensor& targets, std::size_t backward_start,
                           OpCounter* ops = nullptr, std::uint64_t batch_id = 0);

/// Activation at the input of layer `end_layer` (inputs unchanged for end_layer = 0).
Tensor forward_prefix(const ModelSpec& model, const ParamSet& params, const Tensor& inputs, std::size_t end_layer,
                      OpCounter* ops = nullptr);

/// Loss only; no tape is kept.
double evaluate_loss(const ModelSpec& model, const ParamSet& params, const Batch& batch);

/// Gradients for exactly the trainable layers of `mask`. Nothing before the first trainable
/// layer is differentiated.
GradSet backward(const ModelSpec& model, const ParamSet& params, const Tape& tape, const FreezeMask& mask);

}  // namespace bcdlab
