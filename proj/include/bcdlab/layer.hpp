#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcdlab/tensor.hpp"

namespace bcdlab {

enum class LayerKind {
  kLinear,
  kReLU,
  kGeLU,
  kLayerNorm,
  kResidual,
  kEmbedding,
  kAttention,
  kMseHead,
  kSoftmaxXentHead,
};

std::string_view kind_name(LayerKind kind);
LayerKind kind_from_name(std::string_view name);

/// One layer of a sequential model. Layers are the freezing granularity.
///
/// Field use by kind:
///   linear     in, out, bias        (weight stored [in, out])
///   layernorm  dim
///   residual   inner                (y = x + inner(x))
///   embedding  vocab, dim, seq_len  (ids [batch, seq_len] -> rows [batch*seq_len, dim])
///   attention  dim                  (single causal head over each sample's rows)
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;
  std::size_t dim = 0;
  std::size_t vocab = 0;
  std::size_t seq_len = 1;
  std::vector<LayerSpec> inner;

  static LayerSpec linear(std::size_t in, std::size_t out, bool bias = true);
  static LayerSpec relu();
  static LayerSpec gelu();
  static LayerSpec layer_norm(std::size_t dim);
  static LayerSpec residual(std::vector<LayerSpec> inner);
  static LayerSpec embedding(std::size_t vocab, std::size_t dim, std::size_t seq_len = 1);
  static LayerSpec attention(std::size_t dim);
  static LayerSpec mse();
  static LayerSpec softmax_xent();

  bool is_head() const noexcept { return kind == LayerKind::kMseHead || kind == LayerKind::kSoftmaxXentHead; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

std::vector<Shape> param_shapes(const LayerSpec& layer);
std::size_t param_count(const LayerSpec& layer);

/// Width of the layer's output given its input width. Throws ShapeError when they do not compose.
std::size_t output_width(const LayerSpec& layer, std::size_t input_width);

/// Forward float operations for `rows` input rows of width `input_width`.
std::uint64_t forward_flops(const LayerSpec& layer, std::size_t rows, std::size_t input_width, std::size_t rows_per_sample);

/// `rows_per_sample` groups consecutive rows into one sequence (attention only).
Tensor layer_forward(const LayerSpec& layer, std::span<const Tensor> params, const Tensor& input,
                     std::size_t rows_per_sample);

struct LayerGrads {
  Tensor input;                 // empty when not requested
  std::vector<Tensor> params;   // empty when not requested
};

/// Recomputes the layer's internals from its saved input, then back-propagates `grad_out`.
LayerGrads layer_backward(const LayerSpec& layer, std::span<const Tensor> params, const Tensor& input,
                          const Tensor& grad_out, std::size_t rows_per_sample, bool want_input_grad,
                          bool want_param_grads);

/// Mean loss over rows for a head layer.
double head_loss(const LayerSpec& head, const Tensor& logits, const Tensor& targets);
/// d(mean loss)/d(logits).
Tensor head_grad(const LayerSpec& head, const Tensor& logits, const Tensor& targets);

}  // namespace bcdlab
