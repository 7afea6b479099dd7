#include "bcdlab/layer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bcdlab/errors.hpp"

namespace bcdlab {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluCoeff = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

// C[n,m] = A[n,k] * B[k,m]
Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) throw ShapeError("matmul inner dimensions differ");
  Tensor c = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto crow = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      auto brow = b.row(p);
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

// C[k,m] = A[n,k]^T * B[n,m]; accumulates over rows in ascending order.
Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != n) throw ShapeError("matmul_tn row counts differ");
  Tensor c = Tensor::matrix(k, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto brow = b.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      auto crow = c.row(p);
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

// C[n,k] = A[n,m] * B[k,m]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  if (b.cols() != m) throw ShapeError("matmul_nt column counts differ");
  Tensor c = Tensor::matrix(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    auto arow = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      auto brow = b.row(p);
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += arow[j] * brow[j];
      c.at(i, p) = s;
    }
  }
  return c;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Tensor column_sums(const Tensor& a) {
  Tensor out({a.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

void require_width(const Tensor& input, std::size_t width, std::string_view what) {
  if (input.rank() != 2 || input.cols() != width) {
    throw ShapeError(std::string(what) + " expects input width " + std::to_string(width) + ", got " +
                     shape_str(input.shape()));
  }
}

// ---- linear ----

Tensor linear_forward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x) {
  require_width(x, l.in, "linear");
  Tensor y = matmul(x, p[0]);
  if (l.bias) {
    for (std::size_t i = 0; i < y.rows(); ++i) {
      auto r = y.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += p[1][j];
    }
  }
  return y;
}

LayerGrads linear_backward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, const Tensor& gy,
                           bool want_input, bool want_params) {
  LayerGrads g;
  if (want_input) g.input = matmul_nt(gy, p[0]);
  if (want_params) {
    g.params.push_back(matmul_tn(x, gy));
    if (l.bias) g.params.push_back(column_sums(gy));
  }
  return g;
}

// ---- activations ----

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gy) {
  Tensor gx = gy;
  auto xs = x.data();
  auto gs = gx.data();
  // Subgradient at exactly zero is 0.
  for (std::size_t i = 0; i < gs.size(); ++i) gs[i] = xs[i] > 0.0 ? gs[i] : 0.0;
  return gx;
}

Tensor gelu_forward(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) {
    const double u = kSqrt2OverPi * (v + kGeluCoeff * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  return y;
}

Tensor gelu_backward(const Tensor& x, const Tensor& gy) {
  Tensor gx = gy;
  auto xs = x.data();
  auto gs = gx.data();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const double v = xs[i];
    const double t = std::tanh(kSqrt2OverPi * (v + kGeluCoeff * v * v * v));
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * v * v);
    gs[i] *= 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
  }
  return gx;
}

// ---- layer norm ----

struct NormStats {
  Tensor xhat;
  std::vector<double> inv_std;
};

NormStats layer_norm_stats(const Tensor& x) {
  NormStats s{Tensor(x.shape()), std::vector<double>(x.rows())};
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    s.inv_std[i] = inv;
    auto h = s.xhat.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) h[j] = (r[j] - mean) * inv;
  }
  return s;
}

Tensor layer_norm_forward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x) {
  require_width(x, l.dim, "layernorm");
  NormStats s = layer_norm_stats(x);
  Tensor y = std::move(s.xhat);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = p[0][j] * r[j] + p[1][j];
  }
  return y;
}

LayerGrads layer_norm_backward(std::span<const Tensor> p, const Tensor& x, const Tensor& gy, bool want_input,
                               bool want_params) {
  NormStats s = layer_norm_stats(x);
  LayerGrads g;
  const std::size_t d = x.cols();
  if (want_params) {
    Tensor ggamma({d}), gbeta({d});
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto gr = gy.row(i);
      auto hr = s.xhat.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        ggamma[j] += gr[j] * hr[j];
        gbeta[j] += gr[j];
      }
    }
    g.params.push_back(std::move(ggamma));
    g.params.push_back(std::move(gbeta));
  }
  if (want_input) {
    g.input = Tensor(x.shape());
    const double n = static_cast<double>(d);
    std::vector<double> dxhat(d);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto gr = gy.row(i);
      auto hr = s.xhat.row(i);
      double sum = 0.0, dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dxhat[j] = gr[j] * p[0][j];
        sum += dxhat[j];
        dot += dxhat[j] * hr[j];
      }
      auto out = g.input.row(i);
      for (std::size_t j = 0; j < d; ++j) out[j] = s.inv_std[i] / n * (n * dxhat[j] - sum - hr[j] * dot);
    }
  }
  return g;
}

// ---- embedding ----

std::size_t token_id(double v, std::size_t vocab) {
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(vocab)) {
    throw ShapeError("embedding id " + std::to_string(v) + " outside vocabulary of " + std::to_string(vocab));
  }
  return static_cast<std::size_t>(v);
}

Tensor embedding_forward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& ids) {
  require_width(ids, l.seq_len, "embedding");
  Tensor y = Tensor::matrix(ids.size(), l.dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto src = p[0].row(token_id(ids[i], l.vocab));
    std::copy(src.begin(), src.end(), y.row(i).begin());
  }
  return y;
}

LayerGrads embedding_backward(const LayerSpec& l, const Tensor& ids, const Tensor& gy, bool want_params) {
  LayerGrads g;
  if (want_params) {
    Tensor table = Tensor::matrix(l.vocab, l.dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto dst = table.row(token_id(ids[i], l.vocab));
      auto src = gy.row(i);
      for (std::size_t j = 0; j < l.dim; ++j) dst[j] += src[j];
    }
    g.params.push_back(std::move(table));
  }
  return g;
}

// ---- causal single-head attention ----

struct AttentionCache {
  Tensor q, k, v, o;
  std::vector<Tensor> probs;  // one [T,T] per sample
};

Tensor group_rows(const Tensor& t, std::size_t first, std::size_t count) {
  std::vector<double> buf(t.data().begin() + static_cast<std::ptrdiff_t>(first * t.cols()),
                          t.data().begin() + static_cast<std::ptrdiff_t>((first + count) * t.cols()));
  return Tensor({count, t.cols()}, std::move(buf));
}

void put_rows(Tensor& dst, std::size_t first, const Tensor& src) {
  std::copy(src.data().begin(), src.data().end(),
            dst.data().begin() + static_cast<std::ptrdiff_t>(first * dst.cols()));
}

AttentionCache attention_core(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, std::size_t seq) {
  require_width(x, l.dim, "attention");
  if (seq == 0 || x.rows() % seq != 0) throw ShapeError("attention rows are not a multiple of the sequence length");
  AttentionCache c;
  c.q = matmul(x, p[0]);
  c.k = matmul(x, p[1]);
  c.v = matmul(x, p[2]);
  c.o = Tensor(x.shape());
  const double scale = 1.0 / std::sqrt(static_cast<double>(l.dim));
  for (std::size_t g = 0; g < x.rows() / seq; ++g) {
    const Tensor qg = group_rows(c.q, g * seq, seq);
    const Tensor kg = group_rows(c.k, g * seq, seq);
    const Tensor vg = group_rows(c.v, g * seq, seq);
    Tensor s = matmul_nt(qg, kg);
    Tensor prob = Tensor::matrix(seq, seq);
    for (std::size_t i = 0; i < seq; ++i) {
      double mx = -INFINITY;
      for (std::size_t j = 0; j <= i; ++j) mx = std::max(mx, s.at(i, j) * scale);
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        prob.at(i, j) = std::exp(s.at(i, j) * scale - mx);
        z += prob.at(i, j);
      }
      for (std::size_t j = 0; j <= i; ++j) prob.at(i, j) /= z;
    }
    put_rows(c.o, g * seq, matmul(prob, vg));
    c.probs.push_back(std::move(prob));
  }
  return c;
}

Tensor attention_forward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, std::size_t seq) {
  return matmul(attention_core(l, p, x, seq).o, p[3]);
}

LayerGrads attention_backward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, const Tensor& gy,
                              std::size_t seq, bool want_input, bool want_params) {
  AttentionCache c = attention_core(l, p, x, seq);
  const double scale = 1.0 / std::sqrt(static_cast<double>(l.dim));
  Tensor go = matmul_nt(gy, p[3]);
  Tensor gq(x.shape()), gk(x.shape()), gv(x.shape());
  for (std::size_t g = 0; g < x.rows() / seq; ++g) {
    const Tensor& prob = c.probs[g];
    const Tensor qg = group_rows(c.q, g * seq, seq);
    const Tensor kg = group_rows(c.k, g * seq, seq);
    const Tensor vg = group_rows(c.v, g * seq, seq);
    const Tensor gog = group_rows(go, g * seq, seq);
    Tensor gp = matmul_nt(gog, vg);
    put_rows(gv, g * seq, matmul_tn(prob, gog));
    Tensor gs = Tensor::matrix(seq, seq);
    for (std::size_t i = 0; i < seq; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j <= i; ++j) dot += gp.at(i, j) * prob.at(i, j);
      for (std::size_t j = 0; j <= i; ++j) gs.at(i, j) = prob.at(i, j) * (gp.at(i, j) - dot) * scale;
    }
    put_rows(gq, g * seq, matmul(gs, kg));
    put_rows(gk, g * seq, matmul_tn(gs, qg));
  }
  LayerGrads out;
  if (want_params) {
    out.params.push_back(matmul_tn(x, gq));
    out.params.push_back(matmul_tn(x, gk));
    out.params.push_back(matmul_tn(x, gv));
    out.params.push_back(matmul_tn(c.o, gy));
  }
  if (want_input) {
    out.input = matmul_nt(gq, p[0]);
    add_inplace(out.input, matmul_nt(gk, p[1]));
    add_inplace(out.input, matmul_nt(gv, p[2]));
  }
  return out;
}

// ---- residual ----

std::vector<std::span<const Tensor>> split_inner_params(const LayerSpec& l, std::span<const Tensor> p) {
  std::vector<std::span<const Tensor>> out;
  std::size_t offset = 0;
  for (const auto& inner : l.inner) {
    const std::size_t n = param_shapes(inner).size();
    out.push_back(p.subspan(offset, n));
    offset += n;
  }
  return out;
}

Tensor residual_forward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, std::size_t rps) {
  auto parts = split_inner_params(l, p);
  Tensor h = x;
  for (std::size_t j = 0; j < l.inner.size(); ++j) h = layer_forward(l.inner[j], parts[j], h, rps);
  if (h.shape() != x.shape()) throw ShapeError("residual inner layers must preserve shape");
  add_inplace(h, x);
  return h;
}

LayerGrads residual_backward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, const Tensor& gy,
                             std::size_t rps, bool want_input, bool want_params) {
  auto parts = split_inner_params(l, p);
  std::vector<Tensor> inputs{x};
  for (std::size_t j = 0; j + 1 < l.inner.size(); ++j) {
    inputs.push_back(layer_forward(l.inner[j], parts[j], inputs.back(), rps));
  }
  std::vector<std::vector<Tensor>> inner_grads(l.inner.size());
  Tensor g = gy;
  for (std::size_t j = l.inner.size(); j-- > 0;) {
    const bool need_input = j > 0 || want_input;
    LayerGrads lg = layer_backward(l.inner[j], parts[j], inputs[j], g, rps, need_input, want_params);
    inner_grads[j] = std::move(lg.params);
    if (need_input) g = std::move(lg.input);
  }
  LayerGrads out;
  if (want_input) {
    add_inplace(g, gy);
    out.input = std::move(g);
  }
  if (want_params) {
    for (auto& v : inner_grads) {
      for (auto& t : v) out.params.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kLinear: return "linear";
    case LayerKind::kReLU: return "relu";
    case LayerKind::kGeLU: return "gelu";
    case LayerKind::kLayerNorm: return "layernorm";
    case LayerKind::kResidual: return "residual";
    case LayerKind::kEmbedding: return "embedding";
    case LayerKind::kAttention: return "attention";
    case LayerKind::kMseHead: return "mse";
    case LayerKind::kSoftmaxXentHead: return "softmax_xent";
  }
  return "?";
}

LayerKind kind_from_name(std::string_view name) {
  for (auto k : {LayerKind::kLinear, LayerKind::kReLU, LayerKind::kGeLU, LayerKind::kLayerNorm, LayerKind::kResidual,
                 LayerKind::kEmbedding, LayerKind::kAttention, LayerKind::kMseHead, LayerKind::kSoftmaxXentHead}) {
    if (kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::kLinear;
  l.in = in;
  l.out = out;
  l.bias = bias;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::gelu() {
  LayerSpec l;
  l.kind = LayerKind::kGeLU;
  return l;
}

LayerSpec LayerSpec::layer_norm(std::size_t dim) {
  LayerSpec l;
  l.kind = LayerKind::kLayerNorm;
  l.dim = dim;
  return l;
}

LayerSpec LayerSpec::residual(std::vector<LayerSpec> inner) {
  LayerSpec l;
  l.kind = LayerKind::kResidual;
  l.inner = std::move(inner);
  return l;
}

LayerSpec LayerSpec::embedding(std::size_t vocab, std::size_t dim, std::size_t seq_len) {
  LayerSpec l;
  l.kind = LayerKind::kEmbedding;
  l.vocab = vocab;
  l.dim = dim;
  l.seq_len = seq_len;
  return l;
}

LayerSpec LayerSpec::attention(std::size_t dim) {
  LayerSpec l;
  l.kind = LayerKind::kAttention;
  l.dim = dim;
  return l;
}

LayerSpec LayerSpec::mse() {
  LayerSpec l;
  l.kind = LayerKind::kMseHead;
  return l;
}

LayerSpec LayerSpec::softmax_xent() {
  LayerSpec l;
  l.kind = LayerKind::kSoftmaxXentHead;
  return l;
}

std::vector<Shape> param_shapes(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::kLinear:
      if (l.bias) return {{l.in, l.out}, {l.out}};
      return {{l.in, l.out}};
    case LayerKind::kLayerNorm: return {{l.dim}, {l.dim}};
    case LayerKind::kEmbedding: return {{l.vocab, l.dim}};
    case LayerKind::kAttention: return {{l.dim, l.dim}, {l.dim, l.dim}, {l.dim, l.dim}, {l.dim, l.dim}};
    case LayerKind::kResidual: {
      std::vector<Shape> out;
      for (const auto& inner : l.inner) {
        auto s = param_shapes(inner);
        out.insert(out.end(), s.begin(), s.end());
      }
      return out;
    }
    default: return {};
  }
}

std::size_t param_count(const LayerSpec& l) {
  std::size_t n = 0;
  for (const auto& s : param_shapes(l)) n += shape_size(s);
  return n;
}

std::size_t output_width(const LayerSpec& l, std::size_t w) {
  auto mismatch = [&](std::size_t expected) {
    return ShapeError(std::string(kind_name(l.kind)) + " expects width " + std::to_string(expected) + ", got " +
                      std::to_string(w));
  };
  switch (l.kind) {
    case LayerKind::kLinear:
      if (w != l.in) throw mismatch(l.in);
      return l.out;
    case LayerKind::kLayerNorm:
    case LayerKind::kAttention:
      if (w != l.dim) throw mismatch(l.dim);
      return w;
    case LayerKind::kEmbedding:
      if (w != l.seq_len) throw mismatch(l.seq_len);
      return l.dim;
    case LayerKind::kResidual: {
      if (l.inner.empty()) throw ShapeError("residual block needs inner layers");
      std::size_t h = w;
      for (const auto& inner : l.inner) {
        if (inner.is_head() || inner.kind == LayerKind::kEmbedding) {
          throw ShapeError("residual blocks may not contain heads or embeddings");
        }
        h = output_width(inner, h);
      }
      if (h != w) throw ShapeError("residual inner layers must preserve width");
      return w;
    }
    default: return w;
  }
}

std::uint64_t forward_flops(const LayerSpec& l, std::size_t rows, std::size_t w, std::size_t rps) {
  const std::uint64_t r = rows;
  switch (l.kind) {
    case LayerKind::kLinear: return r * (2ULL * l.in * l.out + (l.bias ? l.out : 0));
    case LayerKind::kReLU: return r * w;
    case LayerKind::kGeLU: return 8ULL * r * w;
    case LayerKind::kLayerNorm: return 8ULL * r * w;
    case LayerKind::kEmbedding: return r * l.seq_len * l.dim;
    case LayerKind::kAttention: {
      const std::uint64_t d = l.dim;
      const std::uint64_t seq = std::max<std::size_t>(rps, 1);
      // four projections + scores + weighted sum + softmax
      return 8ULL * r * d * d + (r / seq) * (4ULL * seq * seq * d + 3ULL * seq * seq);
    }
    case LayerKind::kResidual: {
      std::uint64_t total = r * w;
      std::size_t h = w;
      for (const auto& inner : l.inner) {
        total += forward_flops(inner, rows, h, rps);
        h = output_width(inner, h);
      }
      return total;
    }
    case LayerKind::kMseHead: return 3ULL * r * w;
    case LayerKind::kSoftmaxXentHead: return 4ULL * r * w;
  }
  return 0;
}

Tensor layer_forward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, std::size_t rps) {
  Tensor y;
  switch (l.kind) {
    case LayerKind::kLinear: y = linear_forward(l, p, x); break;
    case LayerKind::kReLU: y = relu_forward(x); break;
    case LayerKind::kGeLU: y = gelu_forward(x); break;
    case LayerKind::kLayerNorm: y = layer_norm_forward(l, p, x); break;
    case LayerKind::kResidual: y = residual_forward(l, p, x, rps); break;
    case LayerKind::kEmbedding: y = embedding_forward(l, p, x); break;
    case LayerKind::kAttention: y = attention_forward(l, p, x, rps); break;
    case LayerKind::kMseHead:
    case LayerKind::kSoftmaxXentHead: throw std::logic_error("heads are evaluated with head_loss");
  }
  require_finite(y, "layer output");
  return y;
}

LayerGrads layer_backward(const LayerSpec& l, std::span<const Tensor> p, const Tensor& x, const Tensor& gy,
                          std::size_t rps, bool want_input, bool want_params) {
  switch (l.kind) {
    case LayerKind::kLinear: return linear_backward(l, p, x, gy, want_input, want_params);
    case LayerKind::kReLU: return want_input ? LayerGrads{relu_backward(x, gy), {}} : LayerGrads{};
    case LayerKind::kGeLU: return want_input ? LayerGrads{gelu_backward(x, gy), {}} : LayerGrads{};
    case LayerKind::kLayerNorm: return layer_norm_backward(p, x, gy, want_input, want_params);
    case LayerKind::kResidual: return residual_backward(l, p, x, gy, rps, want_input, want_params);
    case LayerKind::kEmbedding: return embedding_backward(l, x, gy, want_params);
    case LayerKind::kAttention: return attention_backward(l, p, x, gy, rps, want_input, want_params);
    case LayerKind::kMseHead:
    case LayerKind::kSoftmaxXentHead: break;
  }
  throw std::logic_error("heads are differentiated with head_grad");
}

namespace {

std::size_t class_id(double v, std::size_t classes) {
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(classes)) {
    throw ShapeError("class target " + std::to_string(v) + " outside [0, " + std::to_string(classes) + ")");
  }
  return static_cast<std::size_t>(v);
}

void check_head_targets(const LayerSpec& head, const Tensor& logits, const Tensor& targets) {
  const std::size_t expected = head.kind == LayerKind::kMseHead ? logits.size() : logits.rows();
  if (targets.size() != expected) {
    throw ShapeError(std::string(kind_name(head.kind)) + " expects " + std::to_string(expected) + " targets, got " +
                     std::to_string(targets.size()));
  }
}

}  // namespace

double head_loss(const LayerSpec& head, const Tensor& z, const Tensor& t) {
  check_head_targets(head, z, t);
  double total = 0.0;
  if (head.kind == LayerKind::kMseHead) {
    for (std::size_t i = 0; i < z.size(); ++i) total += (z[i] - t[i]) * (z[i] - t[i]);
  } else {
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      const double mx = *std::max_element(r.begin(), r.end());
      double s = 0.0;
      for (double v : r) s += std::exp(v - mx);
      total += mx + std::log(s) - r[class_id(t[i], r.size())];
    }
  }
  return total / static_cast<double>(z.rows());
}

Tensor head_grad(const LayerSpec& head, const Tensor& z, const Tensor& t) {
  check_head_targets(head, z, t);
  const double inv_rows = 1.0 / static_cast<double>(z.rows());
  Tensor g(z.shape());
  if (head.kind == LayerKind::kMseHead) {
    for (std::size_t i = 0; i < z.size(); ++i) g[i] = 2.0 * (z[i] - t[i]) * inv_rows;
  } else {
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      auto gr = g.row(i);
      const double mx = *std::max_element(r.begin(), r.end());
      double s = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) {
        gr[j] = std::exp(r[j] - mx);
        s += gr[j];
      }
      for (std::size_t j = 0; j < r.size(); ++j) gr[j] = gr[j] / s * inv_rows;
      gr[class_id(t[i], r.size())] -= inv_rows;
    }
  }
  return g;
}

}  // namespace bcdlab
