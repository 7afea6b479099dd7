#include <gtest/gtest.h>

#include <cmath>

#include "bcdlab/errors.hpp"
#include "bcdlab/optim.hpp"
#include "bcdlab/partition.hpp"

using namespace bcdlab;

namespace {

ModelSpec linear_stack(std::size_t layers, std::size_t dim) {
  ModelSpec m;
  for (std::size_t i = 0; i < layers; ++i) m.layers.push_back(LayerSpec::linear(dim, dim, false));
  m.layers.push_back(LayerSpec::mse());
  return m;
}

// One scalar weight layer: linear 1->1 without bias.
struct Scalar {
  ModelSpec model = linear_stack(1, 1);
  ParamSet params{{Tensor({1, 1}, 0.5)}, {}};
  GradSet grads(double g) const { return GradSet{{0, {Tensor({1, 1}, g)}}}; }
  double w() const { return params[0][0][0]; }
};

}  // namespace

TEST(AllocState, FloatUnitsPerOptimizer) {
  // 3 layers of 10x10 = 300 trainable floats.
  const ModelSpec m = linear_stack(3, 10);
  const auto mask = FreezeMask::all_trainable(m.layer_count());
  EXPECT_EQ(alloc_state(m, mask, OptimHyper::sgd_defaults()).float_units(), 300u);
  EXPECT_EQ(alloc_state(m, mask, OptimHyper::adam_defaults()).float_units(), 600u);
}

TEST(AllocState, OneThirdOfModelAdam) {
  const ModelSpec m = linear_stack(9, 10);  // 900 params
  const Partition part = split_layers(m, 3, SplitStrategy::kEqualLayers);
  const auto st = alloc_state(m, mask_for(part, 1), OptimHyper::adam_defaults());
  EXPECT_EQ(st.float_units(), 600u);
  EXPECT_EQ(alloc_state(m, FreezeMask::all_trainable(m.layer_count()), OptimHyper::adam_defaults()).float_units(),
            1800u);
  EXPECT_EQ(st.buffers.size(), 3u);
  for (const auto& [layer, bufs] : st.buffers) EXPECT_TRUE(part.ranges[1].contains(layer));
  EXPECT_EQ(st.steps, 0u);
}

TEST(AllocState, EmptyTrainableSetThrows) {
  const ModelSpec m = linear_stack(2, 2);
  FreezeMask none{0, std::vector<bool>(m.layer_count(), false), m.layer_count()};
  EXPECT_ANY_THROW(alloc_state(m, none, OptimHyper::sgd_defaults()));
}

TEST(Hyper, DefaultsAndValidation) {
  const auto sgd = OptimHyper::sgd_defaults();
  EXPECT_EQ(sgd.lr, 0.1);
  EXPECT_EQ(sgd.momentum, 0.9);
  EXPECT_EQ(sgd.weight_decay, 1e-5);
  const auto adam = OptimHyper::adam_defaults();
  EXPECT_EQ(adam.lr, 1e-4);
  EXPECT_EQ(OptimHyper::adam_large_model_defaults().lr, 5e-5);
  for (auto mutate : {+[](OptimHyper& h) { h.lr = 0.0; }, +[](OptimHyper& h) { h.momentum = 1.0; },
                      +[](OptimHyper& h) { h.beta1 = -0.1; }, +[](OptimHyper& h) { h.beta2 = 1.0; },
                      +[](OptimHyper& h) { h.eps = 0.0; }, +[](OptimHyper& h) { h.weight_decay = -1.0; }}) {
    OptimHyper h = OptimHyper::sgd_defaults();
    mutate(h);
    EXPECT_THROW(h.validate(), std::invalid_argument);
  }
}

TEST(Step, PlainSgd) {
  Scalar s;
  OptimHyper h = OptimHyper::sgd_defaults();
  h.momentum = 0.0;
  h.weight_decay = 0.0;
  h.lr = 0.25;
  auto st = alloc_state(s.model, FreezeMask::all_trainable(2), h);
  step(s.params, s.grads(2.0), st, h);
  EXPECT_DOUBLE_EQ(s.w(), 0.5 - 0.25 * 2.0);
  EXPECT_EQ(st.steps, 1u);
}

TEST(Step, SgdMomentumMatchesScalarRecurrence) {
  Scalar s;
  OptimHyper h = OptimHyper::sgd_defaults();
  auto st = alloc_state(s.model, FreezeMask::all_trainable(2), h);
  double w = 0.5;
  double v = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double g = 0.3 - 0.1 * i;
    step(s.params, s.grads(g), st, h);
    v = h.momentum * v + g + h.weight_decay * w;
    w -= h.lr * v;
    EXPECT_DOUBLE_EQ(s.w(), w) << i;
  }
}

TEST(Step, AdamFirstStepIsLrSized) {
  Scalar s;
  OptimHyper h = OptimHyper::adam_defaults();
  h.weight_decay = 0.0;
  auto st = alloc_state(s.model, FreezeMask::all_trainable(2), h);
  step(s.params, s.grads(1.0), st, h);
  EXPECT_NEAR(s.w() - 0.5, -1e-4, 1e-11);
}

TEST(Step, AdamMatchesScalarRecurrence) {
  Scalar s;
  OptimHyper h = OptimHyper::adam_defaults();
  h.lr = 0.01;
  auto st = alloc_state(s.model, FreezeMask::all_trainable(2), h);
  double w = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 6; ++t) {
    const double g = std::sin(t);
    step(s.params, s.grads(g), st, h);
    m = h.beta1 * m + (1 - h.beta1) * g;
    v = h.beta2 * v + (1 - h.beta2) * g * g;
    const double mh = m / (1 - std::pow(h.beta1, t));
    const double vh = v / (1 - std::pow(h.beta2, t));
    w -= h.lr * (mh / (std::sqrt(vh) + h.eps) + h.weight_decay * w);
    EXPECT_NEAR(s.w(), w, 1e-15) << t;
  }
}

TEST(Step, FrozenLayersUntouched) {
  const ModelSpec m = linear_stack(4, 3);
  ParamSet p = init_params(m);
  const ParamSet before = p;
  const Partition part = split_layers(m, 2, SplitStrategy::kEqualLayers);
  const auto mask = mask_for(part, 1);
  auto st = alloc_state(m, mask, OptimHyper::adam_defaults());
  GradSet g;
  for (std::size_t l = 0; l < 4; ++l) {
    if (mask.layer_trainable[l]) g[l] = {Tensor({3, 3}, 1.0)};
  }
  step(p, g, st, OptimHyper::adam_defaults());
  for (std::size_t l = 0; l < 4; ++l) {
    if (mask.layer_trainable[l]) EXPECT_NE(p[l], before[l]);
    else EXPECT_EQ(p[l], before[l]);
  }
}

TEST(Step, GradientsMustMatchState) {
  Scalar s;
  auto st = alloc_state(s.model, FreezeMask::all_trainable(2), OptimHyper::sgd_defaults());
  EXPECT_ANY_THROW(step(s.params, GradSet{}, st, OptimHyper::sgd_defaults()));
}

TEST(Step, NonFiniteUpdateThrows) {
  Scalar s;
  auto st = alloc_state(s.model, FreezeMask::all_trainable(2), OptimHyper::sgd_defaults());
  EXPECT_THROW(step(s.params, s.grads(INFINITY), st, OptimHyper::sgd_defaults()), NonFiniteError);
}
