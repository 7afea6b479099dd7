#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bcdlab/errors.hpp"
#include "bcdlab/gradcheck.hpp"
#include "bcdlab/model.hpp"
#include "bcdlab/partition.hpp"
#include "bcdlab/rng.hpp"
#include "bcdlab/verify/oracles.hpp"

using namespace bcdlab;

namespace {

Tensor randn(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

ModelSpec mlp(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed) {
  ModelSpec m;
  m.layers = {LayerSpec::linear(in, hidden), LayerSpec::relu(), LayerSpec::linear(hidden, out), LayerSpec::mse()};
  m.seed = seed;
  return m;
}

}  // namespace

TEST(Forward, IdentityLinearGivesZeroLoss) {
  ModelSpec m;
  m.layers = {LayerSpec::linear(3, 3), LayerSpec::mse()};
  ParamSet p = init_params(m);
  p[0][0].fill(0.0);
  for (std::size_t i = 0; i < 3; ++i) p[0][0].at(i, i) = 1.0;
  p[0][1].fill(0.0);
  Rng rng(1);
  Batch b{randn({5, 3}, rng), {}};
  b.targets = b.inputs;
  EXPECT_EQ(forward(m, p, b, 0).loss, 0.0);
}

TEST(Forward, ZeroLogitsGiveLogC) {
  for (std::size_t classes : {2u, 3u, 10u}) {
    ModelSpec m;
    m.layers = {LayerSpec::linear(4, classes), LayerSpec::softmax_xent()};
    ParamSet p = init_params(m);
    p[0][0].fill(0.0);
    p[0][1].fill(0.0);
    Rng rng(2);
    Batch b{randn({6, 4}, rng), Tensor({6, 1})};
    for (std::size_t r = 0; r < 6; ++r) b.targets[r] = static_cast<double>(r % classes);
    EXPECT_NEAR(forward(m, p, b, 0).loss, std::log(static_cast<double>(classes)), 1e-12);
  }
}

TEST(Forward, MatchesStraightLineOracle) {
  const ModelSpec m = mlp(5, 7, 3, 11);
  const ParamSet p = init_params(m);
  Rng rng(3);
  Batch b{randn({9, 5}, rng), randn({9, 3}, rng)};
  const double oracle = verify::mlp_mse_loss(b.inputs.data(), 9, 5, p[0][0].data(), p[0][1].data(), 7,
                                             p[2][0].data(), p[2][1].data(), 3, b.targets.data());
  EXPECT_NEAR(forward(m, p, b, 0).loss, oracle, 1e-12 * std::max(1.0, oracle));
}

TEST(Forward, RejectsShapeMismatch) {
  const ModelSpec m = mlp(5, 7, 3, 1);
  const ParamSet p = init_params(m);
  Rng rng(4);
  Batch b{randn({4, 6}, rng), randn({4, 3}, rng)};
  EXPECT_THROW(forward(m, p, b, 0), ShapeError);
}

TEST(Forward, NonFiniteLossThrows) {
  const ModelSpec m = mlp(2, 3, 1, 1);
  const ParamSet p = init_params(m);
  Batch b{Tensor({1, 2}, std::nan("")), Tensor({1, 1})};
  EXPECT_THROW(forward(m, p, b, 0), NonFiniteError);
}

TEST(Forward, TapeKeepsOnlyLayersFromBackwardStart) {
  const ModelSpec m = mlp(4, 6, 2, 5);
  const ParamSet p = init_params(m);
  Rng rng(5);
  Batch b{randn({3, 4}, rng), randn({3, 2}, rng)};
  for (std::size_t start = 0; start <= m.layer_count(); ++start) {
    const auto r = forward(m, p, b, start);
    EXPECT_EQ(r.tape.stored_count(), m.layer_count() - start);
    for (std::size_t l = 0; l < m.layer_count(); ++l) EXPECT_EQ(r.tape.has(l), l >= start);
  }
}

TEST(Backward, SingleLinearClosedForm) {
  ModelSpec m;
  m.layers = {LayerSpec::linear(3, 2, false), LayerSpec::mse()};
  m.seed = 9;
  const ParamSet p = init_params(m);
  Rng rng(6);
  const std::size_t n = 4;
  Batch b{randn({n, 3}, rng), randn({n, 2}, rng)};
  const auto fr = forward(m, p, b, 0);
  const GradSet g = backward(m, p, fr.tape, FreezeMask::all_trainable(2));
  ASSERT_EQ(g.count(0), 1u);
  const Tensor& w = p[0][0];
  // dW[i][k] = 2/n * sum_r x[r][i] * (xW - t)[r][k]
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double y = 0.0;
        for (std::size_t j = 0; j < 3; ++j) y += b.inputs.at(r, j) * w.at(j, k);
        acc += b.inputs.at(r, i) * (y - b.targets.at(r, k));
      }
      EXPECT_NEAR(g.at(0)[0].at(i, k), 2.0 * acc / n, 1e-12);
    }
  }
}

TEST(Backward, AllFrozenGivesEmptySet) {
  const ModelSpec m = mlp(3, 4, 2, 1);
  const ParamSet p = init_params(m);
  Rng rng(7);
  Batch b{randn({2, 3}, rng), randn({2, 2}, rng)};
  const auto fr = forward(m, p, b, m.layer_count());
  FreezeMask none{0, std::vector<bool>(m.layer_count(), false), m.layer_count()};
  EXPECT_TRUE(backward(m, p, fr.tape, none).empty());
}

TEST(Backward, OnlyTrainableLayersGetGradients) {
  ModelSpec m;
  for (int i = 0; i < 4; ++i) m.layers.push_back(LayerSpec::linear(3, 3));
  m.layers.push_back(LayerSpec::mse());
  const ParamSet p = init_params(m);
  const Partition part = split_layers(m, 2, SplitStrategy::kEqualLayers);
  Rng rng(8);
  Batch b{randn({2, 3}, rng), randn({2, 3}, rng)};
  for (std::size_t blk = 0; blk < 2; ++blk) {
    const FreezeMask mask = mask_for(part, blk);
    const auto fr = forward(m, p, b, mask.backward_start);
    const GradSet g = backward(m, p, fr.tape, mask);
    for (std::size_t l = 0; l < 4; ++l) EXPECT_EQ(g.count(l), mask.layer_trainable[l] ? 1u : 0u) << l;
  }
}

TEST(Backward, TapeStartingAfterTrainableLayerIsRejected) {
  const ModelSpec m = mlp(3, 4, 2, 1);
  const ParamSet p = init_params(m);
  Rng rng(9);
  Batch b{randn({2, 3}, rng), randn({2, 2}, rng)};
  const auto fr = forward(m, p, b, 2);
  EXPECT_ANY_THROW(backward(m, p, fr.tape, FreezeMask::all_trainable(m.layer_count())));
}

TEST(Backward, DeterministicBitwise) {
  const ModelSpec m = mlp(6, 8, 3, 21);
  const ParamSet p = init_params(m);
  Rng rng(10);
  Batch b{randn({5, 6}, rng), randn({5, 3}, rng)};
  const auto a = forward(m, p, b, 0);
  const auto c = forward(m, p, b, 0);
  EXPECT_EQ(a.loss, c.loss);
  const auto mask = FreezeMask::all_trainable(m.layer_count());
  EXPECT_EQ(backward(m, p, a.tape, mask), backward(m, p, c.tape, mask));
  EXPECT_EQ(init_params(m), init_params(m));
}

TEST(GradCheck, LinearRegressionIsTight) {
  ModelSpec m;
  m.layers = {LayerSpec::linear(4, 2), LayerSpec::mse()};
  m.seed = 3;
  Rng rng(11);
  Batch b{randn({8, 4}, rng), randn({8, 2}, rng)};
  EXPECT_LE(grad_check(m, b, 1e-5), 1e-6);
}

TEST(GradCheck, ZeroInputReluIsFinite) {
  const ModelSpec m = mlp(3, 4, 2, 1);
  Batch b{Tensor({2, 3}), Tensor({2, 2}, 1.0)};
  const double err = grad_check(m, b, 1e-5);
  EXPECT_TRUE(std::isfinite(err));
}

TEST(GradCheck, ThreeBlockResidualMlp) {
  ModelSpec m;
  m.layers.push_back(LayerSpec::linear(4, 6));
  for (int i = 0; i < 3; ++i) m.layers.push_back(LayerSpec::residual({LayerSpec::linear(6, 6), LayerSpec::gelu()}));
  m.layers.push_back(LayerSpec::linear(6, 2));
  m.layers.push_back(LayerSpec::mse());
  m.seed = 17;
  Rng rng(12);
  Batch b{randn({5, 4}, rng), randn({5, 2}, rng)};
  EXPECT_LE(grad_check(m, b, 1e-5), 1e-4);
}

// Property sweep with larger dense shapes; the attention/embedding probes live in the acceptance suite.
TEST(GradCheck, RandomDenseShapesUpTo64) {
  Rng rng(13);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t in = 1 + rng.below(64);
    const std::size_t hid = 1 + rng.below(64);
    const std::size_t out = 1 + rng.below(8);
    const std::size_t rows = 1 + rng.below(4);
    ModelSpec m;
    m.seed = rng.next_u64();
    const int kind = static_cast<int>(rng.below(3));
    m.layers.push_back(LayerSpec::linear(in, hid));
    if (kind == 0) m.layers.push_back(LayerSpec::gelu());
    if (kind == 1) m.layers.push_back(LayerSpec::layer_norm(hid));
    m.layers.push_back(LayerSpec::linear(hid, out));
    m.layers.push_back(kind == 2 ? LayerSpec::softmax_xent() : LayerSpec::mse());
    Batch b{randn({rows, in}, rng), {}};
    if (kind == 2) {
      b.targets = Tensor({rows, 1});
      for (std::size_t r = 0; r < rows; ++r) b.targets[r] = static_cast<double>(rng.below(out));
    } else {
      b.targets = randn({rows, out}, rng);
    }
    EXPECT_LE(grad_check(m, b, 1e-5), 1e-4) << "trial " << trial << " in " << in << " hid " << hid;
  }
}

TEST(Model, RequiresParameterizedLayerAndHead) {
  ModelSpec no_params;
  no_params.layers = {LayerSpec::relu(), LayerSpec::mse()};
  EXPECT_THROW(plan_model(no_params), ShapeError);
  ModelSpec no_head;
  no_head.layers = {LayerSpec::linear(2, 2)};
  EXPECT_THROW(plan_model(no_head), ShapeError);
  ModelSpec bad;
  bad.layers = {LayerSpec::linear(2, 3), LayerSpec::linear(4, 1), LayerSpec::mse()};
  EXPECT_THROW(plan_model(bad), ShapeError);
}

TEST(Model, SeedChangesInitialization) {
  EXPECT_NE(init_params(mlp(3, 4, 2, 1)), init_params(mlp(3, 4, 2, 2)));
}
