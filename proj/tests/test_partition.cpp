#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "bcdlab/partition.hpp"
#include "bcdlab/preinfer.hpp"
#include "bcdlab/rng.hpp"

using namespace bcdlab;

namespace {

ModelSpec identical_layers(std::size_t n) {
  ModelSpec m;
  for (std::size_t i = 0; i < n; ++i) m.layers.push_back(LayerSpec::linear(4, 4));
  m.layers.push_back(LayerSpec::mse());
  return m;
}

}  // namespace

TEST(Split, NineIdenticalLayersEqual) {
  ModelSpec m;
  for (int i = 0; i < 9; ++i) m.layers.push_back(LayerSpec::linear(4, 4));
  // head counts as parameter-free, so it rides with the last block
  m.layers.push_back(LayerSpec::mse());
  const Partition p = split_layers(m, 3, SplitStrategy::kEqualLayers);
  ASSERT_EQ(p.block_count(), 3u);
  EXPECT_EQ(p.ranges[0], (LayerRange{0, 3}));
  EXPECT_EQ(p.ranges[1], (LayerRange{3, 6}));
  EXPECT_EQ(p.ranges[2], (LayerRange{6, 10}));
}

TEST(Split, BalancedFromCounts) {
  const Partition p = split_layers(std::vector<std::size_t>{10, 10, 10, 70}, 2, SplitStrategy::kBalancedParams);
  EXPECT_EQ(p.ranges[0], (LayerRange{0, 3}));
  EXPECT_EQ(p.ranges[1], (LayerRange{3, 4}));
  EXPECT_EQ(p.param_counts, (std::vector<std::size_t>{30, 70}));
}

TEST(Split, SingleBlockCoversEverything) {
  const ModelSpec m = identical_layers(5);
  const Partition p = split_layers(m, 1, SplitStrategy::kBalancedParams);
  ASSERT_EQ(p.block_count(), 1u);
  EXPECT_EQ(p.ranges[0], (LayerRange{0, m.layer_count()}));
  EXPECT_EQ(p.total_params(), m.param_count());
}

TEST(Split, TooManyBlocksThrows) {
  EXPECT_ANY_THROW(split_layers(identical_layers(3), 4, SplitStrategy::kEqualLayers));
  EXPECT_ANY_THROW(split_layers(identical_layers(3), 0, SplitStrategy::kEqualLayers));
}

TEST(Split, ParameterFreeLayersStickToPredecessor) {
  ModelSpec m;
  m.layers = {LayerSpec::relu(), LayerSpec::linear(2, 2), LayerSpec::relu(), LayerSpec::linear(2, 2),
              LayerSpec::gelu(), LayerSpec::mse()};
  const Partition p = split_layers(m, 2, SplitStrategy::kEqualLayers);
  EXPECT_EQ(p.ranges[0], (LayerRange{0, 3}));
  EXPECT_EQ(p.ranges[1], (LayerRange{3, 6}));
}

TEST(Split, EarlierCutWinsTies) {
  const Partition p = split_layers(std::vector<std::size_t>{5, 5, 5}, 2, SplitStrategy::kBalancedParams);
  EXPECT_EQ(p.ranges[0], (LayerRange{0, 1}));
}

// Property: contiguous cover, each layer in exactly one block, balanced optimum matches brute force.
TEST(Split, RandomCountsProperty) {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    std::vector<std::size_t> counts(n);
    for (auto& c : counts) c = 1 + rng.below(100);
    const std::size_t blocks = 1 + rng.below(n);
    for (auto strategy : {SplitStrategy::kBalancedParams, SplitStrategy::kEqualLayers}) {
      const Partition p = split_layers(counts, blocks, strategy);
      ASSERT_EQ(p.block_count(), blocks);
      EXPECT_EQ(p.ranges.front().begin, 0u);
      EXPECT_EQ(p.ranges.back().end, n);
      for (std::size_t b = 0; b + 1 < blocks; ++b) EXPECT_EQ(p.ranges[b].end, p.ranges[b + 1].begin);
      for (const auto& r : p.ranges) EXPECT_GT(r.size(), 0u);
      EXPECT_EQ(p, split_layers(counts, blocks, strategy));
    }
    // brute force min-max over all cut sets
    const Partition bal = split_layers(counts, blocks, SplitStrategy::kBalancedParams);
    std::size_t best = SIZE_MAX;
    std::vector<std::size_t> cuts(blocks - 1);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t from) {
      if (k == cuts.size()) {
        std::size_t worst = 0, begin = 0;
        for (std::size_t i = 0; i <= cuts.size(); ++i) {
          const std::size_t end = i < cuts.size() ? cuts[i] : n;
          std::size_t s = 0;
          for (std::size_t j = begin; j < end; ++j) s += counts[j];
          worst = std::max(worst, s);
          begin = end;
        }
        best = std::min(best, worst);
        return;
      }
      // cut k in [from, n - remaining cuts]
      for (std::size_t c = from; c + (cuts.size() - k) <= n; ++c) {
        cuts[k] = c;
        rec(k + 1, c + 1);
      }
    };
    rec(0, 1);
    EXPECT_EQ(*std::max_element(bal.param_counts.begin(), bal.param_counts.end()), best) << "trial " << trial;
  }
}

TEST(Partition, BlockOf) {
  const Partition p = split_layers(identical_layers(6), 3, SplitStrategy::kEqualLayers);
  EXPECT_EQ(p.block_of(0), 0u);
  EXPECT_EQ(p.block_of(3), 1u);
  EXPECT_EQ(p.block_of(6), 2u);
  EXPECT_ANY_THROW(p.block_of(7));
}

TEST(Mask, BackwardStartIsBlockStart) {
  ModelSpec m;
  for (int i = 0; i < 9; ++i) m.layers.push_back(LayerSpec::linear(4, 4));
  m.layers.push_back(LayerSpec::mse());
  const Partition p = split_layers(m, 3, SplitStrategy::kEqualLayers);
  EXPECT_EQ(mask_for(p, 2).backward_start, 6u);
  EXPECT_EQ(mask_for(p, 2).trainable_block, 2u);
  EXPECT_THROW(mask_for(p, 3), std::out_of_range);

  const Partition one = split_layers(m, 1, SplitStrategy::kEqualLayers);
  const FreezeMask all = mask_for(one, 0);
  EXPECT_EQ(all.backward_start, 0u);
  EXPECT_TRUE(std::all_of(all.layer_trainable.begin(), all.layer_trainable.end(), [](bool b) { return b; }));
}

TEST(Mask, UnionCoversEveryLayerOnce) {
  const ModelSpec m = identical_layers(7);
  for (std::size_t blocks = 1; blocks <= 7; ++blocks) {
    const Partition p = split_layers(m, blocks, SplitStrategy::kBalancedParams);
    std::vector<int> hits(m.layer_count(), 0);
    for (std::size_t b = 0; b < blocks; ++b) {
      const FreezeMask mask = mask_for(p, b);
      for (std::size_t l = 0; l < m.layer_count(); ++l) hits[l] += mask.layer_trainable[l];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(Mask, FirstBlockHasNoPrefixToCache) {
  const ModelSpec m = identical_layers(6);
  const Partition p = split_layers(m, 3, SplitStrategy::kEqualLayers);
  const FreezeMask mask = mask_for(p, 0);
  Dataset d{Tensor({4, 4}, 1.0), Tensor({4, 4})};
  const auto cache = build_cache(m, init_params(m), d, mask.backward_start);
  EXPECT_TRUE(cache.passthrough());
  EXPECT_EQ(cache.build_cost, 0u);
}
