#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bcdlab/dataset.hpp"
#include "bcdlab/errors.hpp"
#include "bcdlab/partition.hpp"
#include "bcdlab/preinfer.hpp"
#include "bcdlab/sampling.hpp"
#include "bcdlab/train_step.hpp"

using namespace bcdlab;

namespace {

ModelSpec four_linear(std::uint64_t seed = 8) {
  ModelSpec m;
  m.layers = {LayerSpec::linear(3, 5), LayerSpec::gelu(), LayerSpec::linear(5, 5), LayerSpec::linear(5, 4),
              LayerSpec::relu(),       LayerSpec::linear(4, 2), LayerSpec::mse()};
  m.seed = seed;
  return m;
}

}  // namespace

TEST(Cache, IdentityPrefixStoresInputs) {
  ModelSpec m;
  m.layers = {LayerSpec::linear(3, 3), LayerSpec::linear(3, 1), LayerSpec::mse()};
  ParamSet p = init_params(m);
  p[0][0].fill(0.0);
  for (std::size_t i = 0; i < 3; ++i) p[0][0].at(i, i) = 1.0;
  p[0][1].fill(0.0);
  const Dataset d = make_teacher_student(6, 3, 1, 0.0, 1);
  const auto c = build_cache(m, p, d, 1);
  EXPECT_EQ(c.activations, d.inputs);
  EXPECT_EQ(c.entry_count(), 6u);
}

TEST(Cache, PassthroughForEmptyPrefix) {
  const ModelSpec m = four_linear();
  const Dataset d = make_teacher_student(6, 3, 2, 0.1, 1);
  const auto c = build_cache(m, init_params(m), d, 0);
  EXPECT_TRUE(c.passthrough());
  EXPECT_EQ(c.float_units(), 0u);
}

TEST(Cache, EntriesEqualForwardPrefix) {
  const ModelSpec m = four_linear();
  const ParamSet p = init_params(m);
  const Dataset d = make_teacher_student(16, 3, 2, 0.1, 2);
  for (std::size_t end : {1u, 2u, 3u, 5u}) {
    const auto c = build_cache(m, p, d, end);
    EXPECT_EQ(c.activations, forward_prefix(m, p, d.inputs, end));
    for (std::size_t s = 0; s < 16; ++s) {
      const std::size_t idx[] = {s};
      EXPECT_EQ(c.entry(s), forward_prefix(m, p, gather_rows(d.inputs, idx), end));
    }
    EXPECT_GT(c.build_cost, 0u);
  }
}

TEST(Cache, CachedStepBitwiseAndCheaper) {
  const ModelSpec m = four_linear();
  const Dataset d = make_teacher_student(32, 3, 2, 0.1, 3);
  const Partition part = split_layers(m, 3, SplitStrategy::kEqualLayers);
  const FreezeMask mask = mask_for(part, 2);
  const OptimHyper h = OptimHyper::adam_defaults();

  ParamSet a = init_params(m);
  ParamSet b = a;
  const auto cache = build_cache(m, b, d, mask.backward_start);
  auto sa = alloc_state(m, mask, h);
  auto sb = alloc_state(m, mask, h);
  BatchStream stream(d.size(), 8, 1.0, 4);
  OpCounter prefix_ops;
  forward_prefix(m, a, gather_rows(d.inputs, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}),
                 mask.backward_start, &prefix_ops);
  for (int i = 0; i < 50; ++i) {
    const auto batch = stream.next();
    OpCounter oa, ob;
    const auto ra = train_step(m, a, d, batch, mask, sa, h, &oa);
    const auto rb = train_step_cached(m, b, cache, d, batch, mask, sb, h, &ob);
    EXPECT_EQ(ra.loss, rb.loss);
    EXPECT_EQ(oa.forward - ob.forward, prefix_ops.forward) << i;
  }
  EXPECT_EQ(a, b);
}

TEST(Cache, StaleCacheIsHardError) {
  const ModelSpec m = four_linear();
  const Dataset d = make_teacher_student(8, 3, 2, 0.1, 3);
  ParamSet p = init_params(m);
  const Partition part = split_layers(m, 3, SplitStrategy::kEqualLayers);
  const FreezeMask mask = mask_for(part, 2);
  const auto cache = build_cache(m, p, d, mask.backward_start);
  EXPECT_TRUE(cache_valid(cache, p));
  p[0][0][0] += 1e-12;
  EXPECT_FALSE(cache_valid(cache, p));
  auto st = alloc_state(m, mask, OptimHyper::sgd_defaults());
  const std::size_t batch[] = {0, 1};
  EXPECT_THROW(train_step_cached(m, p, cache, d, batch, mask, st, OptimHyper::sgd_defaults()), StaleCacheError);
}

TEST(Cache, ChecksumIgnoresLayersAfterPrefix) {
  const ModelSpec m = four_linear();
  ParamSet p = init_params(m);
  const auto before = prefix_checksum(p, 2);
  p[5][0][0] += 1.0;
  EXPECT_EQ(prefix_checksum(p, 2), before);
  p[0][1][0] += 1.0;
  EXPECT_NE(prefix_checksum(p, 2), before);
}

TEST(Cache, SpillRoundTrip) {
  const ModelSpec m = four_linear();
  const Dataset d = make_teacher_student(5, 3, 2, 0.1, 3);
  const auto c = build_cache(m, init_params(m), d, 3);
  const auto path = std::filesystem::temp_directory_path() / "bcdlab_cache_roundtrip.bin";
  save_cache(c, path);
  const auto back = load_cache(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.activations, c.activations);
  EXPECT_EQ(back.prefix_end, c.prefix_end);
  EXPECT_EQ(back.prefix_checksum, c.prefix_checksum);
  EXPECT_EQ(back.build_cost, c.build_cost);
  EXPECT_EQ(back.samples, c.samples);
}

TEST(Cache, LoadRejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "bcdlab_cache_garbage.bin";
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACACHE";
  }
  EXPECT_ANY_THROW(load_cache(path));
  std::filesystem::remove(path);
}
