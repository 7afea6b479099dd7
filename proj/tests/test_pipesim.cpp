#include <gtest/gtest.h>

#include <map>

#include "bcdlab/pipesim.hpp"
#include "bcdlab/rng.hpp"
#include "bcdlab/verify/oracles.hpp"

using namespace bcdlab;

namespace {

PipelineConfig uniform(std::size_t stages, std::size_t m, double f, double b) {
  PipelineConfig c;
  c.microbatches = m;
  for (std::size_t i = 0; i < stages; ++i) c.stages.push_back({f, b, false, i});
  return c;
}

}  // namespace

TEST(Simulate, SingleStageSingleMicrobatch) {
  const auto r = simulate(uniform(1, 1, 2, 3));
  EXPECT_EQ(r.iter_time_ms, 5.0);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].task(), "F0.0");
  EXPECT_EQ(r.trace[1].task(), "B0.0");
}

TEST(Simulate, FillDrainClosedForm) {
  for (std::size_t s = 1; s <= 6; ++s) {
    for (std::size_t m = 1; m <= 10; ++m) {
      const auto c = uniform(s, m, 1.5, 2.25);
      EXPECT_EQ(simulate(c).iter_time_ms, verify::fill_drain_closed_form(s, m, 1.5, 2.25)) << s << "," << m;
    }
  }
}

TEST(Simulate, PreinferenceElidesFrozenPrefix) {
  PipelineConfig three = uniform(3, 4, 2, 3);
  three.stages[0].frozen = true;
  three.preinference = true;
  three.allreduce_ms = 7;
  PipelineConfig two = uniform(2, 4, 2, 3);
  two.stages[0].device = 1;
  two.stages[1].device = 2;
  const auto a = simulate(three);
  EXPECT_EQ(a.iter_time_ms, simulate(two).iter_time_ms);
  EXPECT_EQ(a.elided_stages, (std::vector<std::size_t>{0}));
  EXPECT_EQ(a.prefix_build_ms, 2.0 * 4 + 7);
  for (const auto& e : a.trace) EXPECT_NE(e.stage, 0u);
}

TEST(Simulate, LastStageNeverElided) {
  PipelineConfig c = uniform(2, 2, 1, 1);
  for (auto& s : c.stages) s.frozen = true;
  c.preinference = true;
  const auto r = simulate(c);
  EXPECT_EQ(r.elided_stages, (std::vector<std::size_t>{0}));
  EXPECT_GT(r.iter_time_ms, 0.0);
}

TEST(Simulate, FrozenStageUsesFactor) {
  PipelineConfig c = uniform(1, 1, 2, 4);
  c.stages[0].frozen = true;
  c.frozen_bwd_factor = 0.25;
  EXPECT_EQ(simulate(c).iter_time_ms, 3.0);
}

TEST(Simulate, CommOnlyAcrossDevices) {
  PipelineConfig same = uniform(2, 1, 1, 1);
  same.stages[1].device = 0;
  same.comm_ms = 10;
  EXPECT_EQ(simulate(same).iter_time_ms, 4.0);
  PipelineConfig split = uniform(2, 1, 1, 1);
  split.comm_ms = 10;
  EXPECT_EQ(simulate(split).iter_time_ms, 24.0);
}

TEST(Simulate, InvalidConfigThrows) {
  PipelineConfig c;
  EXPECT_ANY_THROW(simulate(c));
  c = uniform(2, 0, 1, 1);
  EXPECT_ANY_THROW(simulate(c));
  c = uniform(2, 1, -1, 1);
  EXPECT_ANY_THROW(simulate(c));
  c = uniform(2, 1, 1, 1);
  c.frozen_bwd_factor = 1.5;
  EXPECT_ANY_THROW(simulate(c));
}

TEST(Simulate, DeterministicTrace) {
  PipelineConfig c = uniform(3, 5, 1.1, 2.3);
  c.comm_ms = 0.4;
  c.stages[1].frozen = true;
  EXPECT_EQ(simulate(c).trace_csv(), simulate(c).trace_csv());
  EXPECT_EQ(simulate(c).trace_csv().rfind("start_ms,end_ms,device,task\n", 0), 0u);
}

TEST(Simulate, DevicesNeverOverlap) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    PipelineConfig c;
    const std::size_t s = 1 + rng.below(5);
    c.microbatches = 1 + rng.below(6);
    for (std::size_t i = 0; i < s; ++i) {
      c.stages.push_back({rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform() < 0.3, rng.below(3)});
    }
    c.comm_ms = rng.uniform(0, 1);
    const auto r = simulate(c);
    std::map<std::size_t, double> last_end;
    for (const auto& e : r.trace) {
      EXPECT_GE(e.start_ms, last_end[e.device]);
      last_end[e.device] = e.end_ms;
      EXPECT_LE(e.end_ms, r.iter_time_ms);
    }
  }
}

TEST(Compare, IdenticalConfigsAndScaling) {
  PipelineConfig c = uniform(3, 4, 2, 3);
  c.stages[0].frozen = true;
  const std::vector<std::pair<std::string, PipelineConfig>> cfgs = {
      {"a", c}, {"b", c}, {"half", scaled(c, 0.5)}};
  const auto rows = compare(cfgs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].speedup, 1.0);
  EXPECT_DOUBLE_EQ(rows[2].iter_time_ms, rows[0].iter_time_ms / 2);
  EXPECT_EQ(compare_csv(rows).substr(0, 32), "config,iter_time_ms,speedup_vs_f");
  EXPECT_ANY_THROW(compare({}));
}

TEST(Calibrate, HitsTarget) {
  PipelineConfig c = uniform(4, 8, 3, 5);
  c.comm_ms = 0.5;
  const auto cal = calibrate(c, 123.0);
  EXPECT_LT(cal.relative_error, 1e-9);
  EXPECT_NEAR(simulate(scaled(c, cal.scale)).iter_time_ms, 123.0, 1e-6);
}
