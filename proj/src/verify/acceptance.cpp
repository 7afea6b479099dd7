#include "bcdlab/verify/acceptance.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "bcdlab/config.hpp"
#include "bcdlab/econ.hpp"
#include "bcdlab/engine.hpp"
#include "bcdlab/gradcheck.hpp"
#include "bcdlab/memory.hpp"
#include "bcdlab/pipesim.hpp"
#include "bcdlab/preinfer.hpp"
#include "bcdlab/reference_data.hpp"
#include "bcdlab/rng.hpp"
#include "bcdlab/sampling.hpp"
#include "bcdlab/verify/oracles.hpp"

#ifndef BCDLAB_DATA_DIR
#define BCDLAB_DATA_DIR "data"
#endif

namespace bcdlab::verify {
namespace {

// Tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr std::size_t kGradShapes = 50;
constexpr double kLstsqTol = 1e-3;
constexpr double kLossGapTol = 0.1;
constexpr double kFormulaRelTol = 1e-12;
constexpr double kUfpTol = 0.01;
constexpr double kUfpReductionMax = 0.55;
constexpr double kBfTol = 0.01;
constexpr double kRealCostRelTol = 0.02;
constexpr double kCostPpTol = 1.5;
constexpr double kChiAlpha = 1e-4;

std::string num(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      if (a[i][k].shape() != b[i][k].shape()) return false;
      const auto x = a[i][k].data();
      const auto y = b[i][k].data();
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (!same_bits(x[j], y[j])) return false;
      }
    }
  }
  return true;
}

struct Loaded {
  ExperimentConfig cfg;
  Dataset data;
};

Loaded load(const AcceptanceOptions& o, const char* name) {
  Loaded l{load_experiment(o.data_dir / "configs" / name), {}};
  l.data = make_dataset(l.cfg.dataset, l.cfg.dataset_seed(), l.cfg.base_dir);
  return l;
}

// ---- AC1 ----

Tensor normal_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.normal(0.0, 1.0);
  return t;
}

Tensor id_tensor(Shape shape, std::size_t vocab, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<double>(rng.below(vocab));
  return t;
}

struct Probe {
  ModelSpec model;
  Batch batch;
};

Probe make_probe(LayerKind kind, Rng& rng) {
  const std::size_t rows = 1 + rng.below(4);
  const std::size_t in = 1 + rng.below(5);
  const std::size_t hidden = 2 + rng.below(4);
  const std::size_t out = 1 + rng.below(4);
  Probe p;
  p.model.seed = rng.next_u64();
  auto& L = p.model.layers;
  auto dense_inputs = [&] { p.batch.inputs = normal_tensor({rows, in}, rng); };
  auto mse_targets = [&](std::size_t r, std::size_t w) { p.batch.targets = normal_tensor({r, w}, rng); };
  switch (kind) {
    case LayerKind::kLinear:
    case LayerKind::kMseHead:
      L = {LayerSpec::linear(in, out), LayerSpec::mse()};
      dense_inputs();
      mse_targets(rows, out);
      break;
    case LayerKind::kReLU:
    case LayerKind::kGeLU:
      L = {LayerSpec::linear(in, hidden), kind == LayerKind::kReLU ? LayerSpec::relu() : LayerSpec::gelu(),
           LayerSpec::linear(hidden, out), LayerSpec::mse()};
      dense_inputs();
      mse_targets(rows, out);
      break;
    case LayerKind::kLayerNorm:
      L = {LayerSpec::linear(in, hidden), LayerSpec::layer_norm(hidden), LayerSpec::linear(hidden, out),
           LayerSpec::mse()};
      dense_inputs();
      mse_targets(rows, out);
      break;
    case LayerKind::kResidual:
      L = {LayerSpec::linear(in, hidden),
           LayerSpec::residual({LayerSpec::linear(hidden, hidden), LayerSpec::gelu()}),
           LayerSpec::linear(hidden, out), LayerSpec::mse()};
      dense_inputs();
      mse_targets(rows, out);
      break;
    case LayerKind::kEmbedding:
    case LayerKind::kAttention: {
      const std::size_t seq = 1 + rng.below(4);
      const std::size_t vocab = 2 + rng.below(6);
      const std::size_t dim = 1 + rng.below(4);
      L = {LayerSpec::embedding(vocab, dim, seq)};
      if (kind == LayerKind::kAttention) L.push_back(LayerSpec::attention(dim));
      L.push_back(LayerSpec::linear(dim, out));
      L.push_back(LayerSpec::mse());
      p.batch.inputs = id_tensor({rows, seq}, vocab, rng);
      mse_targets(rows, seq * out);
      break;
    }
    case LayerKind::kSoftmaxXentHead: {
      const std::size_t classes = 2 + rng.below(4);
      L = {LayerSpec::linear(in, classes), LayerSpec::softmax_xent()};
      dense_inputs();
      p.batch.targets = id_tensor({rows, 1}, classes, rng);
      break;
    }
  }
  return p;
}

CheckResult ac1(const AcceptanceOptions&) {
  CheckResult r;
  const LayerKind kinds[] = {LayerKind::kLinear,    LayerKind::kReLU,      LayerKind::kGeLU,
                             LayerKind::kLayerNorm, LayerKind::kResidual,  LayerKind::kEmbedding,
                             LayerKind::kAttention, LayerKind::kMseHead,   LayerKind::kSoftmaxXentHead};
  Rng rng(mix_seed(0xac1, 0));
  double worst = 0.0;
  std::string worst_kind;
  for (LayerKind k : kinds) {
    for (std::size_t i = 0; i < kGradShapes; ++i) {
      const Probe p = make_probe(k, rng);
      const double err = grad_check(p.model, p.batch, kGradEps);
      if (!(err <= worst) || std::isnan(err)) {
        worst = std::isnan(err) ? INFINITY : err;
        worst_kind = std::string(kind_name(k));
      }
    }
  }
  r.passed = worst <= kGradTol;
  r.detail = "max rel err " + num(worst, 3) + " (" + worst_kind + ") over 9 kinds x " +
             std::to_string(kGradShapes) + " shapes, tol " + num(kGradTol);
  return r;
}

// ---- AC2 ----

CheckResult ac2(const AcceptanceOptions& o) {
  CheckResult r;
  auto [cfg, data] = load(o, "mlp.json");
  ScheduleConfig s = cfg.schedule;
  s.blocks = 1;
  s.plateau = false;
  s.inner_budget = 200;
  s.outer_sweeps = 1;
  s.outer_tolerance = 0.0;
  const auto bcd = bcd_train(cfg.model, init_params(cfg.model), data, s, cfg.optimizer);
  const auto full = full_train(cfg.model, init_params(cfg.model), data, s, cfg.optimizer);
  bool losses_equal = bcd.history.steps.size() == full.history.steps.size();
  for (std::size_t i = 0; losses_equal && i < bcd.history.steps.size(); ++i) {
    losses_equal = same_bits(bcd.history.steps[i].loss, full.history.steps[i].loss);
  }
  const bool params_equal = same_bits(bcd.params, full.params);
  r.passed = losses_equal && params_equal && bcd.history.iterations == 200;
  r.detail = std::to_string(bcd.history.iterations) + " steps; losses " + (losses_equal ? "bitwise equal" : "DIFFER") +
             ", params " + (params_equal ? "bitwise equal" : "DIFFER");
  return r;
}

// ---- AC3 ----

CheckResult ac3(const AcceptanceOptions& o) {
  CheckResult r;
  auto ts = load(o, "teacher_student.json");
  const double optimum = least_squares_loss(ts.data);
  const auto reg = bcd_train(ts.cfg.model, init_params(ts.cfg.model), ts.data, ts.cfg.schedule, ts.cfg.optimizer);
  const double reg_gap = std::abs(reg.history.final_loss() - optimum);

  auto cl = load(o, "classification.json");
  const auto bcd = bcd_train(cl.cfg.model, init_params(cl.cfg.model), cl.data, cl.cfg.schedule, cl.cfg.optimizer);
  // Same number of optimizer steps for the full-parameter reference.
  ScheduleConfig matched = cl.cfg.schedule;
  matched.blocks = 1;
  matched.plateau = false;
  matched.inner_budget = bcd.history.iterations;
  matched.outer_sweeps = 1;
  const auto full = full_train(cl.cfg.model, init_params(cl.cfg.model), cl.data, matched, cl.cfg.optimizer);
  const double cls_gap = std::abs(bcd.history.final_loss() - full.history.final_loss());

  r.passed = reg_gap <= kLstsqTol && cls_gap <= kLossGapTol && ts.cfg.schedule.blocks == 3;
  r.detail = "regression: bcd " + num(reg.history.final_loss(), 8) + " vs lstsq " + num(optimum, 8) + " (gap " +
             num(reg_gap, 3) + " <= " + num(kLstsqTol) + "); classification: bcd " +
             num(bcd.history.final_loss(), 5) + " vs full " + num(full.history.final_loss(), 5) + " at " +
             std::to_string(bcd.history.iterations) + " steps (gap " + num(cls_gap, 3) + " <= " + num(kLossGapTol) +
             ")";
  return r;
}

// ---- AC4 ----

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

CheckResult ac4(const AcceptanceOptions& o) {
  CheckResult r;
  std::vector<std::string> bad;
  MemoryModel intro;
  intro.mode = MemoryMode::kIntro;
  intro.params = 1.0;
  intro.optimizer = OptimKind::kAdam;
  intro.activation_coeff = 0.7;
  const double full_act = predict(intro);
  intro.recompute = true;
  const double full_rc = predict(intro);
  intro.unfrozen = 1.0 / 3.0;
  const double third_rc = predict(intro);
  const double ratio = third_rc / full_rc;
  if (!rel_close(full_act, 5.7, kFormulaRelTol)) bad.push_back("intro u=1 gave " + num(full_act, 17) + "P");
  if (!rel_close(full_rc, 5.0, kFormulaRelTol)) bad.push_back("recompute u=1 gave " + num(full_rc, 17) + "P");
  if (!(std::abs(ratio * 100.0 - 46.67) < 0.005 && ratio < 0.5)) bad.push_back("u=1/3 ratio " + num(ratio * 100, 5) + "%");

  const std::vector<double> us(reference::kUfpFractions.begin(), reference::kUfpFractions.end());
  auto coeff = [&](OptimKind k) { return table_coefficient(k) + o.table_coeff_delta; };
  const auto sgd = ufp_table(reference::kUfpParamsMb, OptimKind::kSgd, us, coeff(OptimKind::kSgd));
  const auto adam = ufp_table(reference::kUfpParamsMb, OptimKind::kAdam, us, coeff(OptimKind::kAdam));
  double worst = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    worst = std::max({worst, std::abs(sgd[i].units - reference::kUfpSgdMb[i]),
                      std::abs(adam[i].units - reference::kUfpAdamMb[i])});
  }
  if (worst > kUfpTol) bad.push_back("ufp table off by " + num(worst, 4) + " MB");
  r.passed = bad.empty();
  std::string why;
  for (const auto& b : bad) why += "; " + b;
  r.detail = "intro " + num(full_act, 6) + "P, recompute " + num(full_rc, 6) + "P, u=1/3 " + num(ratio * 100, 4) +
             "%, ufp table max err " + num(worst, 3) + " MB" + why;
  return r;
}

// ---- AC5 ----

CheckResult ac5(const AcceptanceOptions& o) {
  CheckResult r;
  constexpr std::size_t kDim = 6;
  ModelSpec model;
  for (int i = 0; i < 12; ++i) model.layers.push_back(LayerSpec::linear(kDim, kDim));
  model.layers.push_back(LayerSpec::mse());
  model.seed = 5;
  const Dataset data = make_teacher_student(32, kDim, kDim, 0.1, 9);
  const double p = static_cast<double>(model.param_count());

  std::vector<std::string> bad;
  std::size_t adam_full = 0;
  std::size_t adam_third = 0;
  std::string summary;
  for (OptimKind kind : {OptimKind::kAdam, OptimKind::kSgd}) {
    OptimHyper hyper = kind == OptimKind::kAdam ? OptimHyper::adam_defaults() : OptimHyper::sgd_defaults();
    // deep linear chain: activations grow ~2^12 in variance, keep steps tiny; only memory is measured
    hyper.lr = 1e-6;
    for (std::size_t m = 1; m <= 4; ++m) {
      ScheduleConfig s;
      s.blocks = m;
      s.strategy = SplitStrategy::kEqualLayers;
      s.plateau = false;
      s.inner_budget = 2;
      s.outer_sweeps = 1;
      s.batch_size = 8;
      MemoryLedger ledger;
      bcd_train(model, init_params(model), data, s, hyper, &ledger);
      const std::size_t measured = ledger.snapshot().peak_model_state;
      MemoryModel mm;
      mm.params = p;
      mm.unfrozen = 1.0 / static_cast<double>(m);
      mm.optimizer = kind;
      mm.table_coeff = table_coefficient(kind) + o.table_coeff_delta;
      const double predicted = predict(mm);
      if (std::abs(static_cast<double>(measured) - predicted) > 1e-9 * predicted) {
        bad.push_back(std::string(kind == OptimKind::kAdam ? "adam" : "sgd") + " u=1/" + std::to_string(m) +
                      ": ledger " + std::to_string(measured) + " vs predicted " + num(predicted, 10));
      }
      if (kind == OptimKind::kAdam && m == 1) adam_full = measured;
      if (kind == OptimKind::kAdam && m == 3) adam_third = measured;
    }
  }
  const double share = static_cast<double>(adam_third) / static_cast<double>(adam_full);
  if (!(share <= kUfpReductionMax)) bad.push_back("adam u=1/3 peak is " + num(share * 100, 4) + "% of full");
  r.passed = bad.empty();
  r.detail = "8 runs (adam/sgd x u=1,1/2,1/3,1/4) ledger == P(1+cu); adam u=1/3 peak " + num(share * 100, 4) +
             "% of full (<= " + num(kUfpReductionMax * 100) + "%)";
  for (const auto& b : bad) r.detail += "; " + b;
  return r;
}

// ---- AC6 ----

CheckResult ac6(const AcceptanceOptions&) {
  CheckResult r;
  std::vector<std::pair<double, double>> pairs;
  for (const auto& p : reference::kAdamRounds) pairs.emplace_back(p.bcd, p.full);
  const auto bf = bf_multiplier(pairs);
  r.passed = std::abs(bf.average - kBfAverage) <= kBfTol && std::abs(bf.worst - kBfWorstRecomputed) <= kBfTol;
  r.detail = "average " + num(bf.average, 5) + " (want " + num(kBfAverage) + "), worst " + num(bf.worst, 5) +
             " (want " + num(kBfWorstRecomputed) + "; stated " + num(kBfWorstReported) + " differs, documented)";
  return r;
}

// ---- AC7 ----

CheckResult ac7(const AcceptanceOptions&) {
  CheckResult r;
  const auto catalog = GpuCatalog::defaults();
  double worst = 0.0;
  std::size_t cells = 0;
  for (const auto& row : reference::kRealCost) {
    for (int side = 0; side < 2; ++side) {
      RunRecord rec;
      rec.model = std::string(row.model);
      rec.gpu = std::string(row.gpu);
      rec.gpus_per_node = side == 0 ? row.full_gpus : row.bcd_gpus;
      rec.hours = side == 0 ? row.full_hours : row.bcd_hours;
      const double want = side == 0 ? row.full_cost : row.bcd_cost;
      worst = std::max(worst, std::abs(run_cost(rec, catalog) - want) / want);
      ++cells;
    }
  }
  r.passed = worst <= kRealCostRelTol && cells == 16;
  r.detail = std::to_string(cells) + " cost cells (8 rows x full/bcd), max rel err " + num(worst * 100, 3) +
             "% (tol " + num(kRealCostRelTol * 100) + "%)";
  return r;
}

// ---- AC8 ----

RunRecord iter_record(const reference::IterTime& t, const char* gpu) {
  RunRecord rec;
  rec.model = std::string(t.model);
  rec.nodes = t.nodes;
  rec.gpus_per_node = t.gpus_per_node;
  rec.iter_time_ms = t.ms;
  rec.gpu = gpu;
  return rec;
}

CheckResult ac8(const AcceptanceOptions&) {
  CheckResult r;
  const auto catalog = GpuCatalog::defaults();
  const RunRecord full = iter_record(reference::kFullA100[0], "A100");
  const RunRecord bcd = iter_record(reference::kBcd4090[0], "RTX4090");
  const double got = cost_reduction(full, bcd, kBfAverage, catalog, CostMode::kTheoretical);
  const double want = reference::kCostA100.average[0];
  r.passed = std::abs(got - want) <= kCostPpTol;
  r.detail = "G-1.6B 4090 vs A100 at bf " + num(kBfAverage) + ": " + num(got, 4) + "% vs printed " + num(want) +
             "% (tol " + num(kCostPpTol) + " pp)";

  // Remaining projected cells: reported, not asserted.
  std::vector<std::string> flagged;
  struct Table {
    const char* name;
    const reference::IterTime* full;
    const char* gpu;
    const reference::ReductionRow* printed;
  };
  const Table tables[] = {{"cost-4090", reference::kFull4090.data(), "RTX4090", &reference::kCost4090},
                          {"cost-a100", reference::kFullA100.data(), "A100", &reference::kCostA100},
                          {"cost-a800", reference::kFullA100.data(), "A800", &reference::kCostA800}};
  for (const auto& t : tables) {
    for (std::size_t i = 0; i < 4; ++i) {
      const RunRecord f = iter_record(t.full[i], t.gpu);
      const RunRecord b = iter_record(reference::kBcd4090[i], "RTX4090");
      for (int worst = 0; worst < 2; ++worst) {
        const double bf = worst ? kBfWorstReported : kBfAverage;
        const double v = cost_reduction(f, b, bf, catalog, CostMode::kTheoretical);
        const double printed = worst ? t.printed->worst[i] : t.printed->average[i];
        if (std::abs(v - printed) > kCostPpTol) {
          flagged.push_back(std::string(t.name) + "/" + std::string(t.full[i].model) + (worst ? "/worst" : "/avg") +
                            "=" + num(v, 3));
        }
      }
    }
  }
  r.detail += "; " + std::to_string(flagged.size()) + "/24 other cells differ by > " + num(kCostPpTol) +
              " pp (formula values in `bcdlab cost`)";
  return r;
}

// ---- AC9 ----

CheckResult ac9(const AcceptanceOptions& o) {
  CheckResult r;
  auto [cfg, data] = load(o, "mlp.json");
  ScheduleConfig s = cfg.schedule;
  s.blocks = 3;
  s.plateau = false;
  s.inner_budget = 25;
  s.outer_sweeps = 1;
  s.outer_tolerance = 0.0;

  ScheduleConfig cached = s;
  cached.preinference = true;
  ScheduleConfig plain = s;
  plain.preinference = false;
  const auto a = bcd_train(cfg.model, init_params(cfg.model), data, plain, cfg.optimizer);
  const auto b = bcd_train(cfg.model, init_params(cfg.model), data, cached, cfg.optimizer);
  bool engine_equal = same_bits(a.params, b.params) && a.history.steps.size() == b.history.steps.size();
  for (std::size_t i = 0; engine_equal && i < a.history.steps.size(); ++i) {
    engine_equal = same_bits(a.history.steps[i].loss, b.history.steps[i].loss);
  }

  // Step-level accounting over the same sweep.
  const auto plan = plan_model(cfg.model);
  const Partition part = split_layers(cfg.model, s.blocks, s.strategy);
  ParamSet pa = init_params(cfg.model);
  ParamSet pb = pa;
  BatchStream stream(data.size(), s.batch_size, s.sample_rate, s.seed);
  std::size_t steps = 0;
  std::size_t mismatched = 0;
  std::uint64_t saved = 0;
  std::uint64_t total = 0;
  for (std::size_t blk = 0; blk < part.block_count(); ++blk) {
    const FreezeMask mask = mask_for(part, blk);
    OptimState sa = alloc_state(cfg.model, mask, cfg.optimizer);
    OptimState sb = alloc_state(cfg.model, mask, cfg.optimizer);
    const ActivationCache cache = build_cache(cfg.model, pb, data, mask.backward_start);
    for (std::size_t k = 0; k < s.inner_budget; ++k) {
      const auto batch = stream.next();
      OpCounter oa;
      OpCounter ob;
      train_step(cfg.model, pa, data, batch, mask, sa, cfg.optimizer, &oa);
      train_step_cached(cfg.model, pb, cache, data, batch, mask, sb, cfg.optimizer, &ob);
      std::uint64_t prefix = 0;
      for (std::size_t l = 0; l < mask.backward_start; ++l) {
        const std::size_t rows = batch.size() * plan[l].rows_per_sample;
        prefix += forward_flops(cfg.model.layers[l], rows, plan[l].in_width, plan[l].rows_per_sample);
      }
      if (oa.forward - ob.forward != prefix) ++mismatched;
      saved += prefix;
      total += oa.forward;
      ++steps;
    }
  }
  const bool step_equal = same_bits(pa, pb);
  r.passed = engine_equal && step_equal && mismatched == 0;
  r.detail = "3-block sweep: engine params/losses " + std::string(engine_equal ? "bitwise equal" : "DIFFER") +
             ", step params " + (step_equal ? "bitwise equal" : "DIFFER") + "; " + std::to_string(steps - mismatched) +
             "/" + std::to_string(steps) + " steps drop exactly the prefix flops (" +
             num(100.0 * static_cast<double>(saved) / static_cast<double>(total), 4) + "% of forward work)";
  return r;
}

// ---- AC10 ----

PipelineConfig random_pipeline(Rng& rng, std::size_t s, std::size_t m) {
  PipelineConfig c;
  c.microbatches = m;
  for (std::size_t i = 0; i < s; ++i) {
    StageSpec st;
    st.fwd_ms = rng.uniform(0.0, 10.0);
    st.bwd_full_ms = rng.uniform(0.0, 20.0);
    st.frozen = rng.uniform() < 0.4;
    st.device = rng.uniform() < 0.3 ? rng.below(s) : i;
    c.stages.push_back(st);
  }
  c.comm_ms = rng.uniform() < 0.5 ? rng.uniform(0.0, 3.0) : 0.0;
  c.frozen_bwd_factor = rng.uniform();
  c.preinference = rng.uniform() < 0.5;
  c.allreduce_ms = rng.uniform(0.0, 5.0);
  return c;
}

CheckResult ac10(const AcceptanceOptions&) {
  CheckResult r;
  Rng rng(mix_seed(0xac10, 0));
  std::size_t closed_bad = 0;
  std::size_t closed_n = 0;
  for (std::size_t s = 1; s <= 4; ++s) {
    for (std::size_t m = 1; m <= 8; ++m) {
      PipelineConfig c;
      c.microbatches = m;
      const double f = static_cast<double>(1 + rng.below(9));
      const double b = static_cast<double>(1 + rng.below(9));
      for (std::size_t i = 0; i < s; ++i) c.stages.push_back({f, b, false, i});
      const double got = simulate(c).iter_time_ms;
      if (got != fill_drain_closed_form(s, m, f, b) || got != longest_path_makespan(c)) ++closed_bad;
      ++closed_n;
    }
  }
  std::size_t oracle_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const auto c = random_pipeline(rng, 1 + rng.below(4), 1 + rng.below(8));
    const auto res = simulate(c);
    if (res.iter_time_ms != longest_path_makespan(c)) ++oracle_bad;
    for (const auto& [dev, busy] : res.device_busy_ms) {
      // summed durations vs chained end times can differ in the last bit
      if (busy > res.iter_time_ms * (1.0 + 1e-12)) ++oracle_bad;
    }
  }
  std::size_t mono_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    auto c = random_pipeline(rng, 1 + rng.below(4), 1 + rng.below(8));
    const double before = simulate(c).iter_time_ms;
    const std::size_t st = rng.below(c.stages.size());
    const int what = static_cast<int>(rng.below(4));
    bool expect_up = true;
    if (what == 0) c.stages[st].fwd_ms += rng.uniform(0.0, 5.0);
    else if (what == 1) c.stages[st].bwd_full_ms += rng.uniform(0.0, 5.0);
    else if (what == 2) c.comm_ms += rng.uniform(0.0, 2.0);
    else {
      c.stages[st].frozen = true;
      expect_up = false;
    }
    const double after = simulate(c).iter_time_ms;
    if (expect_up ? after < before : after > before) ++mono_bad;
  }
  r.passed = closed_bad == 0 && oracle_bad == 0 && mono_bad == 0;
  r.detail = "closed form " + std::to_string(closed_n - closed_bad) + "/" + std::to_string(closed_n) +
             " exact; oracle " + std::to_string(100 - std::min<std::size_t>(oracle_bad, 100)) +
             "/100 exact; monotonicity violations " + std::to_string(mono_bad) + "/1000";
  return r;
}

// ---- AC11 ----

CheckResult ac11(const AcceptanceOptions&) {
  CheckResult r;
  constexpr std::size_t kN = 1000;
  constexpr std::size_t kEpochs = 200;
  constexpr double kRate = 0.9;
  std::vector<std::size_t> counts(kN, 0);
  std::size_t bad_epochs = 0;
  for (std::size_t e = 0; e < kEpochs; ++e) {
    const auto idx = subsample(kN, kRate, 2024, e);
    const std::set<std::size_t> distinct(idx.begin(), idx.end());
    if (idx.size() != 900 || distinct.size() != 900 || *distinct.rbegin() >= kN) ++bad_epochs;
    for (auto i : idx) ++counts[i];
  }
  // One epoch through the batch stream sees the same number of distinct samples.
  BatchStream stream(kN, 64, kRate, 2024);
  std::set<std::size_t> seen;
  while (stream.epochs_started() <= 1) {
    const auto b = stream.next();
    if (stream.epochs_started() > 1) break;
    seen.insert(b.begin(), b.end());
  }
  if (seen.size() != 900) ++bad_epochs;
  const auto chi = inclusion_chi_square(counts, kEpochs, kRate);
  const bool uniform = chi.cdf > kChiAlpha / 2 && chi.cdf < 1.0 - kChiAlpha / 2;
  r.passed = bad_epochs == 0 && uniform;
  r.detail = std::to_string(kEpochs - std::min(bad_epochs, kEpochs)) + "/" + std::to_string(kEpochs) +
             " epochs with exactly 900 distinct; chi2 " + num(chi.statistic, 6) + " on " + num(chi.dof) +
             " dof, cdf " + num(chi.cdf, 4) + " (two-sided alpha " + num(kChiAlpha) + ")";
  return r;
}

}  // namespace

std::filesystem::path default_data_dir() { return BCDLAB_DATA_DIR; }

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"AC1", "gradient correctness", 30.0, ac1},
      {"AC2", "single-block equivalence", 10.0, ac2},
      {"AC3", "desk-scale validity", 120.0, ac3},
      {"AC4", "memory formulas", 0.0, ac4},
      {"AC5", "measured vs predicted memory", 0.0, ac5},
      {"AC6", "B-F multiplier", 0.0, ac6},
      {"AC7", "empirical cost", 0.0, ac7},
      {"AC8", "projected cost", 0.0, ac8},
      {"AC9", "pre-inference equivalence", 60.0, ac9},
      {"AC10", "pipeline simulator", 0.0, ac10},
      {"AC11", "subsampling", 0.0, ac11},
  };
  return list;
}

std::vector<CheckResult> run_acceptance(const AcceptanceOptions& options, const std::vector<std::string>& only) {
  AcceptanceOptions o = options;
  if (o.data_dir.empty()) o.data_dir = default_data_dir();
  std::vector<CheckResult> results;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run(o);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.id = c.id;
    r.title = c.title;
    if (c.budget_seconds > 0.0 && r.seconds > c.budget_seconds) {
      r.passed = false;
      r.detail += "; over time budget " + num(c.budget_seconds) + " s";
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CheckResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(5) << r.id << std::setw(30) << r.title << r.detail
    << " (" << std::fixed << std::setprecision(2) << r.seconds << " s)";
  return s.str();
}

}  // namespace bcdlab::verify
