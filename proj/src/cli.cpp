#include "bcdlab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>

#include "bcdlab/econ.hpp"
#include "bcdlab/errors.hpp"
#include "bcdlab/reference_data.hpp"
#include "bcdlab/report.hpp"
#include "bcdlab/verify/acceptance.hpp"

namespace bcdlab::cli {
namespace {

namespace fs = std::filesystem;

std::optional<bool> on_off(const std::string& v) {
  if (v.empty()) return std::nullopt;
  if (v == "on") return true;
  if (v == "off") return false;
  throw SchemaError("--preinference: expected on or off");
}

void emit(std::ostream& out, const std::optional<fs::path>& dir, const std::string& file, const std::string& text,
          bool print = true) {
  if (dir) {
    fs::create_directories(*dir);
    write_text_file(*dir / file, text);
  }
  if (print) out << "# " << file << "\n" << text;
}

std::string optim_name(OptimKind k) { return k == OptimKind::kAdam ? "adam" : "sgd"; }

// ---- train ----

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string preinference;
  std::string mode;
};

double unfrozen_fraction(const TrainResult& r) {
  const double total = static_cast<double>(r.partition.total_params());
  if (total == 0.0) return 1.0;
  return static_cast<double>(*std::max_element(r.partition.param_counts.begin(), r.partition.param_counts.end())) /
         total;
}

std::string memory_csv(const TrainResult& r, double predicted) {
  CsvTable t({"category", "live_float_units", "peak_float_units"});
  const auto& m = r.history.memory;
  for (std::size_t i = 0; i < kMemCategoryCount; ++i) {
    t.add_row({std::string(category_name(static_cast<MemCategory>(i))), std::to_string(m.live[i]),
               std::to_string(m.peak[i])});
  }
  t.add_row({"model_state", "", std::to_string(m.peak_model_state)});
  t.add_row({"total", std::to_string(m.live_total), std::to_string(m.peak_total)});
  t.add_row({"predicted_model_state", "", format_double(predicted)});
  return t.str();
}

double predicted_units(const ExperimentConfig& cfg, const TrainResult& r) {
  MemoryModel mm;
  mm.mode = cfg.memory_mode;
  mm.params = static_cast<double>(cfg.model.param_count());
  mm.unfrozen = unfrozen_fraction(r);
  mm.optimizer = cfg.optimizer.kind;
  mm.activation_coeff = cfg.activation_coeff;
  mm.recompute = cfg.recompute;
  return predict(mm);
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_experiment(a.config);
  if (a.seed) cfg.apply_seed(*a.seed);
  if (auto p = on_off(a.preinference)) cfg.schedule.preinference = *p;
  if (a.mode == "full") cfg.mode = TrainMode::kFull;
  else if (a.mode == "bcd") cfg.mode = TrainMode::kBcd;
  else if (!a.mode.empty()) throw SchemaError("--mode: expected full or bcd");
  const fs::path dir = a.out.empty() ? fs::path(cfg.output_dir) : fs::path(a.out);

  Dataset data;
  try {
    data = make_dataset(cfg.dataset, cfg.dataset_seed(), cfg.base_dir);
    plan_model(cfg.model);
    if (data.inputs.cols() != cfg.model.input_width()) {
      throw ShapeError("dataset width " + std::to_string(data.inputs.cols()) + " does not match model input width " +
                       std::to_string(cfg.model.input_width()));
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("dataset: ") + e.what());
  }

  MemoryLedger ledger;
  TrainResult result;
  try {
    result = cfg.mode == TrainMode::kBcd
                 ? bcd_train(cfg.model, init_params(cfg.model), data, cfg.schedule, cfg.optimizer, &ledger)
                 : full_train(cfg.model, init_params(cfg.model), data, cfg.schedule, cfg.optimizer, &ledger);
  } catch (const DivergenceError& e) {
    err << "diverged in block " << e.block() << ": " << e.what() << "\n";
    return kExitDivergence;
  }
  fs::create_directories(dir);
  write_text_file(dir / "history.csv", result.history.csv());
  const Json summary = train_summary(cfg, result, data.size());
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  write_text_file(dir / "memory.csv", memory_csv(result, predicted_units(cfg, result)));
  out << cfg.name << ": " << (cfg.mode == TrainMode::kBcd ? "bcd" : "full") << " " << result.history.iterations
      << " steps, " << result.history.sweeps << " sweeps, final loss " << format_double(result.history.final_loss())
      << ", peak " << result.history.peak_float_units << " float units -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- report ----

struct Tables {
  std::map<std::string, std::map<std::string, Json>> summaries;  // name -> mode -> summary
  std::vector<RunRecord> records;
  std::optional<GpuCatalog> catalog;
  std::vector<std::pair<double, double>> pairs;
};

void ingest(const fs::path& path, Tables& t) {
  if (!fs::exists(path)) throw SchemaError("missing file: " + path.string());
  const Json j = load_json(path);
  if (!j.is_object()) throw SchemaError(path.string() + ": expected an object");
  const std::string kind = j.value("kind", "train_summary");
  if (kind == "run_records") {
    require_known_keys(j, {"kind", "catalog", "records"}, path.string());
    if (j.contains("catalog")) t.catalog = catalog_from_json(j.at("catalog"));
    for (const auto& r : j.at("records")) t.records.push_back(run_record_from_json(r));
  } else if (kind == "round_pairs") {
    require_known_keys(j, {"kind", "pairs"}, path.string());
    for (const auto& p : j.at("pairs")) {
      if (!p.is_array() || p.size() != 2) throw SchemaError(path.string() + ": pairs are [bcd, full]");
      t.pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  } else if (kind == "train_summary") {
    for (const char* key : {"name", "mode", "iterations", "epochs", "final_loss"}) {
      if (!j.contains(key)) throw SchemaError(path.string() + ": summary lacks '" + key + "'");
    }
    t.summaries[j.at("name").get<std::string>()][j.at("mode").get<std::string>()] = j;
  } else {
    throw SchemaError(path.string() + ": unknown kind '" + kind + "'");
  }
}

std::vector<std::pair<RunRecord, RunRecord>> pair_records(const std::vector<RunRecord>& records) {
  std::vector<std::pair<RunRecord, RunRecord>> out;
  for (const auto& f : records) {
    if (f.method != RunMethod::kFull) continue;
    for (const auto& b : records) {
      if (b.method == RunMethod::kBcd && b.model == f.model && b.dataset == f.dataset && b.gpu == f.gpu) {
        out.emplace_back(f, b);
        break;
      }
    }
  }
  return out;
}

std::string gpu_hours_csv(const std::vector<std::pair<RunRecord, RunRecord>>& pairs) {
  CsvTable t({"model", "dataset", "platform", "full_gpu_hours", "bcd_gpu_hours", "gpu_hour_reduction_pct"});
  for (const auto& [f, b] : pairs) {
    t.add_row({f.model, f.dataset, f.gpu, format_fixed(gpu_hours(f), 2), format_fixed(gpu_hours(b), 2),
               format_fixed(gpu_hour_reduction(f, b, 1.0, CostMode::kEmpirical), 1)});
  }
  return t.str();
}

std::string bf_csv(const std::vector<std::pair<double, double>>& pairs) {
  const auto bf = bf_multiplier(pairs);
  CsvTable t({"pairs", "average", "worst"});
  t.add_row({std::to_string(bf.pairs), format_fixed(bf.average, 4), format_fixed(bf.worst, 4)});
  return t.str();
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out_dir, std::ostream& out) {
  Tables t;
  for (const auto& p : paths) ingest(p, t);
  std::optional<fs::path> dir;
  if (!out_dir.empty()) dir = out_dir;

  if (!t.summaries.empty()) {
    CsvTable validity({"model", "full_iterations", "full_epochs", "full_loss", "bcd_iterations", "bcd_epochs",
                       "bcd_loss", "bf_ratio", "loss_gap"});
    CsvTable ufp({"model", "mode", "blocks", "ufp", "optimizer", "peak_model_state_float_units",
                  "predicted_model_state_float_units"});
    for (const auto& [name, modes] : t.summaries) {
      auto cell = [&](const char* mode, const char* key) -> std::string {
        auto it = modes.find(mode);
        if (it == modes.end() || !it->second.contains(key)) return "";
        const auto& v = it->second.at(key);
        return v.is_number_integer() ? std::to_string(v.get<std::int64_t>()) : format_double(v.get<double>());
      };
      std::string ratio, gap;
      if (modes.contains("full") && modes.contains("bcd")) {
        const double fi = modes.at("full").at("iterations").get<double>();
        const double bi = modes.at("bcd").at("iterations").get<double>();
        ratio = format_fixed(bi / fi, 4);
        gap = format_double(modes.at("bcd").at("final_loss").get<double>() -
                            modes.at("full").at("final_loss").get<double>());
      }
      validity.add_row({name, cell("full", "iterations"), cell("full", "epochs"), cell("full", "final_loss"),
                        cell("bcd", "iterations"), cell("bcd", "epochs"), cell("bcd", "final_loss"), ratio, gap});
      for (const auto& [mode, s] : modes) {
        ufp.add_row({name, mode, std::to_string(s.value("blocks", 1)), format_double(s.value("unfrozen_fraction", 1.0)),
                     s.value("optimizer", std::string("?")), std::to_string(s.value("peak_model_state_units", 0)),
                     format_double(s.value("predicted_model_state_units", 0.0))});
      }
    }
    emit(out, dir, "validity.csv", validity.str());
    emit(out, dir, "ufp.csv", ufp.str());
  }
  if (!t.records.empty()) {
    const auto pairs = pair_records(t.records);
    const GpuCatalog catalog = t.catalog.value_or(GpuCatalog::defaults());
    emit(out, dir, "cost.csv", empirical_cost_csv(pairs, catalog));
    emit(out, dir, "gpu_hours.csv", gpu_hours_csv(pairs));
  }
  if (!t.pairs.empty()) emit(out, dir, "bf.csv", bf_csv(t.pairs));
  return kExitOk;
}

// ---- cost / gpu-hours ----

struct ProjectedTable {
  const char* platform;
  const reference::IterTime* full;
  const char* gpu;
  const reference::ReductionRow* cost;
  const reference::ReductionRow* hours;
};

std::string projected_csv(bool hours, const GpuCatalog& catalog, double bf_avg, double bf_worst, double flag_pp) {
  const ProjectedTable tables[] = {
      {"RTX4090", reference::kFull4090.data(), "RTX4090", &reference::kCost4090, &reference::kGpuHours4090},
      {"A100", reference::kFullA100.data(), "A100", &reference::kCostA100, &reference::kGpuHoursA100},
      {"A800", reference::kFullA100.data(), "A800", &reference::kCostA800, &reference::kGpuHoursA800},
  };
  CsvTable t({"full_platform", "model", "scenario", "bf", "full_ng", "bcd_ng",
              hours ? "gpu_hour_reduction_pct" : "cost_reduction_pct", "printed_pct", "flag"});
  for (const auto& tb : tables) {
    for (std::size_t i = 0; i < 4; ++i) {
      RunRecord f;
      f.model = std::string(tb.full[i].model);
      f.nodes = tb.full[i].nodes;
      f.gpus_per_node = tb.full[i].gpus_per_node;
      f.iter_time_ms = tb.full[i].ms;
      f.gpu = tb.gpu;
      const auto& bi = reference::kBcd4090[i];
      RunRecord b;
      b.model = f.model;
      b.method = RunMethod::kBcd;
      b.nodes = bi.nodes;
      b.gpus_per_node = bi.gpus_per_node;
      b.iter_time_ms = bi.ms;
      b.gpu = "RTX4090";
      for (int worst = 1; worst >= 0; --worst) {
        const double bf = worst ? bf_worst : bf_avg;
        const double v = hours ? gpu_hour_reduction(f, b, bf) : cost_reduction(f, b, bf, catalog);
        const auto* row = hours ? tb.hours : tb.cost;
        const double printed = worst ? row->worst[i] : row->average[i];
        t.add_row({tb.platform, f.model, worst ? "worst" : "average", format_double(bf), f.shape(), b.shape(),
                   format_fixed(v, 1), format_double(printed), std::abs(v - printed) > flag_pp ? "differs" : ""});
      }
    }
  }
  return t.str();
}

struct EconArgs {
  std::string config;
  std::string out;
  double bf_average = kBfAverage;
  double bf_worst = kBfWorstReported;
  std::string catalog;
};

GpuCatalog pick_catalog(const std::string& name) {
  if (name.empty() || name == "default") return GpuCatalog::defaults();
  for (auto& [n, c] : GpuCatalog::alternates()) {
    if (n == name) {
      // Providers that do not list a GPU fall back to the default rate for it.
      GpuCatalog merged = GpuCatalog::defaults();
      for (const auto& [gpu, rate] : c.rates()) merged.set(gpu, rate);
      return merged;
    }
  }
  throw SchemaError("--catalog: unknown catalog '" + name + "'");
}

int cmd_econ(bool hours, const EconArgs& a, std::ostream& out) {
  std::optional<fs::path> dir;
  if (!a.out.empty()) dir = a.out;
  GpuCatalog catalog = pick_catalog(a.catalog);
  const std::string file = hours ? "gpu_hours.csv" : "cost.csv";
  if (!a.config.empty()) {
    Tables t;
    ingest(a.config, t);
    if (t.records.empty()) throw SchemaError(a.config + ": no run records");
    if (t.catalog && a.catalog.empty()) catalog = *t.catalog;
    const auto pairs = pair_records(t.records);
    emit(out, dir, file, hours ? gpu_hours_csv(pairs) : empirical_cost_csv(pairs, catalog));
    return kExitOk;
  }
  emit(out, dir, hours ? "projected_gpu_hours.csv" : "projected_cost.csv",
       projected_csv(hours, catalog, a.bf_average, a.bf_worst, 1.5));
  return kExitOk;
}

int cmd_bf(const std::string& config, const std::string& out_dir, std::ostream& out) {
  std::vector<std::pair<double, double>> pairs;
  CsvTable detail({"model", "bcd_rounds", "full_rounds", "ratio"});
  if (config.empty()) {
    for (const auto& p : reference::kAdamRounds) {
      pairs.emplace_back(p.bcd, p.full);
      detail.add_row({std::string(p.model), format_double(p.bcd), format_double(p.full), format_fixed(p.bcd / p.full, 4)});
    }
  } else {
    Tables t;
    ingest(config, t);
    if (t.pairs.empty()) throw SchemaError(config + ": no round pairs");
    pairs = t.pairs;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      detail.add_row({"pair" + std::to_string(i), format_double(pairs[i].first), format_double(pairs[i].second),
                      format_fixed(pairs[i].first / pairs[i].second, 4)});
    }
  }
  std::optional<fs::path> dir;
  if (!out_dir.empty()) dir = out_dir;
  emit(out, dir, "bf_pairs.csv", detail.str());
  emit(out, dir, "bf.csv", bf_csv(pairs));
  return kExitOk;
}

// ---- pipesim ----

struct PipeArgs {
  std::string config;
  std::string out;
  std::string preinference;
  double calibrate_ms = 0.0;
};

int cmd_pipesim(const PipeArgs& a, std::ostream& out) {
  const Json j = load_json(a.config);
  std::optional<fs::path> dir;
  if (!a.out.empty()) dir = a.out;
  const auto pre = on_off(a.preinference);
  if (j.is_object() && j.contains("configs")) {
    require_known_keys(j, {"configs"}, "pipeline set");
    std::vector<std::pair<std::string, PipelineConfig>> configs;
    for (const auto& c : j.at("configs")) {
      Json body = c;
      const std::string name = body.value("name", "config" + std::to_string(configs.size()));
      body.erase("name");
      PipelineConfig pc = pipeline_from_json(body);
      if (pre) pc.preinference = *pre;
      configs.emplace_back(name, pc);
    }
    emit(out, dir, "compare.csv", compare_csv(compare(configs)));
    return kExitOk;
  }
  PipelineConfig cfg = pipeline_from_json(j);
  if (pre) cfg.preinference = *pre;
  const SimResult r = simulate(cfg);
  CsvTable s({"iter_time_ms", "prefix_build_ms", "elided_stages", "microbatches"});
  std::string elided;
  for (auto e : r.elided_stages) elided += (elided.empty() ? "" : ";") + std::to_string(e);
  s.add_row({format_double(r.iter_time_ms), format_double(r.prefix_build_ms), elided, std::to_string(cfg.microbatches)});
  emit(out, dir, "pipesim.csv", s.str());
  emit(out, dir, "trace.csv", r.trace_csv(), !dir.has_value());
  if (a.calibrate_ms > 0.0) {
    const auto c = calibrate(cfg, a.calibrate_ms);
    CsvTable ct({"target_ms", "scale", "predicted_ms", "relative_error"});
    ct.add_row({format_double(c.target_ms), format_double(c.scale), format_double(c.predicted_ms),
                format_double(c.relative_error)});
    emit(out, dir, "calibration.csv", ct.str());
  }
  return kExitOk;
}

// ---- memtable ----

struct MemArgs {
  double params = reference::kUfpParamsMb;
  std::string optimizer = "both";
  std::vector<std::string> ufp = {"1", "1/2", "1/3", "1/4"};
  std::string unit = "MB";
  std::string out;
};

double parse_fraction(const std::string& s) {
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    }
    const double num = std::stod(s.substr(0, slash));
    const double den = std::stod(s.substr(slash + 1));
    return num / den;
  } catch (const std::exception&) {
    throw SchemaError("--ufp: cannot parse '" + s + "'");
  }
}

int cmd_memtable(const MemArgs& a, std::ostream& out) {
  std::vector<double> us;
  for (const auto& s : a.ufp) us.push_back(parse_fraction(s));
  std::vector<OptimKind> kinds;
  if (a.optimizer == "sgd" || a.optimizer == "both") kinds.push_back(OptimKind::kSgd);
  if (a.optimizer == "adam" || a.optimizer == "both") kinds.push_back(OptimKind::kAdam);
  if (kinds.empty()) throw SchemaError("--optimizer: expected sgd, adam or both");
  std::string text;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    std::string part;
    try {
      part = ufp_table_csv(ufp_table(a.params, kinds[i], us), kinds[i], a.unit);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what());
    }
    text += i == 0 ? part : part.substr(part.find('\n') + 1);
  }
  std::optional<fs::path> dir;
  if (!a.out.empty()) dir = a.out;
  emit(out, dir, "memtable.csv", text);
  return kExitOk;
}

// ---- verify ----

struct VerifyArgs {
  std::vector<std::string> only;
  double perturb_ufp = 0.0;
  std::string data;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  verify::AcceptanceOptions o;
  o.data_dir = a.data.empty() ? verify::default_data_dir() : fs::path(a.data);
  o.table_coeff_delta = a.perturb_ufp;
  const auto results = verify::run_acceptance(o, a.only);
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << verify::format_result(r) << "\n";
    passed += r.passed;
  }
  out << passed << "/" << results.size() << " acceptance checks passed\n";
  return passed == results.size() && !results.empty() ? kExitOk : kExitUsage;
}

}  // namespace

Json train_summary(const ExperimentConfig& cfg, const TrainResult& r, std::size_t samples) {
  const auto& h = r.history;
  Json j{{"kind", "train_summary"},
         {"name", cfg.name},
         {"mode", cfg.mode == TrainMode::kBcd ? "bcd" : "full"},
         {"seed", cfg.seed},
         {"preinference", cfg.schedule.preinference},
         {"blocks", r.partition.block_count()},
         {"optimizer", optim_name(cfg.optimizer.kind)},
         {"model_params", cfg.model.param_count()},
         {"samples", samples},
         {"iterations", h.iterations},
         {"epochs", h.epochs},
         {"epochs_started", h.epochs_started},
         {"sweeps", h.sweeps},
         {"initial_loss", h.sweep_losses.empty() ? 0.0 : h.sweep_losses.front()},
         {"final_loss", h.final_loss()},
         {"sweep_losses", h.sweep_losses},
         {"unfrozen_fraction", unfrozen_fraction(r)},
         {"peak_float_units", h.peak_float_units},
         {"peak_model_state_units", h.memory.peak_model_state},
         {"predicted_model_state_units", predicted_units(cfg, r)},
         {"memory_mode", cfg.memory_mode == MemoryMode::kTable ? "table" : "intro"},
         {"forward_flops", h.forward_flops},
         {"cache_build_flops", h.cache_build_flops}};
  if (cfg.econ) {
    RunRecord rec;
    rec.model = cfg.name;
    rec.method = cfg.mode == TrainMode::kBcd ? RunMethod::kBcd : RunMethod::kFull;
    rec.nodes = cfg.econ->nodes;
    rec.gpus_per_node = cfg.econ->gpus_per_node;
    rec.gpu = cfg.econ->gpu;
    rec.iter_time_ms = cfg.econ->iter_time_ms;
    rec.iterations = static_cast<double>(std::max<std::uint64_t>(h.iterations, 1));
    j["econ"] = {{"gpu", rec.gpu},
                 {"gpus", rec.total_gpus()},
                 {"iter_time_ms", cfg.econ->iter_time_ms},
                 {"gpu_hours", gpu_hours(rec)},
                 {"cost_usd", run_cost(rec, GpuCatalog::defaults())}};
  }
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block coordinate descent lab: training, memory, pipeline and cost tools", "bcdlab"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train a model from an experiment config");
  t->add_option("--config", train.config, "experiment config JSON")->required();
  t->add_option("--out", train.out, "output directory (default: config output_dir)");
  t->add_option("--seed", train.seed, "root seed override");
  t->add_option("--preinference", train.preinference, "on|off")->check(CLI::IsMember({"on", "off"}));
  t->add_option("--mode", train.mode, "full|bcd")->check(CLI::IsMember({"full", "bcd"}));

  std::vector<std::string> report_paths;
  std::string report_out;
  auto* rp = app.add_subcommand("report", "merge summaries and run records into tables");
  rp->add_option("paths", report_paths, "summary / record JSON files")->required();
  rp->add_option("--out", report_out, "directory for the CSV tables");

  EconArgs cost;
  auto* c = app.add_subcommand("cost", "USD cost tables (records file, or projected tables)");
  c->add_option("--config", cost.config, "run records JSON");
  c->add_option("--out", cost.out, "output directory");
  c->add_option("--bf-average", cost.bf_average, "average B-F multiplier");
  c->add_option("--bf-worst", cost.bf_worst, "worst-case B-F multiplier");
  c->add_option("--catalog", cost.catalog, "rate catalog: default, AutoDL, ParallelTechnology, AnyGPU, AIGalaxy, Hengyuan");

  EconArgs gh;
  auto* g = app.add_subcommand("gpu-hours", "GPU-hour tables (records file, or projected tables)");
  g->add_option("--config", gh.config, "run records JSON");
  g->add_option("--out", gh.out, "output directory");
  g->add_option("--bf-average", gh.bf_average, "average B-F multiplier");
  g->add_option("--bf-worst", gh.bf_worst, "worst-case B-F multiplier");

  std::string bf_config, bf_out;
  auto* b = app.add_subcommand("bf", "B-F multiplier from (bcd, full) round pairs");
  b->add_option("--config", bf_config, "round pairs JSON (default: bundled Adam pairs)");
  b->add_option("--out", bf_out, "output directory");

  PipeArgs pipe;
  auto* p = app.add_subcommand("pipesim", "simulate a pipeline iteration or compare configs");
  p->add_option("--config", pipe.config, "pipeline JSON")->required();
  p->add_option("--out", pipe.out, "output directory for trace and summary");
  p->add_option("--preinference", pipe.preinference, "on|off")->check(CLI::IsMember({"on", "off"}));
  p->add_option("--calibrate", pipe.calibrate_ms, "target iteration time in ms");

  MemArgs mem;
  auto* m = app.add_subcommand("memtable", "predicted memory by unfrozen fraction");
  m->add_option("--params", mem.params, "parameter memory P");
  m->add_option("--optimizer", mem.optimizer, "sgd|adam|both");
  m->add_option("--ufp", mem.ufp, "unfrozen fractions, e.g. 1 1/2 1/3");
  m->add_option("--unit", mem.unit, "unit label for the memory column");
  m->add_option("--out", mem.out, "output directory");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "run the acceptance checks and print a scoreboard");
  v->add_option("--only", ver.only, "criterion ids to run");
  v->add_option("--perturb-ufp", ver.perturb_ufp, "add this to the fitted memory slope (mutation test)");
  v->add_option("--data", ver.data, "data directory");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*t) return cmd_train(train, out, err);
    if (*rp) return cmd_report(report_paths, report_out, out);
    if (*c) return cmd_econ(false, cost, out);
    if (*g) return cmd_econ(true, gh, out);
    if (*b) return cmd_bf(bf_config, bf_out, out);
    if (*p) return cmd_pipesim(pipe, out);
    if (*m) return cmd_memtable(mem, out);
    if (*v) return cmd_verify(ver, out);
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "diverged in block " << e.block() << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace bcdlab::cli
