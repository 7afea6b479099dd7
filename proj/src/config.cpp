#include "bcdlab/config.hpp"

#include <algorithm>
#include <cmath>

#include "bcdlab/report.hpp"
#include "bcdlab/rng.hpp"

namespace bcdlab {
namespace {

std::string field(std::string_view where, std::string_view key) {
  return std::string(where) + "." + std::string(key);
}

const Json& require_object(const Json& j, std::string_view where) {
  if (!j.is_object()) throw SchemaError(std::string(where) + ": expected an object");
  return j;
}

std::size_t as_count(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::size_t>(v.get<std::int64_t>());
  throw SchemaError(path + ": expected a non-negative integer");
}

double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path + ": expected a number");
  return v.get<double>();
}

bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path + ": expected a string");
  return v.get<std::string>();
}

std::uint64_t as_seed(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw SchemaError(path + ": expected a non-negative integer");
}

template <typename T, typename Fn>
void read(const Json& j, std::string_view where, std::string_view key, T& out, Fn conv) {
  if (auto it = j.find(std::string(key)); it != j.end()) out = conv(*it, field(where, key));
}

void read_count(const Json& j, std::string_view where, std::string_view key, std::size_t& out) {
  read(j, where, key, out, as_count);
}
void read_number(const Json& j, std::string_view where, std::string_view key, double& out) {
  read(j, where, key, out, as_number);
}
void read_bool(const Json& j, std::string_view where, std::string_view key, bool& out) {
  read(j, where, key, out, as_bool);
}
void read_string(const Json& j, std::string_view where, std::string_view key, std::string& out) {
  read(j, where, key, out, as_string);
}

int as_positive_int(const Json& v, const std::string& path) {
  const std::size_t n = as_count(v, path);
  if (n < 1 || n > 1'000'000) throw SchemaError(path + ": expected a positive integer");
  return static_cast<int>(n);
}

// Runs a validate() and reports its message as a schema problem at `where`.
template <typename Fn>
void validated(std::string_view where, Fn fn) {
  try {
    fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string(where) + ": " + e.what());
  }
}

}  // namespace

void require_known_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require_object(obj, where);
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(field(where, key) + ": unknown field");
    }
  }
}

LayerSpec layer_from_json(const Json& j, std::string_view where) {
  require_known_keys(j, {"kind", "in", "out", "bias", "dim", "vocab", "seq_len", "inner"}, where);
  if (!j.contains("kind")) throw SchemaError(field(where, "kind") + ": missing");
  LayerSpec l;
  validated(field(where, "kind"), [&] { l.kind = kind_from_name(as_string(j.at("kind"), field(where, "kind"))); });
  read_count(j, where, "in", l.in);
  read_count(j, where, "out", l.out);
  read_bool(j, where, "bias", l.bias);
  read_count(j, where, "dim", l.dim);
  read_count(j, where, "vocab", l.vocab);
  read_count(j, where, "seq_len", l.seq_len);
  if (auto it = j.find("inner"); it != j.end()) {
    if (!it->is_array()) throw SchemaError(field(where, "inner") + ": expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      l.inner.push_back(layer_from_json((*it)[i], field(where, "inner") + "[" + std::to_string(i) + "]"));
    }
  }
  return l;
}

Json layer_to_json(const LayerSpec& l) {
  Json j{{"kind", std::string(kind_name(l.kind))}};
  switch (l.kind) {
    case LayerKind::kLinear:
      j["in"] = l.in;
      j["out"] = l.out;
      j["bias"] = l.bias;
      break;
    case LayerKind::kLayerNorm:
    case LayerKind::kAttention:
      j["dim"] = l.dim;
      break;
    case LayerKind::kEmbedding:
      j["vocab"] = l.vocab;
      j["dim"] = l.dim;
      j["seq_len"] = l.seq_len;
      break;
    case LayerKind::kResidual: {
      Json inner = Json::array();
      for (const auto& x : l.inner) inner.push_back(layer_to_json(x));
      j["inner"] = inner;
      break;
    }
    default:
      break;
  }
  return j;
}

ModelSpec model_from_json(const Json& j) {
  require_known_keys(j, {"layers", "seed", "init"}, "model");
  if (!j.contains("layers") || !j.at("layers").is_array()) throw SchemaError("model.layers: expected an array");
  ModelSpec m;
  const auto& layers = j.at("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    m.layers.push_back(layer_from_json(layers[i], "model.layers[" + std::to_string(i) + "]"));
  }
  read(j, "model", "seed", m.seed, as_seed);
  read_string(j, "model", "init", m.init);
  if (m.init != "kaiming_uniform") throw SchemaError("model.init: unsupported scheme '" + m.init + "'");
  validated("model", [&] { plan_model(m); });
  return m;
}

Json model_to_json(const ModelSpec& model) {
  Json layers = Json::array();
  for (const auto& l : model.layers) layers.push_back(layer_to_json(l));
  return Json{{"layers", layers}, {"seed", model.seed}, {"init", model.init}};
}

DatasetSpec dataset_spec_from_json(const Json& j) {
  constexpr std::string_view w = "dataset";
  require_known_keys(j, {"kind", "samples", "in", "out", "classes", "seq_len", "vocab", "noise", "spread", "path",
                         "target_columns"},
                     w);
  DatasetSpec d;
  read_string(j, w, "kind", d.kind);
  read_count(j, w, "samples", d.samples);
  read_count(j, w, "in", d.in);
  read_count(j, w, "out", d.out);
  read_count(j, w, "classes", d.classes);
  read_count(j, w, "seq_len", d.seq_len);
  read_count(j, w, "vocab", d.vocab);
  read_number(j, w, "noise", d.noise);
  read_number(j, w, "spread", d.spread);
  read_string(j, w, "path", d.path);
  read_count(j, w, "target_columns", d.target_columns);
  static constexpr std::string_view kinds[] = {"teacher_student", "blobs", "sequences", "csv", "jsonl"};
  if (std::find(std::begin(kinds), std::end(kinds), d.kind) == std::end(kinds)) {
    throw SchemaError("dataset.kind: unknown kind '" + d.kind + "'");
  }
  if ((d.kind == "csv" || d.kind == "jsonl") && d.path.empty()) throw SchemaError("dataset.path: required for " + d.kind);
  if (d.samples < 1) throw SchemaError("dataset.samples: must be >= 1");
  return d;
}

Json dataset_spec_to_json(const DatasetSpec& d) {
  Json j{{"kind", d.kind}};
  if (d.kind == "csv" || d.kind == "jsonl") {
    j["path"] = d.path;
    if (d.kind == "csv") j["target_columns"] = d.target_columns;
    return j;
  }
  j["samples"] = d.samples;
  if (d.kind == "teacher_student") {
    j["in"] = d.in;
    j["out"] = d.out;
    j["noise"] = d.noise;
  } else if (d.kind == "blobs") {
    j["in"] = d.in;
    j["classes"] = d.classes;
    j["spread"] = d.spread;
  } else {
    j["seq_len"] = d.seq_len;
    j["vocab"] = d.vocab;
  }
  return j;
}

Dataset make_dataset(const DatasetSpec& d, std::uint64_t seed, const std::filesystem::path& base_dir) {
  if (d.kind == "teacher_student") return make_teacher_student(d.samples, d.in, d.out, d.noise, seed);
  if (d.kind == "blobs") return make_blobs(d.samples, d.in, d.classes, d.spread, seed);
  if (d.kind == "sequences") return make_sequences(d.samples, d.seq_len, d.vocab, seed);
  const std::filesystem::path p = std::filesystem::path(d.path).is_absolute() ? std::filesystem::path(d.path) : base_dir / d.path;
  if (d.kind == "csv") return load_csv_dataset(p, d.target_columns);
  if (d.kind == "jsonl") return load_jsonl_dataset(p);
  throw SchemaError("dataset.kind: unknown kind '" + d.kind + "'");
}

ScheduleConfig schedule_from_json(const Json& j) {
  constexpr std::string_view w = "schedule";
  require_known_keys(j, {"blocks", "strategy", "inner_budget", "plateau", "plateau_window", "plateau_tolerance",
                         "outer_sweeps", "outer_tolerance", "sample_rate", "order", "batch_size",
                         "persist_block_state", "preinference"},
                     w);
  ScheduleConfig s;
  read_count(j, w, "blocks", s.blocks);
  if (auto it = j.find("strategy"); it != j.end()) {
    const auto v = as_string(*it, field(w, "strategy"));
    if (v == "balanced") s.strategy = SplitStrategy::kBalancedParams;
    else if (v == "equal_layers") s.strategy = SplitStrategy::kEqualLayers;
    else throw SchemaError("schedule.strategy: expected balanced or equal_layers");
  }
  read_count(j, w, "inner_budget", s.inner_budget);
  read_bool(j, w, "plateau", s.plateau);
  read_count(j, w, "plateau_window", s.plateau_window);
  read_number(j, w, "plateau_tolerance", s.plateau_tolerance);
  read_count(j, w, "outer_sweeps", s.outer_sweeps);
  read_number(j, w, "outer_tolerance", s.outer_tolerance);
  read_number(j, w, "sample_rate", s.sample_rate);
  if (auto it = j.find("order"); it != j.end()) {
    const auto v = as_string(*it, field(w, "order"));
    if (v == "ascending") s.order = CycleOrder::kAscending;
    else if (v == "descending") s.order = CycleOrder::kDescending;
    else throw SchemaError("schedule.order: expected ascending or descending");
  }
  read_count(j, w, "batch_size", s.batch_size);
  read_bool(j, w, "persist_block_state", s.persist_block_state);
  read_bool(j, w, "preinference", s.preinference);
  validated(w, [&] { s.validate(); });
  return s;
}

Json schedule_to_json(const ScheduleConfig& s) {
  return Json{{"blocks", s.blocks},
              {"strategy", s.strategy == SplitStrategy::kBalancedParams ? "balanced" : "equal_layers"},
              {"inner_budget", s.inner_budget},
              {"plateau", s.plateau},
              {"plateau_window", s.plateau_window},
              {"plateau_tolerance", s.plateau_tolerance},
              {"outer_sweeps", s.outer_sweeps},
              {"outer_tolerance", s.outer_tolerance},
              {"sample_rate", s.sample_rate},
              {"order", s.order == CycleOrder::kAscending ? "ascending" : "descending"},
              {"batch_size", s.batch_size},
              {"persist_block_state", s.persist_block_state},
              {"preinference", s.preinference}};
}

OptimHyper optim_from_json(const Json& j) {
  constexpr std::string_view w = "optimizer";
  require_known_keys(j, {"kind", "lr", "momentum", "beta1", "beta2", "eps", "weight_decay"}, w);
  std::string kind = "sgd";
  read_string(j, w, "kind", kind);
  OptimHyper h;
  if (kind == "sgd") h = OptimHyper::sgd_defaults();
  else if (kind == "adam") h = OptimHyper::adam_defaults();
  else throw SchemaError("optimizer.kind: expected sgd or adam");
  read_number(j, w, "lr", h.lr);
  read_number(j, w, "momentum", h.momentum);
  read_number(j, w, "beta1", h.beta1);
  read_number(j, w, "beta2", h.beta2);
  read_number(j, w, "eps", h.eps);
  read_number(j, w, "weight_decay", h.weight_decay);
  validated(w, [&] { h.validate(); });
  return h;
}

Json optim_to_json(const OptimHyper& h) {
  Json j{{"kind", h.kind == OptimKind::kSgd ? "sgd" : "adam"}, {"lr", h.lr}, {"weight_decay", h.weight_decay}};
  if (h.kind == OptimKind::kSgd) {
    j["momentum"] = h.momentum;
  } else {
    j["beta1"] = h.beta1;
    j["beta2"] = h.beta2;
    j["eps"] = h.eps;
  }
  return j;
}

void ExperimentConfig::apply_seed(std::uint64_t root) {
  seed = root;
  model.seed = mix_seed(root, 1);
  schedule.seed = mix_seed(root, 3);
}

std::uint64_t ExperimentConfig::dataset_seed() const { return mix_seed(seed, 2); }

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir) {
  constexpr std::string_view w = "config";
  require_known_keys(j, {"name", "model", "dataset", "schedule", "optimizer", "mode", "memory", "econ", "output_dir",
                         "seed"},
                     w);
  ExperimentConfig c;
  c.base_dir = base_dir;
  read_string(j, w, "name", c.name);
  if (!j.contains("model")) throw SchemaError("config.model: missing");
  if (j.at("model").is_string()) {
    const auto p = std::filesystem::path(j.at("model").get<std::string>());
    c.model = model_from_json(load_json(p.is_absolute() ? p : base_dir / p));
  } else {
    c.model = model_from_json(j.at("model"));
  }
  if (!j.contains("dataset")) throw SchemaError("config.dataset: missing");
  c.dataset = dataset_spec_from_json(j.at("dataset"));
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
  if (j.contains("optimizer")) c.optimizer = optim_from_json(j.at("optimizer"));
  if (auto it = j.find("mode"); it != j.end()) {
    const auto v = as_string(*it, "config.mode");
    if (v == "bcd") c.mode = TrainMode::kBcd;
    else if (v == "full") c.mode = TrainMode::kFull;
    else throw SchemaError("config.mode: expected bcd or full");
  }
  if (auto it = j.find("memory"); it != j.end()) {
    require_known_keys(*it, {"mode", "activation_coeff", "recompute"}, "config.memory");
    if (auto m = it->find("mode"); m != it->end()) {
      const auto v = as_string(*m, "config.memory.mode");
      if (v == "table") c.memory_mode = MemoryMode::kTable;
      else if (v == "intro") c.memory_mode = MemoryMode::kIntro;
      else throw SchemaError("config.memory.mode: expected table or intro");
    }
    read_number(*it, "config.memory", "activation_coeff", c.activation_coeff);
    read_bool(*it, "config.memory", "recompute", c.recompute);
  }
  if (auto it = j.find("econ"); it != j.end()) {
    require_known_keys(*it, {"gpu", "nodes", "gpus_per_node", "iter_time_ms"}, "config.econ");
    EconInputs e;
    read_string(*it, "config.econ", "gpu", e.gpu);
    read(*it, "config.econ", "nodes", e.nodes, as_positive_int);
    read(*it, "config.econ", "gpus_per_node", e.gpus_per_node, as_positive_int);
    read_number(*it, "config.econ", "iter_time_ms", e.iter_time_ms);
    if (!(e.iter_time_ms > 0.0)) throw SchemaError("config.econ.iter_time_ms: must be positive");
    c.econ = e;
  }
  read_string(j, w, "output_dir", c.output_dir);
  std::uint64_t seed = 0;
  read(j, w, "seed", seed, as_seed);
  c.apply_seed(seed);
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return experiment_from_json(load_json(path), path.parent_path());
}

PipelineConfig pipeline_from_json(const Json& j) {
  constexpr std::string_view w = "pipeline";
  require_known_keys(j, {"name", "stages", "microbatches", "comm_ms", "frozen_bwd_factor", "preinference",
                         "allreduce_ms"},
                     w);
  PipelineConfig c;
  if (!j.contains("stages") || !j.at("stages").is_array()) throw SchemaError("pipeline.stages: expected an array");
  const auto& stages = j.at("stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string sw = "pipeline.stages[" + std::to_string(i) + "]";
    require_known_keys(stages[i], {"fwd_ms", "bwd_ms", "frozen", "device"}, sw);
    StageSpec s;
    s.device = i;
    read_number(stages[i], sw, "fwd_ms", s.fwd_ms);
    read_number(stages[i], sw, "bwd_ms", s.bwd_full_ms);
    read_bool(stages[i], sw, "frozen", s.frozen);
    read_count(stages[i], sw, "device", s.device);
    c.stages.push_back(s);
  }
  read_count(j, w, "microbatches", c.microbatches);
  read_number(j, w, "comm_ms", c.comm_ms);
  read_number(j, w, "frozen_bwd_factor", c.frozen_bwd_factor);
  read_bool(j, w, "preinference", c.preinference);
  read_number(j, w, "allreduce_ms", c.allreduce_ms);
  validated(w, [&] { c.validate(); });
  return c;
}

Json pipeline_to_json(const PipelineConfig& c) {
  Json stages = Json::array();
  for (const auto& s : c.stages) {
    stages.push_back({{"fwd_ms", s.fwd_ms}, {"bwd_ms", s.bwd_full_ms}, {"frozen", s.frozen}, {"device", s.device}});
  }
  return Json{{"stages", stages},
              {"microbatches", c.microbatches},
              {"comm_ms", c.comm_ms},
              {"frozen_bwd_factor", c.frozen_bwd_factor},
              {"preinference", c.preinference},
              {"allreduce_ms", c.allreduce_ms}};
}

RunRecord run_record_from_json(const Json& j) {
  constexpr std::string_view w = "record";
  require_known_keys(j, {"model", "dataset", "method", "nodes", "gpus_per_node", "gpu", "iter_time_ms", "iterations",
                         "hours"},
                     w);
  RunRecord r;
  read_string(j, w, "model", r.model);
  read_string(j, w, "dataset", r.dataset);
  if (auto it = j.find("method"); it != j.end()) {
    validated("record.method", [&] { r.method = method_from_name(as_string(*it, "record.method")); });
  }
  read(j, w, "nodes", r.nodes, as_positive_int);
  read(j, w, "gpus_per_node", r.gpus_per_node, as_positive_int);
  read_string(j, w, "gpu", r.gpu);
  auto opt = [&](std::string_view key, std::optional<double>& out) {
    if (auto it = j.find(std::string(key)); it != j.end()) out = as_number(*it, field(w, key));
  };
  opt("iter_time_ms", r.iter_time_ms);
  opt("iterations", r.iterations);
  opt("hours", r.hours);
  validated("record " + r.model, [&] { r.validate(); });
  return r;
}

Json run_record_to_json(const RunRecord& r) {
  Json j{{"model", r.model},
         {"dataset", r.dataset},
         {"method", std::string(method_name(r.method))},
         {"nodes", r.nodes},
         {"gpus_per_node", r.gpus_per_node},
         {"gpu", r.gpu}};
  if (r.iter_time_ms) j["iter_time_ms"] = *r.iter_time_ms;
  if (r.iterations) j["iterations"] = *r.iterations;
  if (r.hours) j["hours"] = *r.hours;
  return j;
}

GpuCatalog catalog_from_json(const Json& j) {
  require_object(j, "catalog");
  GpuCatalog c;
  for (const auto& [gpu, rate] : j.items()) {
    const double r = as_number(rate, "catalog." + gpu);
    validated("catalog." + gpu, [&] { c.set(gpu, r); });
  }
  return c;
}

Json load_json(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw SchemaError(e.what());
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace bcdlab
