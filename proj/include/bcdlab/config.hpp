#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bcdlab/dataset.hpp"
#include "bcdlab/econ.hpp"
#include "bcdlab/engine.hpp"
#include "bcdlab/memory.hpp"
#include "bcdlab/pipesim.hpp"

namespace bcdlab {

using Json = nlohmann::json;

/// Malformed or unknown configuration content. Carries the JSON path of the offending field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws SchemaError naming the first key of `obj` not in `allowed`.
void require_known_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view where);

LayerSpec layer_from_json(const Json& j, std::string_view where = "layer");
Json layer_to_json(const LayerSpec& layer);

/// {"layers": [...], "seed": N, "init": "kaiming_uniform"}. Validates composition.
ModelSpec model_from_json(const Json& j);
Json model_to_json(const ModelSpec& model);

struct DatasetSpec {
  /// teacher_student | blobs | sequences | csv | jsonl
  std::string kind = "teacher_student";
  std::size_t samples = 256;
  std::size_t in = 8;
  std::size_t out = 2;
  std::size_t classes = 3;
  std::size_t seq_len = 8;
  std::size_t vocab = 16;
  double noise = 0.0;
  double spread = 1.0;
  std::string path;
  std::size_t target_columns = 1;
};

DatasetSpec dataset_spec_from_json(const Json& j);
Json dataset_spec_to_json(const DatasetSpec& d);
/// Generators draw from `seed`; file paths resolve relative to `base_dir`.
Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed, const std::filesystem::path& base_dir = {});

ScheduleConfig schedule_from_json(const Json& j);
Json schedule_to_json(const ScheduleConfig& s);
/// Starts from the kind's defaults ("sgd" or "adam"), then applies given fields.
OptimHyper optim_from_json(const Json& j);
Json optim_to_json(const OptimHyper& h);

enum class TrainMode { kBcd, kFull };

struct EconInputs {
  std::string gpu = "RTX4090";
  int nodes = 1;
  int gpus_per_node = 1;
  double iter_time_ms = 0.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelSpec model;
  DatasetSpec dataset;
  ScheduleConfig schedule;
  OptimHyper optimizer;
  TrainMode mode = TrainMode::kBcd;
  MemoryMode memory_mode = MemoryMode::kTable;
  double activation_coeff = 0.7;
  bool recompute = false;
  std::optional<EconInputs> econ;
  std::string output_dir = "out";
  /// Root of all randomness; model init, data and sampling seeds derive from it.
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;

  /// Pushes the root seed into the model, dataset and schedule.
  void apply_seed(std::uint64_t root);
  std::uint64_t dataset_seed() const;
};

/// "model" may be inline or a path (string) relative to the config file's directory.
ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

PipelineConfig pipeline_from_json(const Json& j);
Json pipeline_to_json(const PipelineConfig& cfg);

RunRecord run_record_from_json(const Json& j);
Json run_record_to_json(const RunRecord& r);
GpuCatalog catalog_from_json(const Json& j);

/// Reads a file and parses JSON, turning parse failures into SchemaError.
Json load_json(const std::filesystem::path& path);

}  // namespace bcdlab
