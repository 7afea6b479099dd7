#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "bcdlab/cli.hpp"
#include "bcdlab/config.hpp"
#include "bcdlab/report.hpp"
#include "bcdlab/verify/oracles.hpp"

using namespace bcdlab;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = BCDLAB_SOURCE_DIR;
const fs::path kData = kSource / "data";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "bcdlab");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bcdlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_json(const fs::path& dir, const std::string& name, const Json& j) {
  const fs::path p = dir / name;
  write_text_file(p, j.dump(2));
  return p;
}

Json mlp_config() { return load_json(kData / "configs" / "mlp.json"); }

// Numbers compare with a relative tolerance; everything else exactly.
void expect_json_close(const Json& got, const Json& want, const std::string& path = "$") {
  if (want.is_number_float() || (want.is_number() && got.is_number_float())) {
    const double g = got.get<double>(), w = want.get<double>();
    EXPECT_NEAR(g, w, 1e-9 * std::max(1.0, std::abs(w))) << path;
  } else if (want.is_object()) {
    ASSERT_TRUE(got.is_object()) << path;
    EXPECT_EQ(got.size(), want.size()) << path;
    for (auto it = want.begin(); it != want.end(); ++it) {
      ASSERT_TRUE(got.contains(it.key())) << path << "." << it.key();
      expect_json_close(got.at(it.key()), it.value(), path + "." + it.key());
    }
  } else if (want.is_array()) {
    ASSERT_TRUE(got.is_array()) << path;
    ASSERT_EQ(got.size(), want.size()) << path;
    for (std::size_t i = 0; i < want.size(); ++i) expect_json_close(got[i], want[i], path + "[" + std::to_string(i) + "]");
  } else {
    EXPECT_EQ(got, want) << path;
  }
}

}  // namespace

// ---- config schema ----

TEST(Config, BundledConfigsLoad) {
  for (const auto& e : fs::directory_iterator(kData / "configs")) {
    EXPECT_NO_THROW(load_experiment(e.path())) << e.path();
  }
}

TEST(Config, UnknownFieldRejected) {
  const auto dir = scratch("unknown");
  Json j = mlp_config();
  j["schedule"]["warmup"] = 3;
  EXPECT_THROW(experiment_from_json(j, kData / "configs"), SchemaError);
  j = mlp_config();
  j["colour"] = "blue";
  EXPECT_THROW(experiment_from_json(j, kData / "configs"), SchemaError);
}

TEST(Config, BadValuesRejected) {
  Json j = mlp_config();
  j["schedule"]["sample_rate"] = 0;
  EXPECT_THROW(experiment_from_json(j, kData / "configs"), SchemaError);
  j = mlp_config();
  j["optimizer"]["kind"] = "lion";
  EXPECT_THROW(experiment_from_json(j, kData / "configs"), SchemaError);
  j = mlp_config();
  j["schedule"]["blocks"] = -2;
  EXPECT_THROW(experiment_from_json(j, kData / "configs"), SchemaError);
}

TEST(Config, ModelRoundTrip) {
  const auto cfg = load_experiment(kData / "configs" / "sequence.json");
  EXPECT_EQ(model_from_json(model_to_json(cfg.model)), cfg.model);
}

TEST(Config, SeedDrivesModelAndSchedule) {
  auto a = load_experiment(kData / "configs" / "mlp.json");
  auto b = a;
  b.apply_seed(a.seed + 1);
  EXPECT_NE(a.model.seed, b.model.seed);
  EXPECT_NE(a.schedule.seed, b.schedule.seed);
  EXPECT_NE(a.dataset_seed(), b.dataset_seed());
}

// ---- train ----

TEST(Train, WritesArtifactsWithUnitHeaders) {
  const auto dir = scratch("train");
  const auto r = invoke({"train", "--config", (kData / "configs" / "mlp.json").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(read_text_file(dir / "history.csv").rfind("step,block,loss,float_units\n", 0), 0u);
  EXPECT_EQ(read_text_file(dir / "memory.csv").rfind("category,live_float_units,peak_float_units\n", 0), 0u);
  const Json s = load_json(dir / "summary.json");
  EXPECT_EQ(s.at("mode"), "bcd");
  EXPECT_EQ(s.at("blocks"), 3);
  EXPECT_EQ(s.at("peak_model_state_units").get<double>(), s.at("predicted_model_state_units").get<double>());
}

TEST(Train, ByteIdenticalReruns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto cfg = (kData / "configs" / "mlp.json").string();
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", a.string()}).code, 0);
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", b.string()}).code, 0);
  for (const char* f : {"history.csv", "memory.csv", "summary.json"}) {
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
  }
}

TEST(Train, SingleBlockMatchesFullBaseline) {
  const auto dir = scratch("m1");
  Json j = mlp_config();
  j["model"] = (kData / "models" / "mlp.json").string();
  j["schedule"]["blocks"] = 1;
  const auto cfg = write_json(dir, "m1.json", j);
  ASSERT_EQ(invoke({"train", "--config", cfg.string(), "--out", (dir / "bcd").string()}).code, 0);
  ASSERT_EQ(invoke({"train", "--config", cfg.string(), "--out", (dir / "full").string(), "--mode", "full"}).code, 0);
  Json bcd = load_json(dir / "bcd" / "summary.json");
  Json full = load_json(dir / "full" / "summary.json");
  for (const char* k : {"iterations", "final_loss", "sweep_losses", "peak_float_units", "epochs"}) {
    EXPECT_EQ(bcd.at(k), full.at(k)) << k;
  }
  EXPECT_EQ(read_text_file(dir / "bcd" / "history.csv"), read_text_file(dir / "full" / "history.csv"));
}

TEST(Train, PreinferenceFlagKeepsResults) {
  const auto a = scratch("pre_off"), b = scratch("pre_on");
  const auto cfg = (kData / "configs" / "mlp.json").string();
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", a.string(), "--preinference", "off"}).code, 0);
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", b.string(), "--preinference", "on"}).code, 0);
  const Json x = load_json(a / "summary.json"), y = load_json(b / "summary.json");
  EXPECT_EQ(x.at("sweep_losses"), y.at("sweep_losses"));
  EXPECT_LT(y.at("forward_flops").get<std::uint64_t>(), x.at("forward_flops").get<std::uint64_t>());
}

TEST(Train, SchemaErrorExitsOne) {
  const auto dir = scratch("schema");
  Json j = mlp_config();
  j["model"] = (kData / "models" / "mlp.json").string();
  j["schedule"]["bogus"] = 1;
  const auto cfg = write_json(dir, "bad.json", j);
  const auto r = invoke({"train", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
  EXPECT_EQ(invoke({"train", "--config", (dir / "missing.json").string()}).code, cli::kExitUsage);
}

TEST(Train, DivergenceExitsTwo) {
  const auto dir = scratch("diverge");
  Json j = mlp_config();
  j["model"] = (kData / "models" / "mlp.json").string();
  j["optimizer"]["lr"] = 1e8;
  const auto cfg = write_json(dir, "div.json", j);
  const auto r = invoke({"train", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, cli::kExitDivergence);
  EXPECT_NE(r.err.find("block"), std::string::npos);
}

// Golden summary for the bundled teacher-student run. The committed file was accepted only after the
// final loss matched the least-squares optimum; set BCDLAB_UPDATE_GOLDEN=1 to rewrite it.
TEST(Train, TeacherStudentGolden) {
  const auto dir = scratch("golden");
  const auto cfg_path = kData / "configs" / "teacher_student.json";
  ASSERT_EQ(invoke({"train", "--config", cfg_path.string(), "--out", dir.string()}).code, 0);
  const Json got = load_json(dir / "summary.json");

  const auto cfg = load_experiment(cfg_path);
  const Dataset d = make_dataset(cfg.dataset, cfg.dataset_seed(), cfg.base_dir);
  EXPECT_NEAR(got.at("final_loss").get<double>(), verify::least_squares_loss(d), 1e-3);

  const fs::path golden = kSource / "tests" / "golden" / "teacher_student_summary.json";
  if (std::getenv("BCDLAB_UPDATE_GOLDEN")) {
    fs::create_directories(golden.parent_path());
    write_text_file(golden, got.dump(2) + "\n");
  }
  ASSERT_TRUE(fs::exists(golden));
  expect_json_close(got, load_json(golden));
}

// ---- report ----

TEST(Report, EmptyInputIsUsageError) { EXPECT_EQ(invoke({"report"}).code, cli::kExitUsage); }

TEST(Report, MissingFileExitsOne) {
  EXPECT_EQ(invoke({"report", "/nonexistent/summary.json"}).code, cli::kExitUsage);
}

TEST(Report, MergesSummariesByModelName) {
  const auto dir = scratch("report");
  const auto cfg = (kData / "configs" / "mlp.json").string();
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", (dir / "b").string()}).code, 0);
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", (dir / "f").string(), "--mode", "full"}).code, 0);
  const auto r = invoke({"report", (dir / "b" / "summary.json").string(), (dir / "f" / "summary.json").string(),
                      "--out", (dir / "tables").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string validity = read_text_file(dir / "tables" / "validity.csv");
  // header plus exactly one merged row
  EXPECT_EQ(std::count(validity.begin(), validity.end(), '\n'), 2);
  EXPECT_NE(validity.find("\nmlp,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "tables" / "ufp.csv"));
}

TEST(Report, RealCostFixtureWithinOnePercent) {
  const auto dir = scratch("realcost");
  const auto r = invoke({"report", (kData / "fixtures" / "real_cost_runs.json").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string got = read_text_file(dir / "cost.csv");
  const std::string want = read_text_file(kData / "fixtures" / "real_cost_expected.csv");
  auto rows = [](const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string c;
      while (std::getline(ls, c, ',')) cells.push_back(c);
      out.push_back(cells);
    }
    return out;
  };
  const auto g = rows(got), w = rows(want);
  ASSERT_EQ(g.size(), w.size());
  auto col = [](const std::vector<std::string>& header, const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  for (const char* name : {"full_cost_usd", "bcd_cost_usd"}) {
    const std::size_t gc = col(g[0], name), wc = col(w[0], name);
    ASSERT_LT(gc, g[0].size());
    for (std::size_t i = 1; i < w.size(); ++i) {
      const double a = std::stod(g[i][gc]), b = std::stod(w[i][wc]);
      EXPECT_NEAR(a, b, 0.01 * b) << name << " row " << i;
    }
  }
}

// ---- other subcommands ----

TEST(Econ, ProjectedTablesAndBf) {
  const auto cost = invoke({"cost"});
  ASSERT_EQ(cost.code, 0);
  EXPECT_NE(cost.out.find("A100,G-1.6B,average,1.39,1/1,1/1,88.1,88.8,"), std::string::npos) << cost.out;
  const auto bf = invoke({"bf"});
  ASSERT_EQ(bf.code, 0);
  EXPECT_NE(bf.out.find("5,1.3949,2.7778"), std::string::npos);
  EXPECT_EQ(invoke({"gpu-hours", "--bf-average", "1.5"}).code, 0);
  EXPECT_EQ(invoke({"cost", "--catalog", "nowhere"}).code, cli::kExitUsage);
}

TEST(Pipesim, SingleAndCompare) {
  const auto dir = scratch("pipe");
  const auto one = invoke({"pipesim", "--config", (kData / "pipelines" / "example.json").string(), "--out", dir.string()});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(read_text_file(dir / "trace.csv").rfind("start_ms,end_ms,device,task\n", 0), 0u);
  const auto cmp = invoke({"pipesim", "--config", (kData / "pipelines" / "compare.json").string()});
  ASSERT_EQ(cmp.code, 0);
  EXPECT_NE(cmp.out.find("config,iter_time_ms,speedup_vs_first"), std::string::npos);
}

TEST(Memtable, DefaultRows) {
  const auto r = invoke({"memtable", "--optimizer", "sgd"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1013.58"), std::string::npos);
  EXPECT_EQ(invoke({"memtable", "--ufp", "0"}).code, cli::kExitUsage);
}

// ---- verify ----

TEST(Verify, ScoreboardListsEachCriterionOnce) {
  const auto r = invoke({"verify"});
  EXPECT_EQ(r.code, 0) << r.out;
  for (int i = 1; i <= 11; ++i) {
    const std::string id = "AC" + std::to_string(i) + " ";
    std::size_t hits = 0;
    for (auto p = r.out.find(id); p != std::string::npos; p = r.out.find(id, p + 1)) ++hits;
    EXPECT_EQ(hits, 1u) << id;
  }
}

TEST(Verify, PerturbedUfpConstantFails) {
  const auto r = invoke({"verify", "--only", "AC4", "AC5", "--perturb-ufp", "0.05"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("FAIL AC4"), std::string::npos);
  EXPECT_NE(r.out.find("FAIL AC5"), std::string::npos);
}
