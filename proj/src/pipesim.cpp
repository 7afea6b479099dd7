#include "bcdlab/pipesim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "bcdlab/report.hpp"

namespace bcdlab {
namespace {

struct Task {
  TaskKind kind;
  std::size_t stage;  // index into loop stages
  std::size_t mb;
  double duration;
  std::size_t device;
  std::vector<std::pair<std::size_t, double>> succ;  // (task, edge delay)
  std::size_t pending = 0;
  double ready = 0.0;
  double start = 0.0;
  double end = 0.0;
  bool done = false;
};

struct Completion {
  double time;
  std::size_t stage;
  std::size_t mb;
  std::size_t task;
  bool operator>(const Completion& o) const {
    return std::tie(time, stage, mb, task) > std::tie(o.time, o.stage, o.mb, o.task);
  }
};

void require_time(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

}  // namespace

void PipelineConfig::validate() const {
  if (stages.empty()) throw std::invalid_argument("pipeline needs at least one stage");
  if (microbatches < 1) throw std::invalid_argument("microbatches must be >= 1");
  for (const auto& s : stages) {
    require_time(s.fwd_ms, "fwd_ms");
    require_time(s.bwd_full_ms, "bwd_full_ms");
  }
  require_time(comm_ms, "comm_ms");
  require_time(allreduce_ms, "allreduce_ms");
  if (!(frozen_bwd_factor >= 0.0 && frozen_bwd_factor <= 1.0)) {
    throw std::invalid_argument("frozen_bwd_factor must be in [0, 1]");
  }
}

std::string TraceEvent::task() const {
  return (kind == TaskKind::kForward ? "F" : "B") + std::to_string(stage) + "." + std::to_string(microbatch);
}

std::string SimResult::trace_csv() const {
  CsvTable t({"start_ms", "end_ms", "device", "task"});
  for (const auto& e : trace) {
    t.add_row({format_double(e.start_ms), format_double(e.end_ms), std::to_string(e.device), e.task()});
  }
  return t.str();
}

std::vector<LoopStage> loop_stages(const PipelineConfig& cfg) {
  cfg.validate();
  std::size_t first = 0;
  if (cfg.preinference) {
    // The last stage holds the loss, so it always stays in the loop.
    while (first + 1 < cfg.stages.size() && cfg.stages[first].frozen) ++first;
  }
  std::vector<LoopStage> out;
  for (std::size_t i = first; i < cfg.stages.size(); ++i) {
    const auto& s = cfg.stages[i];
    out.push_back({i, s.fwd_ms, s.frozen ? cfg.frozen_bwd_factor * s.bwd_full_ms : s.bwd_full_ms, s.device});
  }
  return out;
}

SimResult simulate(const PipelineConfig& cfg) {
  const auto stages = loop_stages(cfg);
  const std::size_t s = stages.size();
  const std::size_t m = cfg.microbatches;
  SimResult result;

  for (std::size_t i = 0; i < cfg.stages.size() && i < stages.front().original; ++i) {
    result.elided_stages.push_back(i);
    result.prefix_build_ms += cfg.stages[i].fwd_ms * static_cast<double>(m);
  }
  if (!result.elided_stages.empty()) result.prefix_build_ms += cfg.allreduce_ms;

  auto fwd_id = [&](std::size_t st, std::size_t mb) { return st * m + mb; };
  auto bwd_id = [&](std::size_t st, std::size_t mb) { return s * m + st * m + mb; };
  auto link = [&](std::size_t a, std::size_t b) { return stages[a].device != stages[b].device ? cfg.comm_ms : 0.0; };

  std::vector<Task> tasks(2 * s * m);
  for (std::size_t st = 0; st < s; ++st) {
    for (std::size_t mb = 0; mb < m; ++mb) {
      tasks[fwd_id(st, mb)] = {TaskKind::kForward, st, mb, stages[st].fwd_ms, stages[st].device, {}};
      tasks[bwd_id(st, mb)] = {TaskKind::kBackward, st, mb, stages[st].bwd_ms, stages[st].device, {}};
    }
  }
  auto edge = [&](std::size_t from, std::size_t to, double delay) {
    tasks[from].succ.emplace_back(to, delay);
    ++tasks[to].pending;
  };
  for (std::size_t mb = 0; mb < m; ++mb) {
    for (std::size_t st = 1; st < s; ++st) edge(fwd_id(st - 1, mb), fwd_id(st, mb), link(st - 1, st));
    for (std::size_t st = 0; st + 1 < s; ++st) edge(bwd_id(st + 1, mb), bwd_id(st, mb), link(st + 1, st));
    for (std::size_t f = 0; f < m; ++f) edge(fwd_id(s - 1, f), bwd_id(s - 1, mb), 0.0);
  }

  // Static per-device order.
  std::map<std::size_t, std::vector<std::size_t>> order;
  for (std::size_t mb = 0; mb < m; ++mb)
    for (std::size_t st = 0; st < s; ++st) order[stages[st].device].push_back(fwd_id(st, mb));
  for (std::size_t mb = m; mb-- > 0;)
    for (std::size_t st = s; st-- > 0;) order[stages[st].device].push_back(bwd_id(st, mb));

  struct DeviceState {
    std::size_t next = 0;
    bool busy = false;
    double free_at = 0.0;
  };
  std::map<std::size_t, DeviceState> devices;
  for (const auto& [d, _] : order) devices[d];

  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> events;
  auto try_start = [&](std::size_t device) {
    auto& ds = devices[device];
    const auto& queue = order[device];
    if (ds.busy || ds.next >= queue.size()) return;
    Task& t = tasks[queue[ds.next]];
    if (t.pending > 0) return;
    t.start = std::max(ds.free_at, t.ready);
    t.end = t.start + t.duration;
    ds.busy = true;
    events.push({t.end, t.stage, t.mb, queue[ds.next]});
  };
  for (const auto& [d, _] : order) try_start(d);

  std::size_t finished = 0;
  while (!events.empty()) {
    const Completion c = events.top();
    events.pop();
    Task& t = tasks[c.task];
    t.done = true;
    ++finished;
    auto& ds = devices[t.device];
    ds.busy = false;
    ds.free_at = t.end;
    ++ds.next;
    for (const auto& [next, delay] : t.succ) {
      Task& n = tasks[next];
      n.ready = std::max(n.ready, t.end + delay);
      --n.pending;
      try_start(n.device);
    }
    try_start(t.device);
  }
  if (finished != tasks.size()) throw std::logic_error("pipeline schedule deadlocked");

  for (const auto& t : tasks) {
    result.iter_time_ms = std::max(result.iter_time_ms, t.end);
    result.device_busy_ms[t.device] += t.duration;
    result.trace.push_back({t.start, t.end, t.device, stages[t.stage].original, t.mb, t.kind});
  }
  std::sort(result.trace.begin(), result.trace.end(), [](const TraceEvent& a, const TraceEvent& b) {
    return std::tie(a.start_ms, a.device, a.stage, a.microbatch, a.kind) <
           std::tie(b.start_ms, b.device, b.stage, b.microbatch, b.kind);
  });
  return result;
}

std::vector<CompareRow> compare(std::span<const std::pair<std::string, PipelineConfig>> configs) {
  if (configs.empty()) throw std::invalid_argument("compare needs at least one config");
  std::vector<CompareRow> rows;
  for (const auto& [name, cfg] : configs) rows.push_back({name, simulate(cfg).iter_time_ms, 0.0});
  const double base = rows.front().iter_time_ms;
  for (auto& r : rows) r.speedup = r.iter_time_ms > 0.0 ? base / r.iter_time_ms : (base > 0.0 ? INFINITY : 1.0);
  return rows;
}

std::string compare_csv(std::span<const CompareRow> rows) {
  CsvTable t({"config", "iter_time_ms", "speedup_vs_first"});
  for (const auto& r : rows) t.add_row({r.name, format_double(r.iter_time_ms), format_fixed(r.speedup, 4)});
  return t.str();
}

PipelineConfig scaled(const PipelineConfig& cfg, double factor) {
  PipelineConfig out = cfg;
  for (auto& st : out.stages) {
    st.fwd_ms *= factor;
    st.bwd_full_ms *= factor;
  }
  return out;
}

Calibration calibrate(const PipelineConfig& cfg, double target_ms) {
  if (!(target_ms > 0.0)) throw std::invalid_argument("calibration target must be positive");
  Calibration c;
  c.target_ms = target_ms;
  const double base = simulate(cfg).iter_time_ms;
  if (base <= 0.0) throw std::invalid_argument("cannot calibrate a pipeline with zero stage time");
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * target_ms / base);
  while (simulate(scaled(cfg, hi)).iter_time_ms < target_ms) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (simulate(scaled(cfg, mid)).iter_time_ms < target_ms ? lo : hi) = mid;
  }
  c.scale = hi;
  c.predicted_ms = simulate(scaled(cfg, hi)).iter_time_ms;
  c.relative_error = std::abs(c.predicted_ms - target_ms) / target_ms;
  return c;
}

}  // namespace bcdlab
