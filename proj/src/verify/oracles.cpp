#include "bcdlab/verify/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <stdexcept>

namespace bcdlab::verify {

double mlp_mse_loss(std::span<const double> x, std::size_t rows, std::size_t in, std::span<const double> w1,
                    std::span<const double> b1, std::size_t hidden, std::span<const double> w2,
                    std::span<const double> b2, std::size_t out, std::span<const double> y) {
  double total = 0.0;
  std::vector<double> h(hidden);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < hidden; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w1[i * hidden + j];
      acc += b1[j];
      h[j] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t k = 0; k < out; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < hidden; ++j) acc += h[j] * w2[j * out + k];
      acc += b2[k];
      const double d = acc - y[r * out + k];
      total += d * d;
    }
  }
  return total / static_cast<double>(rows);
}

double least_squares_loss(const Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t in = data.inputs.cols();
  const std::size_t out = data.targets.cols();
  Eigen::MatrixXd a(n, in + 1);
  Eigen::MatrixXd y(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < in; ++c) a(r, c) = data.inputs.at(r, c);
    a(r, in) = 1.0;
    for (std::size_t c = 0; c < out; ++c) y(r, c) = data.targets.at(r, c);
  }
  const Eigen::MatrixXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * y);
  return (a * beta - y).squaredNorm() / static_cast<double>(n);
}

double longest_path_makespan(const PipelineConfig& cfg) {
  std::size_t first = 0;
  if (cfg.preinference) {
    while (first + 1 < cfg.stages.size() && cfg.stages[first].frozen) ++first;
  }
  const std::size_t s = cfg.stages.size() - first;
  const std::size_t m = cfg.microbatches;

  struct Node {
    double dur;
    std::size_t device;
  };
  struct Edge {
    std::size_t from, to;
    double delay;
  };
  std::vector<Node> nodes;
  auto f = [&](std::size_t st, std::size_t mb) { return 2 * (st * m + mb); };
  auto b = [&](std::size_t st, std::size_t mb) { return 2 * (st * m + mb) + 1; };
  nodes.resize(2 * s * m);
  for (std::size_t st = 0; st < s; ++st) {
    const auto& spec = cfg.stages[first + st];
    const double bwd = spec.frozen ? spec.bwd_full_ms * cfg.frozen_bwd_factor : spec.bwd_full_ms;
    for (std::size_t mb = 0; mb < m; ++mb) {
      nodes[f(st, mb)] = {spec.fwd_ms, spec.device};
      nodes[b(st, mb)] = {bwd, spec.device};
    }
  }
  auto comm = [&](std::size_t a, std::size_t c) {
    return cfg.stages[first + a].device == cfg.stages[first + c].device ? 0.0 : cfg.comm_ms;
  };
  std::vector<Edge> edges;
  for (std::size_t mb = 0; mb < m; ++mb) {
    for (std::size_t st = 0; st + 1 < s; ++st) {
      edges.push_back({f(st, mb), f(st + 1, mb), comm(st, st + 1)});
      edges.push_back({b(st + 1, mb), b(st, mb), comm(st + 1, st)});
    }
    for (std::size_t k = 0; k < m; ++k) edges.push_back({f(s - 1, k), b(s - 1, mb), 0.0});
  }
  // Same-device serialization in the documented order.
  std::vector<std::size_t> seq;
  for (std::size_t mb = 0; mb < m; ++mb)
    for (std::size_t st = 0; st < s; ++st) seq.push_back(f(st, mb));
  for (std::size_t mb = m; mb-- > 0;)
    for (std::size_t st = s; st-- > 0;) seq.push_back(b(st, mb));
  std::vector<std::pair<std::size_t, std::size_t>> last;  // (device, node)
  for (std::size_t id : seq) {
    auto it = std::find_if(last.begin(), last.end(), [&](const auto& p) { return p.first == nodes[id].device; });
    if (it == last.end()) {
      last.emplace_back(nodes[id].device, id);
    } else {
      edges.push_back({it->second, id, 0.0});
      it->second = id;
    }
  }

  std::vector<double> start(nodes.size(), 0.0);
  bool changed = true;
  for (std::size_t pass = 0; changed; ++pass) {
    if (pass > nodes.size()) throw std::logic_error("cycle in pipeline task graph");
    changed = false;
    for (const auto& e : edges) {
      const double t = (start[e.from] + nodes[e.from].dur) + e.delay;
      if (t > start[e.to]) {
        start[e.to] = t;
        changed = true;
      }
    }
  }
  double makespan = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) makespan = std::max(makespan, start[i] + nodes[i].dur);
  return makespan;
}

double fill_drain_closed_form(std::size_t stages, std::size_t microbatches, double fwd, double bwd) {
  return static_cast<double>(microbatches + stages - 1) * (fwd + bwd);
}

ChiSquare inclusion_chi_square(std::span<const std::size_t> counts, std::size_t epochs, double p) {
  if (counts.size() < 2) throw std::invalid_argument("need at least two items");
  const double expected = static_cast<double>(epochs) * p;
  const double variance = expected * (1.0 - p);
  ChiSquare out;
  for (std::size_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    out.statistic += d * d / variance;
  }
  // Per-epoch draws without replacement make the counts negatively correlated; this rescale
  // gives the statistic mean n - 1.
  const double n = static_cast<double>(counts.size());
  out.statistic *= (n - 1.0) / n;
  out.dof = n - 1.0;
  out.cdf = boost::math::cdf(boost::math::chi_squared(out.dof), out.statistic);
  return out;
}

}  // namespace bcdlab::verify
