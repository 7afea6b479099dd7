#pragma once

// Independent reference computations. Nothing here calls into the code paths it checks.

#include <cstddef>
#include <span>
#include <vector>

#include "bcdlab/dataset.hpp"
#include "bcdlab/pipesim.hpp"

namespace bcdlab::verify {

/// MSE loss of linear(W1,b1) -> relu -> linear(W2,b2) written as plain loops.
/// Weights are row-major [in, out]; loss sums over outputs and averages over rows.
double mlp_mse_loss(std::span<const double> x, std::size_t rows, std::size_t in, std::span<const double> w1,
                    std::span<const double> b1, std::size_t hidden, std::span<const double> w2,
                    std::span<const double> b2, std::size_t out, std::span<const double> y);

/// Smallest achievable MSE of an affine map from inputs to targets (normal equations via Eigen).
double least_squares_loss(const Dataset& data);

/// Makespan of the fill-drain schedule by longest-path relaxation over the task graph.
double longest_path_makespan(const PipelineConfig& cfg);

/// (m + s - 1) * (f + b).
double fill_drain_closed_form(std::size_t stages, std::size_t microbatches, double fwd, double bwd);

struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double cdf = 0.0;  // P(X <= statistic)
};

/// Inclusion counts from `epochs` subsamples with rate `p` over `n` items, compared with the
/// binomial variance epochs*p*(1-p); sum constraint removes one degree of freedom.
ChiSquare inclusion_chi_square(std::span<const std::size_t> counts, std::size_t epochs, double p);

}  // namespace bcdlab::verify
