#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "bcdlab/model.hpp"

namespace bcdlab {

/// N samples; row i of `inputs` and of `targets` belong to sample i.
struct Dataset {
  Tensor inputs;
  Tensor targets;

  std::size_t size() const noexcept { return inputs.rows(); }
  Batch gather(std::span<const std::size_t> indices) const;
  Batch all() const;
};

/// Rows of `source` selected by sample index, where each sample owns `rows_per_sample` consecutive rows.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices, std::size_t rows_per_sample = 1);

/// y = x*W + b + noise, with x ~ N(0, 1) and a random linear teacher.
Dataset make_teacher_student(std::size_t n, std::size_t in, std::size_t out, double noise, std::uint64_t seed);

/// Gaussian clusters, one per class; targets are class ids.
Dataset make_blobs(std::size_t n, std::size_t in, std::size_t classes, double spread, std::uint64_t seed);

/// Token sequences whose target at position s is (x[s] + x[s-1]) mod vocab.
Dataset make_sequences(std::size_t n, std::size_t seq_len, std::size_t vocab, std::uint64_t seed);

/// Numeric CSV with a header row; the last `target_columns` columns are targets.
Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t target_columns);

/// One JSON object per line: {"x": [...], "y": [...]}.
Dataset load_jsonl_dataset(const std::filesystem::path& path);

}  // namespace bcdlab
