#include "bcdlab/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bcdlab/errors.hpp"
#include "bcdlab/rng.hpp"

namespace bcdlab {

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices, std::size_t rps) {
  if (indices.empty()) throw std::invalid_argument("cannot gather an empty index set");
  const std::size_t width = source.cols();
  const std::size_t block = rps * width;
  std::vector<double> out;
  out.reserve(indices.size() * block);
  for (auto i : indices) {
    if ((i + 1) * rps > source.rows()) throw std::out_of_range("sample index " + std::to_string(i) + " out of range");
    auto begin = source.data().begin() + static_cast<std::ptrdiff_t>(i * block);
    out.insert(out.end(), begin, begin + static_cast<std::ptrdiff_t>(block));
  }
  return Tensor({indices.size() * rps, width}, std::move(out));
}

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  return Batch{gather_rows(inputs, indices), gather_rows(targets, indices)};
}

Batch Dataset::all() const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(idx);
}

Dataset make_teacher_student(std::size_t n, std::size_t in, std::size_t out, double noise, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w({in, out}), b({out});
  for (auto& v : w.data()) v = rng.normal() / std::sqrt(static_cast<double>(in));
  for (auto& v : b.data()) v = rng.normal(0.0, 0.1);
  Dataset d{Tensor({n, in}), Tensor({n, out})};
  for (auto& v : d.inputs.data()) v = rng.normal();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < out; ++j) {
      double y = b[j];
      for (std::size_t k = 0; k < in; ++k) y += d.inputs.at(r, k) * w.at(k, j);
      d.targets.at(r, j) = y + noise * rng.normal();
    }
  }
  return d;
}

Dataset make_blobs(std::size_t n, std::size_t in, std::size_t classes, double spread, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("blobs need at least two classes");
  Rng rng(seed);
  Tensor centers({classes, in});
  for (auto& v : centers.data()) v = rng.normal(0.0, 2.0);
  Dataset d{Tensor({n, in}), Tensor({n, 1})};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = rng.below(classes);
    d.targets[r] = static_cast<double>(c);
    for (std::size_t k = 0; k < in; ++k) d.inputs.at(r, k) = centers.at(c, k) + spread * rng.normal();
  }
  return d;
}

Dataset make_sequences(std::size_t n, std::size_t seq_len, std::size_t vocab, std::uint64_t seed) {
  if (vocab < 2) throw std::invalid_argument("sequence task needs vocab >= 2");
  Rng rng(seed);
  Dataset d{Tensor({n, seq_len}), Tensor({n, seq_len})};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < seq_len; ++s) {
      d.inputs.at(r, s) = static_cast<double>(rng.below(vocab));
      const double prev = s == 0 ? 0.0 : d.inputs.at(r, s - 1);
      d.targets.at(r, s) = std::fmod(d.inputs.at(r, s) + prev, static_cast<double>(vocab));
    }
  }
  return d;
}

Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t target_columns) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read dataset " + path.string());
  std::string line;
  std::getline(f, line);  // header
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (width == 0) width = row.size();
    if (row.size() != width) throw ShapeError("ragged CSV row in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty() || target_columns == 0 || target_columns >= width) {
    throw ShapeError("CSV dataset needs rows and 0 < target_columns < column count");
  }
  const std::size_t in = width - target_columns;
  Dataset d{Tensor({rows.size(), in}), Tensor({rows.size(), target_columns})};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < in; ++k) d.inputs.at(r, k) = rows[r][k];
    for (std::size_t k = 0; k < target_columns; ++k) d.targets.at(r, k) = rows[r][in + k];
  }
  return d;
}

Dataset load_jsonl_dataset(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read dataset " + path.string());
  std::vector<double> xs, ys;
  std::size_t in = 0, out = 0, n = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto x = j.at("x").get<std::vector<double>>();
    const auto y = j.at("y").get<std::vector<double>>();
    if (n == 0) {
      in = x.size();
      out = y.size();
    }
    if (x.size() != in || y.size() != out || in == 0 || out == 0) throw ShapeError("ragged JSONL dataset " + path.string());
    xs.insert(xs.end(), x.begin(), x.end());
    ys.insert(ys.end(), y.begin(), y.end());
    ++n;
  }
  if (n == 0) throw ShapeError("empty JSONL dataset " + path.string());
  return Dataset{Tensor({n, in}, std::move(xs)), Tensor({n, out}, std::move(ys))};
}

}  // namespace bcdlab
