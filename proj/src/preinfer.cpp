#include "bcdlab/preinfer.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "bcdlab/errors.hpp"

namespace bcdlab {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::array<char, 8> kMagic = {'B', 'C', 'D', 'A', 'C', 'T', '0', '1'};

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw std::runtime_error("truncated activation cache file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

Tensor ActivationCache::entry(std::size_t sample) const {
  const std::size_t idx[] = {sample};
  return gather_rows(activations, idx, rows_per_sample);
}

std::uint64_t prefix_checksum(const ParamSet& params, std::size_t prefix_end) {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < prefix_end && i < params.size(); ++i) {
    fnv_mix(h, i);
    for (const auto& t : params[i]) {
      for (auto d : t.shape()) fnv_mix(h, d);
      for (double v : t.data()) fnv_mix(h, std::bit_cast<std::uint64_t>(v));
    }
  }
  return h;
}

ActivationCache build_cache(const ModelSpec& model, const ParamSet& params, const Dataset& data,
                            std::size_t prefix_end) {
  ActivationCache cache;
  if (prefix_end == 0) return cache;
  const auto plan = plan_model(model);
  if (prefix_end >= model.layer_count()) throw std::out_of_range("cache prefix must end before the loss head");
  OpCounter ops;
  cache.prefix_end = prefix_end;
  cache.rows_per_sample = plan[prefix_end].rows_per_sample;
  cache.samples = data.size();
  cache.activations = forward_prefix(model, params, data.inputs, prefix_end, &ops);
  cache.prefix_checksum = prefix_checksum(params, prefix_end);
  cache.build_cost = ops.forward;
  return cache;
}

bool cache_valid(const ActivationCache& cache, const ParamSet& params) {
  return cache.passthrough() || prefix_checksum(params, cache.prefix_end) == cache.prefix_checksum;
}

StepResult train_step_cached(const ModelSpec& model, ParamSet& params, const ActivationCache& cache,
                             const Dataset& data, std::span<const std::size_t> batch, const FreezeMask& mask,
                             OptimState& state, const OptimHyper& hyper, OpCounter* ops, MemoryLedger* ledger) {
  if (cache.passthrough()) return train_step(model, params, data, batch, mask, state, hyper, ops, ledger);
  if (mask.backward_start < cache.prefix_end || mask.first_trainable() < cache.prefix_end) {
    throw std::invalid_argument("cached prefix overlaps the trainable block");
  }
  if (!cache_valid(cache, params)) throw StaleCacheError("frozen prefix changed since the activation cache was built");
  const Tensor activation = gather_rows(cache.activations, batch, cache.rows_per_sample);
  const Tensor targets = gather_rows(data.targets, batch);
  return train_step_from(model, params, activation, cache.prefix_end, targets, mask, state, hyper, ops, ledger);
}

void save_cache(const ActivationCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, cache.samples);
  put_u64(out, cache.rows_per_sample);
  const auto& shape = cache.activations.shape();
  put_u64(out, shape.size());
  for (auto d : shape) put_u64(out, d);
  put_u64(out, cache.prefix_end);
  put_u64(out, cache.prefix_checksum);
  put_u64(out, cache.build_cost);
  for (double v : cache.activations.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

ActivationCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not an activation cache file: " + path.string());
  ActivationCache cache;
  cache.samples = get_u64(in);
  cache.rows_per_sample = get_u64(in);
  Shape shape(get_u64(in));
  for (auto& d : shape) d = get_u64(in);
  cache.prefix_end = get_u64(in);
  cache.prefix_checksum = get_u64(in);
  cache.build_cost = get_u64(in);
  if (!shape.empty()) {
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) v = std::bit_cast<double>(get_u64(in));
    cache.activations = Tensor(std::move(shape), std::move(data));
  }
  return cache;
}

}  // namespace bcdlab
