#include "blockmask/significance.hpp"

#include <atomic>
#include <thread>

#include "blockmask/error.hpp"
#include "blockmask/rng.hpp"

namespace blockmask {

namespace {

// Stream address for cell (label, block): the bootstrap index advances the
// Philox counter inside the stream.
CounterRng cell_stream(std::uint64_t seed, std::uint32_t label, std::uint32_t block) {
  return CounterRng(seed, RngDomain::kBootstrap, label, block);
}

double bootstrap_mean(std::span<const double> pool, std::size_t sample_size, CounterRng& rng) {
  double sum = 0.0;
  for (std::size_t k = 0; k < sample_size; ++k) sum += pool[rng.next_below(pool.size())];
  return sum / static_cast<double>(sample_size);
}

}  // namespace

const char* to_string(SignificanceMode mode) noexcept {
  return mode == SignificanceMode::kCorrected ? "corrected" : "literal";
}

SignificanceMode significance_mode_from_string(const std::string& s) {
  if (s == "corrected") return SignificanceMode::kCorrected;
  if (s == "literal") return SignificanceMode::kLiteral;
  throw InvalidArgument("unknown significance mode '" + s + "'");
}

double corrected_p_value(std::span<const double> pool, double observed, std::size_t sample_size,
                         std::size_t iterations, std::uint64_t seed, std::uint32_t label, std::uint32_t block) {
  if (pool.empty() || sample_size == 0) throw InvalidArgument("bootstrap needs a non-empty pool and sample size");
  auto rng = cell_stream(seed, label, block);
  std::size_t at_least = 0;
  for (std::size_t b = 0; b < iterations; ++b) {
    if (bootstrap_mean(pool, sample_size, rng) >= observed) ++at_least;
  }
  return static_cast<double>(at_least + 1) / static_cast<double>(iterations + 1);
}

std::vector<SignificanceResult> p_values(const PerturbationRecord& rec, const BootstrapConfig& cfg,
                                         SignificanceMode mode) {
  if (cfg.iterations < 100) throw InvalidArgument("bootstrap iterations must be at least 100");
  if (cfg.sample_size && *cfg.sample_size == 0) throw InvalidArgument("bootstrap sample size must be at least 1");
  const std::size_t n_iter = rec.iterations();
  const std::size_t n_blocks = rec.block_count();
  const std::size_t n_labels = rec.label_count();

  // Column-major copy of the deltas so each label's pool is contiguous.
  std::vector<std::vector<double>> pools(n_labels, std::vector<double>(n_iter));
  std::vector<double> grand_mean(n_labels, 0.0);
  for (std::size_t n = 0; n < n_iter; ++n) {
    for (std::size_t l = 0; l < n_labels; ++l) {
      pools[l][n] = rec.deltas(n, l);
      grand_mean[l] += rec.deltas(n, l);
    }
  }
  for (auto& g : grand_mean) g /= static_cast<double>(std::max<std::size_t>(n_iter, 1));

  std::vector<std::vector<std::size_t>> masked_rows(n_blocks);
  for (std::size_t n = 0; n < n_iter; ++n) {
    for (std::size_t j = 0; j < n_blocks; ++j) {
      if (rec.masks.test(n, j)) masked_rows[j].push_back(n);
    }
  }

  std::vector<SignificanceResult> out(n_labels * n_blocks);
  auto compute = [&](std::size_t cell) {
    const std::size_t l = cell / n_blocks;
    const std::size_t j = cell % n_blocks;
    auto& r = out[cell];
    r.label = l;
    r.block = j;
    r.mode = mode;
    r.masked_count = masked_rows[j].size();
    if (masked_rows[j].empty()) return;
    std::vector<double> block_deltas;
    block_deltas.reserve(masked_rows[j].size());
    for (const auto n : masked_rows[j]) block_deltas.push_back(pools[l][n]);
    const std::size_t m = cfg.sample_size.value_or(block_deltas.size());

    if (mode == SignificanceMode::kCorrected) {
      double sum = 0.0;
      for (const double d : block_deltas) sum += d;
      r.observed = sum / static_cast<double>(block_deltas.size());
      r.p_value = corrected_p_value(pools[l], *r.observed, m, cfg.iterations, cfg.seed,
                                    static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(j));
    } else {
      r.observed = grand_mean[l];
      auto rng = cell_stream(cfg.seed, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(j));
      std::size_t greater = 0;
      for (std::size_t b = 0; b < cfg.iterations; ++b) {
        if (bootstrap_mean(block_deltas, m, rng) > grand_mean[l]) ++greater;
      }
      r.p_value = static_cast<double>(greater) / static_cast<double>(cfg.iterations);
    }
  };

  const std::size_t cells = out.size();
  const std::size_t workers = std::clamp<std::size_t>(cfg.max_in_flight, 1, std::max<std::size_t>(cells, 1));
  if (workers == 1) {
    for (std::size_t c = 0; c < cells; ++c) compute(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next.fetch_add(1); c < cells; c = next.fetch_add(1)) compute(c);
      });
    }
  }
  return out;
}

}  // namespace blockmask
