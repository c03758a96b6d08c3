#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "blockmask/msp.hpp"

namespace blockmask {

enum class SignificanceMode {
  /// Null distribution from random masking: bootstrap means of m deltas
  /// drawn from all N iterations, compared against the block's masked mean.
  /// p = (#{null >= observed} + 1) / (iterations + 1).
  kCorrected,
  /// The printed bootstrap test: resample the block's own masked deltas and
  /// count means strictly greater than the grand mean, divided by iterations.
  kLiteral,
};

struct BootstrapConfig {
  /// Draws per bootstrap mean; defaults to the block's masked count.
  std::optional<std::size_t> sample_size;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 1;
};

struct SignificanceResult {
  std::size_t label = 0;
  std::size_t block = 0;
  /// Corrected: masked mean of the block. Literal: grand mean it is compared to.
  std::optional<double> observed;
  std::optional<double> p_value;  ///< empty for never-masked blocks
  SignificanceMode mode = SignificanceMode::kCorrected;
  std::size_t masked_count = 0;

  bool operator==(const SignificanceResult&) const = default;
};

/// Label-major results, same indexing as block_importance. Each
/// (label, block) cell draws from its own counter-based stream, so results
/// are deterministic for any `max_in_flight`.
std::vector<SignificanceResult> p_values(const PerturbationRecord& rec, const BootstrapConfig& cfg,
                                         SignificanceMode mode = SignificanceMode::kCorrected);

/// Corrected-mode p-value for one observed statistic against `pool`.
/// Exposed for property tests; `p_values` is built from it.
double corrected_p_value(std::span<const double> pool, double observed, std::size_t sample_size,
                         std::size_t iterations, std::uint64_t seed, std::uint32_t label, std::uint32_t block);

const char* to_string(SignificanceMode mode) noexcept;
SignificanceMode significance_mode_from_string(const std::string& s);

}  // namespace blockmask
