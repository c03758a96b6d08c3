#pragma once

#include <array>
#include <cstdint>

namespace blockmask {

/// Philox4x32-10 block function (Salmon et al., Random123). Stateless: the
/// output is a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Stream domains keep the draws of unrelated consumers disjoint under one seed.
enum class RngDomain : std::uint32_t {
  kMaskPattern = 1,
  kRandomBlocks = 2,
  kContextSampler = 3,
  kBootstrap = 4,
  kEvalBootstrap = 5,
};

/// Sequential stream over Philox outputs addressed by (seed, domain, a, b).
/// Two streams with the same address produce the same values no matter
/// which thread or in which order they are consumed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngDomain domain, std::uint32_t a, std::uint32_t b = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double next_double() noexcept;
  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t next_below(std::uint64_t bound) noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace blockmask
