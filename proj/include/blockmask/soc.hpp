#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blockmask/backends.hpp"
#include "blockmask/core.hpp"
#include "blockmask/msp.hpp"

namespace blockmask {

struct SocConfig {
  std::size_t block_size = 10;
  std::size_t samples_per_block = 100;  ///< J rounds per block
  std::size_t radius = 10;              ///< context tokens on each side
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 1;
};

/// Produces replacement tokens for a context span. `draw_id` identifies the
/// draw uniquely within a run; the result must be a function of
/// (sampler state, original, draw_id) only and have original.size() tokens.
class ContextSampler {
 public:
  virtual ~ContextSampler() = default;
  virtual TokenSequence sample(std::span<const std::string> original, std::uint64_t draw_id) const = 0;
};

/// Leaves the context unchanged, reducing SOC to plain occlusion.
class IdentitySampler final : public ContextSampler {
 public:
  TokenSequence sample(std::span<const std::string> original, std::uint64_t draw_id) const override;
};

/// I.i.d. draws from a weighted vocabulary (uniform when all weights are equal).
class VocabularySampler final : public ContextSampler {
 public:
  VocabularySampler(std::vector<std::string> vocabulary, std::vector<double> weights, std::uint64_t seed);
  TokenSequence sample(std::span<const std::string> original, std::uint64_t draw_id) const override;

  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
  std::vector<double> cumulative_;
  std::uint64_t seed_;
};

/// Uniform over `vocabulary`; throws InvalidArgument when it is empty.
std::unique_ptr<ContextSampler> uniform_sampler(std::vector<std::string> vocabulary, std::uint64_t seed);

/// Unigram-frequency sampler over every token of `corpus`, in first-seen order.
std::unique_ptr<ContextSampler> unigram_sampler(std::span<const Document> corpus, std::uint64_t seed);

/// Sampling-and-occlusion importance. For each block and each of J rounds
/// the radius-token context on both sides is resampled, then the document
/// is scored with the block intact and with the block masked;
/// score = mean over rounds of (p_intact - p_masked). Exactly
/// 2 * J * ceil(S / B) classifier evaluations. Scores carry
/// masked_count = J and unmasked_count = 0.
std::vector<BlockScore> run_soc(const Document& doc, ClassifierBackend& backend, const ContextSampler& sampler,
                                const SocConfig& cfg);

}  // namespace blockmask
