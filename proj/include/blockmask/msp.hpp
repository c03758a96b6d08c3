#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockmask/backends.hpp"
#include "blockmask/core.hpp"
#include "blockmask/matrix.hpp"

namespace blockmask {

enum class MspMode { kSingle, kPairs };

struct MspConfig {
  std::size_t block_size = 10;
  double mask_probability = 0.1;
  /// Exactly one of `iterations` / `expected_masks` is set. With
  /// `expected_masks` = E the iteration count is ceil(E / P).
  std::optional<std::uint64_t> iterations;
  std::optional<double> expected_masks = 100.0;
  std::uint64_t seed = 0;
  MspMode mode = MspMode::kSingle;
  /// Masked variants per backend call.
  std::size_t batch_size = 32;
  /// Worker threads dispatching batches concurrently.
  std::size_t max_in_flight = 1;
};

/// Resolved iteration count; validates P in (0,1) and N >= 1.
std::uint64_t resolve_iterations(const MspConfig& cfg);

/// ceil(x), except values within 1e-9 relative of an integer snap to it.
std::uint64_t ceil_count(double x);

/// Everything needed to replay the statistics without the classifier.
struct PerturbationRecord {
  std::string document_id;
  std::vector<std::string> labels;
  std::size_t token_count = 0;
  std::size_t block_size = 0;
  double mask_probability = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> baseline;  ///< L baseline probabilities
  Matrix deltas;                 ///< N x L, baseline minus masked probability
  BitMatrix masks;               ///< N x blocks, bit set when the block was masked

  std::size_t iterations() const noexcept { return deltas.rows(); }
  std::size_t block_count() const noexcept { return masks.cols(); }
  std::size_t label_count() const noexcept { return labels.size(); }

  bool operator==(const PerturbationRecord&) const = default;
};

/// Mask row for iteration `n`: block j is masked iff the j-th uniform of the
/// (seed, n) stream is < P. Depends only on (seed, n).
std::vector<bool> mask_pattern(std::uint64_t seed, std::uint64_t iteration, std::size_t block_count,
                               double mask_probability);

/// Monte Carlo masked sampling: one baseline evaluation plus exactly N masked
/// evaluations. The record is bit-identical for any `max_in_flight`. A backend
/// failure throws PartialResultsError carrying the completed evaluation count.
PerturbationRecord run_msp(const Document& doc, ClassifierBackend& backend, const MspConfig& cfg);

/// Per-(label, block) importance. `score` (masked mean minus unmasked mean)
/// is empty when the block was never masked or always masked; `masked_mean`
/// is empty when the block was never masked.
struct BlockScore {
  std::size_t label = 0;
  std::size_t block = 0;
  std::optional<double> score;
  std::optional<double> masked_mean;
  std::size_t masked_count = 0;
  std::size_t unmasked_count = 0;

  bool defined() const noexcept { return score.has_value(); }
  bool operator==(const BlockScore&) const = default;
};

/// Scores in label-major order: index = label * block_count + block.
std::vector<BlockScore> block_importance(const PerturbationRecord& rec);

struct PairScore {
  std::size_t label = 0;
  std::size_t first = 0;   ///< lower block index
  std::size_t second = 0;  ///< higher block index
  std::optional<double> score;        ///< mean(both masked) - mean(neither masked)
  std::optional<double> interaction;  ///< score - (score_first + score_second)
  std::size_t comask_count = 0;
  std::size_t neither_count = 0;
  std::size_t distance = 0;  ///< tokens between block starts

  bool operator==(const PairScore&) const = default;
};

/// All i<j pairs for every label, label-major then (i, j) lexicographic.
/// Throws InvalidArgument when N * P^2 < min_comask.
std::vector<PairScore> pair_importance(const PerturbationRecord& rec, double min_comask = 30.0);

struct TopK {
  std::vector<std::size_t> blocks;
  bool truncated = false;  ///< fewer than K defined blocks were available
};

/// K highest defined scores for `label`, descending; ties go to the lower index.
TopK top_k(const std::vector<BlockScore>& scores, std::size_t k, std::size_t label);

/// K distinct blocks drawn uniformly without replacement from [0, block_count).
std::vector<std::size_t> random_blocks(std::size_t block_count, std::size_t k, std::uint64_t seed);

nlohmann::json record_to_json(const PerturbationRecord& rec);
PerturbationRecord record_from_json(const nlohmann::json& j);

}  // namespace blockmask
