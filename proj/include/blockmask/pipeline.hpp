#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "blockmask/backends.hpp"
#include "blockmask/core.hpp"
#include "blockmask/msp.hpp"
#include "blockmask/report.hpp"
#include "blockmask/significance.hpp"
#include "blockmask/soc.hpp"

namespace blockmask {

struct ExplainOptions {
  MspConfig msp;
  std::size_t top_k = 5;
  BootstrapConfig bootstrap;
  SignificanceMode significance = SignificanceMode::kCorrected;
  double min_comask = 30.0;  ///< pairs mode only
  /// Only labels whose baseline probability reaches this value get a section.
  std::optional<double> min_baseline;
};

struct ExplainResult {
  ImportanceReport report;
  PerturbationRecord record;
};

/// MSP sampling, block scores, p-values and (in pairs mode) pair
/// interactions, condensed into a top-K report per label.
ExplainResult explain_msp(const Document& doc, ClassifierBackend& backend, const ExplainOptions& options);

/// Rebuilds the report from a stored record without calling a classifier.
/// `doc` must be the document the record was produced from.
ImportanceReport report_from_record(const Document& doc, const PerturbationRecord& record,
                                    const ExplainOptions& options);

ImportanceReport explain_soc(const Document& doc, ClassifierBackend& backend, const ContextSampler& sampler,
                             const SocConfig& cfg, std::size_t top_k, const std::string& sampler_name);

/// K blocks chosen uniformly at random per label; no classifier calls.
ImportanceReport explain_random(const Document& doc, const std::vector<std::string>& labels, std::size_t block_size,
                                std::size_t top_k, std::uint64_t seed);

}  // namespace blockmask
