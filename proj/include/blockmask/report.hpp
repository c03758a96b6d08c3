#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockmask/eval.hpp"

namespace blockmask {

struct ReportEntry {
  std::size_t rank = 0;  ///< 1-based
  std::size_t block_index = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  std::string text;  ///< block tokens joined by single spaces
  std::optional<double> score;
  std::optional<double> masked_mean;
  std::optional<double> p_value;
  std::optional<std::size_t> masked_count;

  bool operator==(const ReportEntry&) const = default;
};

struct ReportPair {
  std::size_t rank = 0;
  std::size_t first = 0;
  std::size_t second = 0;
  std::optional<double> score;
  std::optional<double> interaction;
  std::size_t comask_count = 0;
  std::size_t distance = 0;

  bool operator==(const ReportPair&) const = default;
};

struct LabelSection {
  std::string label;
  std::optional<double> baseline;  ///< classifier probability on the unmasked document
  bool truncated = false;          ///< fewer than K ranked blocks were available
  std::vector<ReportEntry> entries;
  std::vector<ReportPair> pairs;

  bool operator==(const LabelSection&) const = default;
};

/// Per-document explanation shared by the msp, soc and random algorithms.
struct ImportanceReport {
  std::string document_id;
  std::string algorithm;  ///< msp | soc | random
  nlohmann::json config = nlohmann::json::object();
  std::optional<std::string> significance_mode;
  bool has_pairs = false;
  std::vector<std::string> tokens;
  std::vector<LabelSection> labels;

  bool operator==(const ImportanceReport&) const = default;
};

nlohmann::json report_to_json(const ImportanceReport& report);
/// Validates structure (ranks contiguous from 1, spans inside the token
/// list, text matching the span); throws InputError.
ImportanceReport report_from_json(const nlohmann::json& j);
std::string report_to_tsv(const ImportanceReport& report, bool header = true);

struct HtmlOptions {
  std::vector<std::string> labels;  ///< empty: every label
  double threshold = 0.0;           ///< blocks with score <= threshold are not highlighted
};

/// Standalone page: the document text per label with ranked blocks shaded
/// by score and p-values in tooltips, followed by a block table.
std::string emit_html(const ImportanceReport& report, const HtmlOptions& options = {});

/// "<0.001" below one in a thousand, otherwise three decimals.
std::string format_p_value(double p);

/// One RankedList per (document, label) section.
std::vector<eval::RankedList> ranked_lists(const std::vector<ImportanceReport>& reports);

struct EvaluationOptions {
  std::vector<std::size_t> ks{1, 2, 3, 4, 5};
  std::size_t bootstrap_iterations = 1000;
  std::uint64_t seed = 0;
};

/// Precision@K and MRR@K per (reviewer, algorithm, K); pairwise Welch tests
/// of informative proportions between algorithms per reviewer with
/// Bonferroni adjustment over that reviewer's tests; agreement and kappa
/// per reviewer pair.
nlohmann::json evaluate(const std::vector<eval::Annotation>& annotations,
                        const std::vector<ImportanceReport>& reports, const EvaluationOptions& options);

}  // namespace blockmask
