#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace blockmask::eval {

/// Human judgment of one surfaced block.
struct Annotation {
  std::string doc_id;
  std::string label;
  std::size_t block_index = 0;
  std::string algorithm;  ///< msp | soc | random
  std::string reviewer;
  bool informative = false;

  bool operator==(const Annotation&) const = default;
};

/// (doc_id, label, block_index, algorithm): the item a reviewer judged.
using ItemKey = std::tuple<std::string, std::string, std::size_t, std::string>;

/// Ranked blocks for one (doc_id, label, algorithm); blocks[0] has rank 1.
struct RankedList {
  std::string doc_id;
  std::string label;
  std::string algorithm;
  std::vector<std::size_t> blocks;
};

/// Reads CSV with header doc_id,label,block_index,algorithm,reviewer,informative.
/// Double-quoted fields are supported. Throws InputError on malformed rows,
/// unknown algorithms and duplicate (doc, label, block, algorithm, reviewer) keys.
std::vector<Annotation> read_annotations(std::istream& in);
std::vector<Annotation> read_annotations_file(const std::string& path);

/// Throws InputError unless every list is non-empty, duplicate-free and has a
/// unique (doc, label, algorithm) key.
void validate_ranked(const std::vector<RankedList>& lists);

struct Estimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t pairs = 0;
  std::vector<double> per_pair;  ///< per (doc, label) value, in input order
};

struct BootstrapOptions {
  std::size_t iterations = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
};

/// Precision@K = informative among the top K / K, averaged over lists, with
/// a percentile bootstrap CI resampling lists. Annotations are those of a
/// single reviewer; any ranked item in the top K lacking one is an error
/// that lists every missing key.
Estimate precision_at_k(const std::vector<RankedList>& ranked, const std::vector<Annotation>& annotations,
                        std::size_t k, const BootstrapOptions& boot = {});

/// MRR@K = 1 / rank of the first informative block in the top K, 0 when none.
Estimate mrr_at_k(const std::vector<RankedList>& ranked, const std::vector<Annotation>& annotations, std::size_t k,
                  const BootstrapOptions& boot = {});

/// Percentile bootstrap CI of the mean of `values` (resampling values).
std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, const BootstrapOptions& boot);

/// Two-tailed Welch t-test on binary outcomes (successes out of n per sample).
double welch_t_test(std::size_t successes_a, std::size_t n_a, std::size_t successes_b, std::size_t n_b);

/// min(1, p * families) element-wise.
std::vector<double> bonferroni(const std::vector<double>& p_values, std::size_t families);

struct Agreement {
  double agreement = 0.0;
  double kappa = 0.0;
  std::size_t items = 0;
};

/// Agreement ratio and Cohen's kappa between two reviewers who judged the
/// identical item set; throws InputError otherwise. When chance agreement is
/// 1 (both constant and equal) kappa is 1.
Agreement agreement_and_kappa(const std::vector<Annotation>& reviewer_a, const std::vector<Annotation>& reviewer_b);

/// Kappa from a 2x2 confusion matrix [[yes/yes, yes/no], [no/yes, no/no]].
Agreement agreement_and_kappa(const std::array<std::array<std::size_t, 2>, 2>& confusion);

}  // namespace blockmask::eval
