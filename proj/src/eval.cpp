#include "blockmask/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "blockmask/error.hpp"
#include "blockmask/rng.hpp"

namespace blockmask::eval {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw InputError("annotations line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

using JudgmentMap = std::map<ItemKey, bool>;

JudgmentMap index_annotations(const std::vector<Annotation>& annotations) {
  JudgmentMap map;
  std::set<std::string> reviewers;
  for (const auto& a : annotations) reviewers.insert(a.reviewer);
  if (reviewers.size() > 1) throw InvalidArgument("metric annotations must come from a single reviewer");
  for (const auto& a : annotations) {
    if (!map.emplace(ItemKey{a.doc_id, a.label, a.block_index, a.algorithm}, a.informative).second)
      throw InputError("duplicate annotation for doc '" + a.doc_id + "', label '" + a.label + "', block " +
                       std::to_string(a.block_index) + ", algorithm '" + a.algorithm + "'");
  }
  return map;
}

// Per-list judgments of the top K, rejecting any unannotated item.
std::vector<std::vector<bool>> judged_top_k(const std::vector<RankedList>& ranked,
                                            const std::vector<Annotation>& annotations, std::size_t k) {
  if (k == 0) throw InvalidArgument("K must be at least 1");
  validate_ranked(ranked);
  const auto map = index_annotations(annotations);
  std::vector<std::vector<bool>> out;
  std::vector<std::string> missing;
  for (const auto& list : ranked) {
    std::vector<bool> judged;
    for (std::size_t r = 0; r < std::min(k, list.blocks.size()); ++r) {
      const auto it = map.find(ItemKey{list.doc_id, list.label, list.blocks[r], list.algorithm});
      if (it == map.end()) {
        missing.push_back("(" + list.doc_id + ", " + list.label + ", " + std::to_string(list.blocks[r]) + ", " +
                          list.algorithm + ")");
        continue;
      }
      judged.push_back(it->second);
    }
    out.push_back(std::move(judged));
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " ranked item(s) lack an annotation:";
    for (const auto& m : missing) msg += " " + m;
    throw InputError(msg);
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Estimate summarize(std::vector<double> per_pair, const BootstrapOptions& boot) {
  Estimate e;
  e.pairs = per_pair.size();
  if (per_pair.empty()) throw InvalidArgument("no ranked lists to evaluate");
  double sum = 0.0;
  for (const double v : per_pair) sum += v;
  e.mean = sum / static_cast<double>(per_pair.size());
  std::tie(e.ci_low, e.ci_high) = bootstrap_mean_ci(per_pair, boot);
  e.per_pair = std::move(per_pair);
  return e;
}

}  // namespace

std::vector<Annotation> read_annotations(std::istream& in) {
  static const std::vector<std::string> kHeader = {"doc_id",    "label",    "block_index",
                                                   "algorithm", "reviewer", "informative"};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InputError("annotations file is empty");
  ++line_no;
  if (split_csv_line(line, line_no) != kHeader)
    throw InputError("annotations header must be doc_id,label,block_index,algorithm,reviewer,informative");
  std::vector<Annotation> out;
  std::set<std::tuple<std::string, std::string, std::size_t, std::string, std::string>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "annotations line " + std::to_string(line_no);
    const auto f = split_csv_line(line, line_no);
    if (f.size() != kHeader.size()) throw InputError(where + ": expected 6 fields");
    Annotation a;
    a.doc_id = f[0];
    a.label = f[1];
    try {
      std::size_t used = 0;
      const auto v = std::stoull(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("trailing");
      a.block_index = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw InputError(where + ": block_index must be a non-negative integer");
    }
    a.algorithm = f[3];
    if (a.algorithm != "msp" && a.algorithm != "soc" && a.algorithm != "random")
      throw InputError(where + ": algorithm must be msp, soc or random");
    a.reviewer = f[4];
    if (f[5] != "0" && f[5] != "1") throw InputError(where + ": informative must be 0 or 1");
    a.informative = f[5] == "1";
    if (a.doc_id.empty() || a.label.empty() || a.reviewer.empty()) throw InputError(where + ": empty key field");
    if (!seen.emplace(a.doc_id, a.label, a.block_index, a.algorithm, a.reviewer).second)
      throw InputError(where + ": duplicate annotation key");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Annotation> read_annotations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open annotations '" + path + "'");
  return read_annotations(in);
}

void validate_ranked(const std::vector<RankedList>& lists) {
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (const auto& l : lists) {
    if (!keys.emplace(l.doc_id, l.label, l.algorithm).second)
      throw InputError("duplicate ranked list for (" + l.doc_id + ", " + l.label + ", " + l.algorithm + ")");
    std::set<std::size_t> seen(l.blocks.begin(), l.blocks.end());
    if (seen.size() != l.blocks.size())
      throw InputError("ranked list (" + l.doc_id + ", " + l.label + ", " + l.algorithm + ") repeats a block");
  }
}

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, const BootstrapOptions& boot) {
  if (values.empty()) throw InvalidArgument("bootstrap needs at least one value");
  if (boot.iterations == 0) throw InvalidArgument("bootstrap iterations must be positive");
  if (!(boot.confidence > 0.0 && boot.confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
  CounterRng rng(boot.seed, RngDomain::kEvalBootstrap, 0);
  std::vector<double> means(boot.iterations);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[rng.next_below(values.size())];
    m = sum / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const double alpha = 1.0 - boot.confidence;
  return {quantile_sorted(means, alpha / 2.0), quantile_sorted(means, 1.0 - alpha / 2.0)};
}

Estimate precision_at_k(const std::vector<RankedList>& ranked, const std::vector<Annotation>& annotations,
                        std::size_t k, const BootstrapOptions& boot) {
  std::vector<double> per_pair;
  for (const auto& judged : judged_top_k(ranked, annotations, k)) {
    const auto hits = static_cast<double>(std::count(judged.begin(), judged.end(), true));
    per_pair.push_back(hits / static_cast<double>(k));
  }
  return summarize(std::move(per_pair), boot);
}

Estimate mrr_at_k(const std::vector<RankedList>& ranked, const std::vector<Annotation>& annotations, std::size_t k,
                  const BootstrapOptions& boot) {
  std::vector<double> per_pair;
  for (const auto& judged : judged_top_k(ranked, annotations, k)) {
    const auto first = std::find(judged.begin(), judged.end(), true);
    per_pair.push_back(first == judged.end() ? 0.0 : 1.0 / static_cast<double>(first - judged.begin() + 1));
  }
  return summarize(std::move(per_pair), boot);
}

double welch_t_test(std::size_t successes_a, std::size_t n_a, std::size_t successes_b, std::size_t n_b) {
  if (n_a < 2 || n_b < 2) throw InvalidArgument("Welch test needs at least two observations per sample");
  if (successes_a > n_a || successes_b > n_b) throw InvalidArgument("successes exceed sample size");
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const double mean_a = static_cast<double>(successes_a) / na;
  const double mean_b = static_cast<double>(successes_b) / nb;
  // Unbiased sample variance of a 0/1 sample.
  const double var_a = mean_a * (1.0 - mean_a) * na / (na - 1.0);
  const double var_b = mean_b * (1.0 - mean_b) * nb / (nb - 1.0);
  const double se_a = var_a / na;
  const double se_b = var_b / nb;
  const double se2 = se_a + se_b;
  if (se2 == 0.0) return successes_a * n_b == successes_b * n_a ? 1.0 : 0.0;
  const double t = std::abs(mean_a - mean_b) / std::sqrt(se2);
  const double df = se2 * se2 / (se_a * se_a / (na - 1.0) + se_b * se_b / (nb - 1.0));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

std::vector<double> bonferroni(const std::vector<double>& p_values, std::size_t families) {
  if (families == 0) throw InvalidArgument("Bonferroni needs at least one family");
  std::vector<double> out;
  out.reserve(p_values.size());
  for (const double p : p_values) out.push_back(std::min(1.0, p * static_cast<double>(families)));
  return out;
}

Agreement agreement_and_kappa(const std::array<std::array<std::size_t, 2>, 2>& c) {
  const double n = static_cast<double>(c[0][0] + c[0][1] + c[1][0] + c[1][1]);
  if (n == 0) throw InvalidArgument("agreement needs at least one item");
  const double p_o = static_cast<double>(c[0][0] + c[1][1]) / n;
  const double a_yes = static_cast<double>(c[0][0] + c[0][1]) / n;
  const double b_yes = static_cast<double>(c[0][0] + c[1][0]) / n;
  const double p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
  Agreement out;
  out.items = static_cast<std::size_t>(n);
  out.agreement = p_o;
  out.kappa = p_e >= 1.0 ? 1.0 : (p_o - p_e) / (1.0 - p_e);
  return out;
}

Agreement agreement_and_kappa(const std::vector<Annotation>& reviewer_a, const std::vector<Annotation>& reviewer_b) {
  const auto a = index_annotations(reviewer_a);
  const auto b = index_annotations(reviewer_b);
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  for (const auto& [key, v] : a) only_a += b.contains(key) ? 0 : 1;
  for (const auto& [key, v] : b) only_b += a.contains(key) ? 0 : 1;
  if (only_a || only_b)
    throw InputError("reviewers judged different item sets (" + std::to_string(only_a) + " only in the first, " +
                     std::to_string(only_b) + " only in the second)");
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  for (const auto& [key, va] : a) {
    const bool vb = b.at(key);
    ++confusion[va ? 0 : 1][vb ? 0 : 1];
  }
  return agreement_and_kappa(confusion);
}

}  // namespace blockmask::eval
