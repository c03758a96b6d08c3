#include "blockmask/report.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "blockmask/error.hpp"

namespace blockmask {

namespace {

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string join_span(const std::vector<std::string>& tokens, std::size_t start, std::size_t length) {
  std::string out;
  for (std::size_t i = start; i < start + length; ++i) {
    if (i > start) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string tsv_field(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

std::string tsv_number(const std::optional<double>& v) {
  if (!v) return "";
  return nlohmann::json(*v).dump();
}

}  // namespace

nlohmann::json report_to_json(const ImportanceReport& report) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& section : report.labels) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : section.entries) {
      entries.push_back({{"rank", e.rank},
                         {"block_index", e.block_index},
                         {"start", e.start},
                         {"length", e.length},
                         {"text", e.text},
                         {"score", opt(e.score)},
                         {"masked_mean", opt(e.masked_mean)},
                         {"p_value", opt(e.p_value)},
                         {"masked_count", opt(e.masked_count)}});
    }
    nlohmann::json s = {{"label", section.label},
                        {"baseline", opt(section.baseline)},
                        {"truncated", section.truncated},
                        {"entries", std::move(entries)}};
    if (report.has_pairs) {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& p : section.pairs) {
        pairs.push_back({{"rank", p.rank},
                         {"blocks", {p.first, p.second}},
                         {"score", opt(p.score)},
                         {"interaction", opt(p.interaction)},
                         {"comask_count", p.comask_count},
                         {"distance", p.distance}});
      }
      s["pairs"] = std::move(pairs);
    }
    labels.push_back(std::move(s));
  }
  return {{"document_id", report.document_id},
          {"algorithm", report.algorithm},
          {"config", report.config},
          {"significance_mode", opt(report.significance_mode)},
          {"pairs", report.has_pairs},
          {"tokens", report.tokens},
          {"labels", std::move(labels)}};
}

ImportanceReport report_from_json(const nlohmann::json& j) {
  ImportanceReport r;
  try {
    r.document_id = j.at("document_id").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.config = j.at("config");
    r.significance_mode = get_opt<std::string>(j, "significance_mode");
    r.has_pairs = j.value("pairs", false);
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& s : j.at("labels")) {
      LabelSection section;
      section.label = s.at("label").get<std::string>();
      section.baseline = get_opt<double>(s, "baseline");
      section.truncated = s.value("truncated", false);
      for (const auto& e : s.at("entries")) {
        ReportEntry entry;
        entry.rank = e.at("rank").get<std::size_t>();
        entry.block_index = e.at("block_index").get<std::size_t>();
        entry.start = e.at("start").get<std::size_t>();
        entry.length = e.at("length").get<std::size_t>();
        entry.text = e.at("text").get<std::string>();
        entry.score = get_opt<double>(e, "score");
        entry.masked_mean = get_opt<double>(e, "masked_mean");
        entry.p_value = get_opt<double>(e, "p_value");
        entry.masked_count = get_opt<std::size_t>(e, "masked_count");
        section.entries.push_back(std::move(entry));
      }
      if (r.has_pairs && s.contains("pairs")) {
        for (const auto& p : s.at("pairs")) {
          ReportPair pair;
          pair.rank = p.at("rank").get<std::size_t>();
          const auto blocks = p.at("blocks").get<std::vector<std::size_t>>();
          if (blocks.size() != 2) throw InputError("report pair must name two blocks");
          pair.first = blocks[0];
          pair.second = blocks[1];
          pair.score = get_opt<double>(p, "score");
          pair.interaction = get_opt<double>(p, "interaction");
          pair.comask_count = p.at("comask_count").get<std::size_t>();
          pair.distance = p.at("distance").get<std::size_t>();
          section.pairs.push_back(pair);
        }
      }
      r.labels.push_back(std::move(section));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }

  const std::string where = "report '" + r.document_id + "'";
  if (r.algorithm != "msp" && r.algorithm != "soc" && r.algorithm != "random")
    throw InputError(where + ": unknown algorithm '" + r.algorithm + "'");
  for (const auto& section : r.labels) {
    for (std::size_t i = 0; i < section.entries.size(); ++i) {
      const auto& e = section.entries[i];
      if (e.rank != i + 1) throw InputError(where + ": ranks of label '" + section.label + "' are not 1..K");
      if (e.length == 0 || e.start + e.length > r.tokens.size())
        throw InputError(where + ": block " + std::to_string(e.block_index) + " lies outside the document");
      if (join_span(r.tokens, e.start, e.length) != e.text)
        throw InputError(where + ": text of block " + std::to_string(e.block_index) + " does not match its span");
    }
  }
  return r;
}

std::string report_to_tsv(const ImportanceReport& report, bool header) {
  std::ostringstream out;
  if (header) out << "document_id\talgorithm\tlabel\trank\tblock_index\tstart\tlength\tscore\tmasked_mean\tp_value\ttext\n";
  for (const auto& section : report.labels) {
    for (const auto& e : section.entries) {
      out << tsv_field(report.document_id) << '\t' << report.algorithm << '\t' << tsv_field(section.label) << '\t'
          << e.rank << '\t' << e.block_index << '\t' << e.start << '\t' << e.length << '\t' << tsv_number(e.score)
          << '\t' << tsv_number(e.masked_mean) << '\t' << tsv_number(e.p_value) << '\t' << tsv_field(e.text) << '\n';
    }
  }
  return out.str();
}

std::vector<eval::RankedList> ranked_lists(const std::vector<ImportanceReport>& reports) {
  std::vector<eval::RankedList> out;
  for (const auto& r : reports) {
    for (const auto& section : r.labels) {
      eval::RankedList list{r.document_id, section.label, r.algorithm, {}};
      for (const auto& e : section.entries) list.blocks.push_back(e.block_index);
      out.push_back(std::move(list));
    }
  }
  return out;
}

namespace {

nlohmann::json estimate_json(const eval::Estimate& e) {
  return {{"mean", e.mean}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"pairs", e.pairs}};
}

}  // namespace

nlohmann::json evaluate(const std::vector<eval::Annotation>& annotations,
                        const std::vector<ImportanceReport>& reports, const EvaluationOptions& options) {
  if (options.ks.empty()) throw InvalidArgument("at least one K is required");
  const auto lists = ranked_lists(reports);
  eval::validate_ranked(lists);

  std::map<std::string, std::vector<eval::Annotation>> by_reviewer;
  for (const auto& a : annotations) by_reviewer[a.reviewer].push_back(a);
  std::map<std::string, std::vector<eval::RankedList>> by_algorithm;
  for (const auto& l : lists) by_algorithm[l.algorithm].push_back(l);

  const eval::BootstrapOptions boot{options.bootstrap_iterations, 0.95, options.seed};
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& [reviewer, reviewed] : by_reviewer) {
    for (const auto& [algorithm, algo_lists] : by_algorithm) {
      for (const auto k : options.ks) {
        try {
          metrics.push_back({{"reviewer", reviewer},
                             {"algorithm", algorithm},
                             {"k", k},
                             {"precision", estimate_json(eval::precision_at_k(algo_lists, reviewed, k, boot))},
                             {"mrr", estimate_json(eval::mrr_at_k(algo_lists, reviewed, k, boot))}});
        } catch (const InputError& e) {
          throw InputError("reviewer '" + reviewer + "', algorithm '" + algorithm + "', K=" + std::to_string(k) +
                           ": " + e.what());
        }
      }
    }
  }

  nlohmann::json welch = nlohmann::json::array();
  for (const auto& [reviewer, reviewed] : by_reviewer) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // informative, total
    for (const auto& a : reviewed) {
      auto& c = counts[a.algorithm];
      c.first += a.informative ? 1 : 0;
      ++c.second;
    }
    std::vector<std::string> algorithms;
    for (const auto& [name, c] : counts) algorithms.push_back(name);
    std::vector<nlohmann::json> tests;
    std::vector<double> raw;
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
      for (std::size_t j = i + 1; j < algorithms.size(); ++j) {
        const auto& a = counts[algorithms[i]];
        const auto& b = counts[algorithms[j]];
        if (a.second < 2 || b.second < 2) continue;
        const double p = eval::welch_t_test(a.first, a.second, b.first, b.second);
        raw.push_back(p);
        tests.push_back({{"reviewer", reviewer},
                         {"algorithm_a", algorithms[i]},
                         {"informative_a", a.first},
                         {"n_a", a.second},
                         {"algorithm_b", algorithms[j]},
                         {"informative_b", b.first},
                         {"n_b", b.second},
                         {"p_value", p}});
      }
    }
    if (tests.empty()) continue;
    const auto adjusted = eval::bonferroni(raw, tests.size());
    for (std::size_t t = 0; t < tests.size(); ++t) {
      tests[t]["p_bonferroni"] = adjusted[t];
      tests[t]["families"] = tests.size();
      welch.push_back(std::move(tests[t]));
    }
  }

  nlohmann::json agreement = nlohmann::json::array();
  for (auto a = by_reviewer.begin(); a != by_reviewer.end(); ++a) {
    for (auto b = std::next(a); b != by_reviewer.end(); ++b) {
      const auto res = eval::agreement_and_kappa(a->second, b->second);
      agreement.push_back({{"reviewer_a", a->first},
                           {"reviewer_b", b->first},
                           {"items", res.items},
                           {"agreement", res.agreement},
                           {"kappa", res.kappa}});
    }
  }

  return {{"k", options.ks},
          {"bootstrap_iterations", options.bootstrap_iterations},
          {"seed", options.seed},
          {"metrics", std::move(metrics)},
          {"welch", std::move(welch)},
          {"agreement", std::move(agreement)}};
}

}  // namespace blockmask
