#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "blockmask/report.hpp"

namespace blockmask {

namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

const char* kStyle = R"(body{font-family:Georgia,serif;max-width:60rem;margin:2rem auto;padding:0 1rem;color:#222}
h1{font-size:1.3rem}h2{font-size:1.1rem;margin-top:2rem}
.doc{line-height:1.8;border:1px solid #ddd;padding:1rem;background:#fafafa}
.blk{border-radius:3px;padding:1px 2px}
.blk sup{font-size:.65rem;color:#333;margin-left:2px}
table{border-collapse:collapse;margin-top:1rem;width:100%}
td,th{border:1px solid #ddd;padding:.3rem .5rem;text-align:left;vertical-align:top}
th{background:#f0f0f0}.num{text-align:right;font-family:monospace}
.meta{color:#666;font-size:.85rem})";

}  // namespace

std::string format_p_value(double p) {
  if (p < 0.001) return "<0.001";
  return fixed3(p);
}

std::string emit_html(const ImportanceReport& report, const HtmlOptions& options) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>"
      << escape(report.document_id) << " (" << escape(report.algorithm) << ")</title>\n<style>" << kStyle
      << "</style>\n</head>\n<body>\n<h1>" << escape(report.document_id) << " &middot; " << escape(report.algorithm)
      << "</h1>\n";
  if (report.significance_mode)
    out << "<p class=\"meta\">significance: " << escape(*report.significance_mode) << "</p>\n";

  for (const auto& section : report.labels) {
    if (!options.labels.empty() &&
        std::find(options.labels.begin(), options.labels.end(), section.label) == options.labels.end())
      continue;
    out << "<section>\n<h2>" << escape(section.label);
    if (section.baseline) out << " <span class=\"meta\">p = " << fixed3(*section.baseline) << "</span>";
    out << "</h2>\n";

    double max_score = 0.0;
    for (const auto& e : section.entries) {
      if (e.score) max_score = std::max(max_score, *e.score);
    }
    // Token offset -> entry to highlight.
    std::map<std::size_t, const ReportEntry*> highlighted;
    for (const auto& e : section.entries) {
      const bool above = e.score ? *e.score > options.threshold : true;
      if (above) highlighted.emplace(e.start, &e);
    }

    out << "<div class=\"doc\">";
    for (std::size_t i = 0; i < report.tokens.size();) {
      const auto it = highlighted.find(i);
      if (it == highlighted.end()) {
        out << escape(report.tokens[i]) << ' ';
        ++i;
        continue;
      }
      const ReportEntry& e = *it->second;
      const double strength =
          e.score && max_score > 0.0 ? std::clamp(*e.score / max_score, 0.0, 1.0) : 1.0;
      std::string tip = "rank " + std::to_string(e.rank) + ", block " + std::to_string(e.block_index);
      if (e.score) tip += ", score " + fixed3(*e.score);
      if (e.p_value) tip += ", p " + format_p_value(*e.p_value);
      out << "<mark class=\"blk\" style=\"background:rgba(214,39,40," << fixed3(0.15 + 0.65 * strength)
          << ")\" title=\"" << escape(tip) << "\">";
      for (std::size_t t = e.start; t < e.start + e.length && t < report.tokens.size(); ++t) {
        if (t > e.start) out << ' ';
        out << escape(report.tokens[t]);
      }
      out << "<sup>" << e.rank << "</sup></mark> ";
      i = e.start + e.length;
    }
    out << "</div>\n";

    out << "<table>\n<tr><th>Rank</th><th>Text block</th><th>Score</th><th>p-value</th></tr>\n";
    for (const auto& e : section.entries) {
      out << "<tr><td class=\"num\">" << e.rank << "</td><td>" << escape(e.text) << "</td><td class=\"num\">"
          << (e.score ? fixed3(*e.score) : "&ndash;") << "</td><td class=\"num\">"
          << (e.p_value ? escape(format_p_value(*e.p_value)) : "&ndash;") << "</td></tr>\n";
    }
    out << "</table>\n";

    if (report.has_pairs && !section.pairs.empty()) {
      out << "<table>\n<tr><th>Rank</th><th>Blocks</th><th>Pair score</th><th>Interaction</th><th>Distance</th></tr>\n";
      for (const auto& p : section.pairs) {
        out << "<tr><td class=\"num\">" << p.rank << "</td><td>" << p.first << ", " << p.second
            << "</td><td class=\"num\">" << (p.score ? fixed3(*p.score) : "&ndash;") << "</td><td class=\"num\">"
            << (p.interaction ? fixed3(*p.interaction) : "&ndash;") << "</td><td class=\"num\">" << p.distance
            << "</td></tr>\n";
      }
      out << "</table>\n";
    }
    out << "</section>\n";
  }
  out << "</body>\n</html>\n";
  return out.str();
}

}  // namespace blockmask
