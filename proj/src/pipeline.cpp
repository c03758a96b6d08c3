#include "blockmask/pipeline.hpp"

#include <algorithm>

#include "blockmask/error.hpp"

namespace blockmask {

namespace {

ReportEntry make_entry(const Document& doc, const Block& block, std::size_t rank) {
  ReportEntry e;
  e.rank = rank;
  e.block_index = block.index;
  e.start = block.start;
  e.length = block.length;
  e.text = block_text(doc, block);
  return e;
}

nlohmann::json msp_config_echo(const ExplainOptions& o, std::uint64_t iterations) {
  return {{"block_size", o.msp.block_size},
          {"mask_probability", o.msp.mask_probability},
          {"iterations", iterations},
          {"expected_masks", o.msp.expected_masks ? nlohmann::json(*o.msp.expected_masks) : nlohmann::json(nullptr)},
          {"seed", o.msp.seed},
          {"mode", o.msp.mode == MspMode::kPairs ? "pairs" : "single"},
          {"top_k", o.top_k},
          {"bootstrap_iterations", o.bootstrap.iterations},
          {"bootstrap_sample_size",
           o.bootstrap.sample_size ? nlohmann::json(*o.bootstrap.sample_size) : nlohmann::json(nullptr)},
          {"bootstrap_seed", o.bootstrap.seed},
          {"min_comask", o.msp.mode == MspMode::kPairs ? nlohmann::json(o.min_comask) : nlohmann::json(nullptr)},
          {"min_baseline", o.min_baseline ? nlohmann::json(*o.min_baseline) : nlohmann::json(nullptr)}};
}

}  // namespace

ImportanceReport report_from_record(const Document& doc, const PerturbationRecord& rec,
                                    const ExplainOptions& options) {
  if (doc.id != rec.document_id || doc.tokens.size() != rec.token_count)
    throw InputError("record '" + rec.document_id + "' does not belong to document '" + doc.id + "'");
  if (options.top_k == 0) throw InvalidArgument("top-k must be at least 1");
  const auto blocks = segment(doc.tokens.size(), rec.block_size);
  const auto scores = block_importance(rec);
  const auto significance = p_values(rec, options.bootstrap, options.significance);
  const bool pairs_mode = options.msp.mode == MspMode::kPairs;
  std::vector<PairScore> pairs;
  if (pairs_mode) pairs = pair_importance(rec, options.min_comask);
  const std::size_t n_blocks = rec.block_count();

  ImportanceReport report;
  report.document_id = doc.id;
  report.algorithm = "msp";
  report.config = msp_config_echo(options, rec.iterations());
  report.significance_mode = to_string(options.significance);
  report.has_pairs = pairs_mode;
  report.tokens = doc.tokens;
  for (std::size_t l = 0; l < rec.label_count(); ++l) {
    if (options.min_baseline && rec.baseline[l] < *options.min_baseline) continue;
    LabelSection section;
    section.label = rec.labels[l];
    section.baseline = rec.baseline[l];
    const auto top = top_k(scores, options.top_k, l);
    section.truncated = top.truncated;
    for (std::size_t r = 0; r < top.blocks.size(); ++r) {
      const std::size_t j = top.blocks[r];
      const auto& s = scores[l * n_blocks + j];
      const auto& sig = significance[l * n_blocks + j];
      auto e = make_entry(doc, blocks[j], r + 1);
      e.score = s.score;
      e.masked_mean = s.masked_mean;
      e.p_value = sig.p_value;
      e.masked_count = s.masked_count;
      section.entries.push_back(std::move(e));
    }
    if (pairs_mode) {
      std::vector<const PairScore*> ranked;
      for (const auto& p : pairs) {
        if (p.label == l && p.interaction) ranked.push_back(&p);
      }
      std::sort(ranked.begin(), ranked.end(), [](const PairScore* a, const PairScore* b) {
        if (*a->interaction != *b->interaction) return *a->interaction > *b->interaction;
        return std::tie(a->first, a->second) < std::tie(b->first, b->second);
      });
      for (std::size_t r = 0; r < std::min(options.top_k, ranked.size()); ++r) {
        const auto& p = *ranked[r];
        section.pairs.push_back({r + 1, p.first, p.second, p.score, p.interaction, p.comask_count, p.distance});
      }
    }
    report.labels.push_back(std::move(section));
  }
  return report;
}

ExplainResult explain_msp(const Document& doc, ClassifierBackend& backend, const ExplainOptions& options) {
  if (options.top_k == 0) throw InvalidArgument("top-k must be at least 1");
  auto record = run_msp(doc, backend, options.msp);
  auto report = report_from_record(doc, record, options);
  return {std::move(report), std::move(record)};
}

ImportanceReport explain_soc(const Document& doc, ClassifierBackend& backend, const ContextSampler& sampler,
                             const SocConfig& cfg, std::size_t top_k_count, const std::string& sampler_name) {
  if (top_k_count == 0) throw InvalidArgument("top-k must be at least 1");
  const auto scores = run_soc(doc, backend, sampler, cfg);
  const auto blocks = segment(doc, {cfg.block_size});
  ImportanceReport report;
  report.document_id = doc.id;
  report.algorithm = "soc";
  report.config = {{"block_size", cfg.block_size}, {"rounds", cfg.samples_per_block}, {"radius", cfg.radius},
                   {"seed", cfg.seed},             {"top_k", top_k_count},             {"sampler", sampler_name}};
  report.tokens = doc.tokens;
  for (std::size_t l = 0; l < backend.labels().size(); ++l) {
    LabelSection section;
    section.label = backend.labels()[l];
    const auto top = top_k(scores, top_k_count, l);
    section.truncated = top.truncated;
    for (std::size_t r = 0; r < top.blocks.size(); ++r) {
      const std::size_t j = top.blocks[r];
      auto e = make_entry(doc, blocks[j], r + 1);
      e.score = scores[l * blocks.size() + j].score;
      section.entries.push_back(std::move(e));
    }
    report.labels.push_back(std::move(section));
  }
  return report;
}

ImportanceReport explain_random(const Document& doc, const std::vector<std::string>& labels, std::size_t block_size,
                                std::size_t top_k_count, std::uint64_t seed) {
  validate(doc);
  if (top_k_count == 0) throw InvalidArgument("top-k must be at least 1");
  if (labels.empty()) throw InvalidArgument("random selection needs at least one label");
  const auto blocks = segment(doc, {block_size});
  if (top_k_count > blocks.size())
    throw InvalidArgument("document '" + doc.id + "': top-k " + std::to_string(top_k_count) + " exceeds its " +
                          std::to_string(blocks.size()) + " blocks");
  ImportanceReport report;
  report.document_id = doc.id;
  report.algorithm = "random";
  report.config = {{"block_size", block_size}, {"top_k", top_k_count}, {"seed", seed}};
  report.tokens = doc.tokens;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    LabelSection section;
    section.label = labels[l];
    // Independent draw per label; the label index perturbs the seed stream.
    const auto picked = random_blocks(blocks.size(), top_k_count, seed ^ (0x9E3779B97F4A7C15ull * (l + 1)));
    for (std::size_t r = 0; r < picked.size(); ++r) section.entries.push_back(make_entry(doc, blocks[picked[r]], r + 1));
    report.labels.push_back(std::move(section));
  }
  return report;
}

}  // namespace blockmask
