#include "blockmask/blockmask.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "blockmask/backends.hpp"
#include "blockmask/core.hpp"
#include "blockmask/cost.hpp"
#include "blockmask/error.hpp"
#include "blockmask/eval.hpp"
#include "blockmask/pipeline.hpp"
#include "blockmask/report.hpp"

struct bm_corpus {
  std::vector<blockmask::Document> docs;
};

struct bm_backend {
  std::shared_ptr<blockmask::CountingBackend> counted;
};

struct bm_report {
  blockmask::ImportanceReport report;
  std::optional<blockmask::PerturbationRecord> record;
};

namespace {

thread_local std::string g_last_error;

bm_status fail(bm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
bm_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return BM_OK;
  } catch (const blockmask::Error& e) {
    return fail(static_cast<bm_status>(static_cast<int>(e.kind())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(BM_ERR_INPUT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(BM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BM_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool condition, const char* what) {
  if (!condition) throw blockmask::InvalidArgument(what);
}

const blockmask::Document& document_at(const bm_corpus* corpus, size_t index) {
  require(corpus != nullptr, "corpus is null");
  if (index >= corpus->docs.size())
    throw blockmask::InvalidArgument("document index " + std::to_string(index) + " out of range");
  return corpus->docs[index];
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::shared_ptr<blockmask::ClassifierBackend> open_backend(const std::string& spec, const bm_remote_options& opts) {
  using namespace blockmask;
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  if (kind == "builtin") {
    if (rest.empty()) throw InvalidArgument("builtin backend needs a weights path: builtin:<path>");
    return std::make_shared<KeywordLogitModel>(load_keyword_model_file(rest));
  }
  if (kind == "remote") {
    std::string url = rest;
    if (url.empty()) {
      const char* env = std::getenv("BLOCKMASK_BACKEND_URL");
      if (!env || !*env) throw InvalidArgument("remote backend needs a url or BLOCKMASK_BACKEND_URL");
      url = env;
    }
    RemoteBackendConfig cfg;
    cfg.base_url = url;
    cfg.batch_size = opts.batch_size;
    cfg.timeout = std::chrono::milliseconds(opts.timeout_ms);
    cfg.retries = opts.retries;
    return std::make_shared<RemoteBackend>(cfg);
  }
  if (kind == "constant") {
    const auto second = rest.find(':');
    if (second == std::string::npos) throw InvalidArgument("constant backend spec is constant:<p>:<labels>");
    double p = 0.0;
    try {
      p = std::stod(rest.substr(0, second));
    } catch (const std::exception&) {
      throw InvalidArgument("constant backend probability is not a number");
    }
    return std::make_shared<ConstantBackend>(split_commas(rest.substr(second + 1)), p);
  }
  throw InvalidArgument("unknown backend spec '" + spec + "' (builtin:<path>, remote[:<url>], constant:<p>:<labels>)");
}

blockmask::ExplainOptions to_explain_options(const bm_msp_options& o) {
  blockmask::ExplainOptions out;
  out.msp.block_size = o.block_size;
  out.msp.mask_probability = o.mask_probability;
  if (o.iterations > 0) {
    out.msp.iterations = o.iterations;
    out.msp.expected_masks.reset();
  } else {
    out.msp.expected_masks = o.expected_masks;
  }
  out.msp.seed = o.seed;
  out.msp.mode = o.pairs ? blockmask::MspMode::kPairs : blockmask::MspMode::kSingle;
  out.msp.batch_size = o.batch_size;
  out.msp.max_in_flight = o.max_in_flight;
  out.top_k = o.top_k;
  out.bootstrap.iterations = o.bootstrap_iterations;
  if (o.bootstrap_sample_size > 0) out.bootstrap.sample_size = o.bootstrap_sample_size;
  out.bootstrap.seed = o.seed;
  out.bootstrap.max_in_flight = o.max_in_flight;
  out.significance = o.significance == BM_SIGNIFICANCE_LITERAL ? blockmask::SignificanceMode::kLiteral
                                                               : blockmask::SignificanceMode::kCorrected;
  out.min_comask = o.min_comask;
  if (o.min_baseline >= 0.0) out.min_baseline = o.min_baseline;
  return out;
}

}  // namespace

extern "C" {

const char* bm_version(void) { return "0.1.0"; }

const char* bm_last_error(void) { return g_last_error.c_str(); }

void bm_string_free(char* s) { std::free(s); }

bm_status bm_corpus_load(const char* path, int clean, const char* drop_words_path, bm_corpus** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    blockmask::CorpusOptions options;
    options.clean = clean != 0;
    if (drop_words_path && *drop_words_path) {
      std::ifstream in(drop_words_path);
      if (!in) throw blockmask::InputError(std::string("cannot open word list '") + drop_words_path + "'");
      options.cleaning.drop_words = blockmask::load_word_list(in);
    }
    auto corpus = std::make_unique<bm_corpus>();
    corpus->docs = blockmask::read_corpus_file(path, options);
    *out = corpus.release();
  });
}

size_t bm_corpus_size(const bm_corpus* corpus) { return corpus ? corpus->docs.size() : 0; }

const char* bm_corpus_doc_id(const bm_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->docs.size()) return nullptr;
  return corpus->docs[index].id.c_str();
}

size_t bm_corpus_doc_tokens(const bm_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->docs.size()) return 0;
  return corpus->docs[index].tokens.size();
}

void bm_corpus_free(bm_corpus* corpus) { delete corpus; }

void bm_remote_options_init(bm_remote_options* options) {
  if (!options) return;
  options->batch_size = 32;
  options->timeout_ms = 30000;
  options->retries = 2;
}

bm_status bm_backend_open(const char* spec, const bm_remote_options* options, bm_backend** out) {
  return guarded([&] {
    require(spec != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    bm_remote_options defaults;
    bm_remote_options_init(&defaults);
    auto backend = std::make_unique<bm_backend>();
    backend->counted = std::make_shared<blockmask::CountingBackend>(open_backend(spec, options ? *options : defaults));
    *out = backend.release();
  });
}

size_t bm_backend_label_count(const bm_backend* backend) {
  return backend ? backend->counted->labels().size() : 0;
}

const char* bm_backend_label(const bm_backend* backend, size_t index) {
  if (!backend || index >= backend->counted->labels().size()) return nullptr;
  return backend->counted->labels()[index].c_str();
}

const char* bm_backend_mask_token(const bm_backend* backend) {
  return backend ? backend->counted->mask_token().c_str() : nullptr;
}

uint64_t bm_backend_call_count(const bm_backend* backend) { return backend ? backend->counted->count() : 0; }

void bm_backend_reset_count(bm_backend* backend) {
  if (backend) backend->counted->reset();
}

bm_status bm_backend_predict(bm_backend* backend, const char* const* tokens, size_t token_count,
                             double* probabilities) {
  return guarded([&] {
    require(backend != nullptr && probabilities != nullptr, "null argument");
    require(token_count == 0 || tokens != nullptr, "null token array");
    std::vector<blockmask::TokenSequence> batch(1);
    for (size_t i = 0; i < token_count; ++i) batch[0].emplace_back(tokens[i]);
    blockmask::SerializedDispatch dispatch(*backend->counted);
    const auto probs = dispatch.predict(batch);
    std::copy(probs.row(0).begin(), probs.row(0).end(), probabilities);
  });
}

void bm_backend_free(bm_backend* backend) { delete backend; }

void bm_msp_options_init(bm_msp_options* o) {
  if (!o) return;
  o->block_size = 10;
  o->mask_probability = 0.1;
  o->iterations = 0;
  o->expected_masks = 100.0;
  o->seed = 0;
  o->pairs = 0;
  o->min_comask = 30.0;
  o->top_k = 5;
  o->bootstrap_iterations = 1000;
  o->bootstrap_sample_size = 0;
  o->significance = BM_SIGNIFICANCE_CORRECTED;
  o->batch_size = 32;
  o->max_in_flight = 1;
  o->min_baseline = -1.0;
}

bm_status bm_explain(const bm_corpus* corpus, size_t doc_index, bm_backend* backend, const bm_msp_options* options,
                     bm_report** out) {
  return guarded([&] {
    require(backend != nullptr && options != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    const auto& doc = document_at(corpus, doc_index);
    auto result = blockmask::explain_msp(doc, *backend->counted, to_explain_options(*options));
    auto report = std::make_unique<bm_report>();
    report->report = std::move(result.report);
    report->record = std::move(result.record);
    *out = report.release();
  });
}

void bm_soc_options_init(bm_soc_options* o) {
  if (!o) return;
  o->block_size = 10;
  o->rounds = 100;
  o->radius = 10;
  o->seed = 0;
  o->top_k = 5;
  o->sampler = BM_SAMPLER_IDENTITY;
  o->max_in_flight = 1;
}

bm_status bm_soc(const bm_corpus* corpus, size_t doc_index, bm_backend* backend, const bm_soc_options* options,
                 bm_report** out) {
  return guarded([&] {
    require(backend != nullptr && options != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    const auto& doc = document_at(corpus, doc_index);
    blockmask::SocConfig cfg;
    cfg.block_size = options->block_size;
    cfg.samples_per_block = options->rounds;
    cfg.radius = options->radius;
    cfg.seed = options->seed;
    cfg.max_in_flight = options->max_in_flight;
    std::unique_ptr<blockmask::ContextSampler> sampler;
    std::string name;
    switch (options->sampler) {
      case BM_SAMPLER_IDENTITY:
        sampler = std::make_unique<blockmask::IdentitySampler>();
        name = "identity";
        break;
      case BM_SAMPLER_UNIFORM: {
        std::vector<std::string> vocabulary;
        std::unordered_set<std::string> seen;
        for (const auto& d : corpus->docs) {
          for (const auto& t : d.tokens) {
            if (seen.insert(t).second) vocabulary.push_back(t);
          }
        }
        sampler = blockmask::uniform_sampler(std::move(vocabulary), options->seed);
        name = "uniform";
        break;
      }
      case BM_SAMPLER_UNIGRAM:
        sampler = blockmask::unigram_sampler(corpus->docs, options->seed);
        name = "unigram";
        break;
      default:
        throw blockmask::InvalidArgument("unknown sampler kind");
    }
    auto report = std::make_unique<bm_report>();
    report->report = blockmask::explain_soc(doc, *backend->counted, *sampler, cfg, options->top_k, name);
    *out = report.release();
  });
}

bm_status bm_random(const bm_corpus* corpus, size_t doc_index, const bm_backend* backend, size_t block_size,
                    size_t top_k, uint64_t seed, bm_report** out) {
  return guarded([&] {
    require(backend != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    const auto& doc = document_at(corpus, doc_index);
    auto report = std::make_unique<bm_report>();
    report->report = blockmask::explain_random(doc, backend->counted->labels(), block_size, top_k, seed);
    *out = report.release();
  });
}

bm_status bm_report_parse(const char* json, bm_report** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw blockmask::InputError(std::string("report is not valid JSON: ") + e.what());
    }
    auto report = std::make_unique<bm_report>();
    report->report = blockmask::report_from_json(parsed);
    *out = report.release();
  });
}

bm_status bm_report_render(const bm_report* report, bm_format format, const char* labels, double threshold,
                           char** out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    std::string text;
    switch (format) {
      case BM_FORMAT_JSON:
        text = blockmask::report_to_json(report->report).dump(2) + "\n";
        break;
      case BM_FORMAT_TSV:
        text = blockmask::report_to_tsv(report->report);
        break;
      case BM_FORMAT_HTML: {
        blockmask::HtmlOptions options;
        if (labels) options.labels = split_commas(labels);
        options.threshold = threshold;
        text = blockmask::emit_html(report->report, options);
        break;
      }
      default:
        throw blockmask::InvalidArgument("unknown output format");
    }
    *out = duplicate(text);
  });
}

const char* bm_report_doc_id(const bm_report* report) {
  return report ? report->report.document_id.c_str() : nullptr;
}

bm_status bm_report_record_json(const bm_report* report, char** out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    if (!report->record) throw blockmask::InvalidArgument("report carries no perturbation record");
    *out = duplicate(blockmask::record_to_json(*report->record).dump() + "\n");
  });
}

void bm_report_free(bm_report* report) { delete report; }

bm_status bm_replay(const bm_corpus* corpus, const char* record_json, const bm_msp_options* options,
                    bm_report** out) {
  return guarded([&] {
    require(corpus != nullptr && record_json != nullptr && options != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(record_json);
    } catch (const nlohmann::json::exception& e) {
      throw blockmask::InputError(std::string("record is not valid JSON: ") + e.what());
    }
    auto record = blockmask::record_from_json(parsed);
    const blockmask::Document* doc = nullptr;
    for (const auto& d : corpus->docs) {
      if (d.id == record.document_id) doc = &d;
    }
    if (!doc) throw blockmask::InputError("corpus has no document '" + record.document_id + "'");
    auto opts = to_explain_options(*options);
    opts.msp.block_size = record.block_size;
    opts.msp.mask_probability = record.mask_probability;
    opts.msp.seed = record.seed;
    opts.bootstrap.seed = record.seed;
    opts.msp.iterations = record.iterations();
    opts.msp.expected_masks.reset();
    auto report = std::make_unique<bm_report>();
    report->report = blockmask::report_from_record(*doc, record, opts);
    report->record = std::move(record);
    *out = report.release();
  });
}

bm_status bm_evaluate(const char* annotations_path, const char* const* report_paths, size_t report_count,
                      const size_t* ks, size_t k_count, size_t bootstrap_iterations, uint64_t seed, char** out_json) {
  return guarded([&] {
    require(annotations_path != nullptr && out_json != nullptr, "null argument");
    require(report_count == 0 || report_paths != nullptr, "null report path array");
    *out_json = nullptr;
    const auto annotations = blockmask::eval::read_annotations_file(annotations_path);
    std::vector<blockmask::ImportanceReport> reports;
    for (size_t i = 0; i < report_count; ++i) {
      std::ifstream in(report_paths[i]);
      if (!in) throw blockmask::InputError(std::string("cannot open report '") + report_paths[i] + "'");
      try {
        reports.push_back(blockmask::report_from_json(nlohmann::json::parse(in)));
      } catch (const nlohmann::json::exception& e) {
        throw blockmask::InputError(std::string("report '") + report_paths[i] + "' is not valid JSON: " + e.what());
      }
    }
    blockmask::EvaluationOptions options;
    if (ks && k_count) options.ks.assign(ks, ks + k_count);
    options.bootstrap_iterations = bootstrap_iterations;
    options.seed = seed;
    *out_json = duplicate(blockmask::evaluate(annotations, reports, options).dump(2) + "\n");
  });
}

void bm_cost_options_init(bm_cost_options* o) {
  if (!o) return;
  o->expected_masks = 100.0;
  o->mask_probabilities = nullptr;
  o->mask_probability_count = 0;
  o->lengths = nullptr;
  o->length_count = 0;
  o->block_size = 10;
  o->include_single = 0;
  o->include_pair = 1;
  o->measure = 0;
}

bm_status bm_cost_table(const bm_cost_options* options, bm_format format, char** out) {
  return guarded([&] {
    using namespace blockmask::cost;
    require(options != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    GridOptions grid;
    grid.expected_masks = options->expected_masks;
    if (options->mask_probabilities && options->mask_probability_count)
      grid.mask_probabilities.assign(options->mask_probabilities,
                                     options->mask_probabilities + options->mask_probability_count);
    if (options->lengths && options->length_count)
      grid.lengths.assign(options->lengths, options->lengths + options->length_count);
    grid.block_size = options->block_size;
    grid.arities.clear();
    if (options->include_single) grid.arities.push_back(Arity::kSingle);
    if (options->include_pair) grid.arities.push_back(Arity::kPair);
    require(!grid.arities.empty(), "select at least one of single or pair");
    grid.measure = options->measure != 0;
    const auto rows = cost_grid(grid);

    auto opt_json = [](const std::optional<std::uint64_t>& v) {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    if (format == BM_FORMAT_JSON) {
      nlohmann::json table = nlohmann::json::array();
      for (const auto& row : rows) {
        nlohmann::json cells = nlohmann::json::array();
        for (size_t i = 0; i < grid.lengths.size(); ++i) {
          cells.push_back({{"length", grid.lengths[i]},
                           {"model", row.model[i]},
                           {"implementation", opt_json(row.implementation[i])},
                           {"measured", opt_json(row.measured[i])}});
        }
        table.push_back({{"algorithm", to_string(row.algorithm)},
                         {"arity", to_string(row.arity)},
                         {"mask_probability",
                          row.mask_probability ? nlohmann::json(*row.mask_probability) : nlohmann::json(nullptr)},
                         {"cells", std::move(cells)}});
      }
      nlohmann::json doc = {{"expected_masks", grid.expected_masks},
                            {"block_size", grid.block_size},
                            {"rows", std::move(table)}};
      *out = duplicate(doc.dump(2) + "\n");
      return;
    }
    if (format != BM_FORMAT_TSV) throw blockmask::InvalidArgument("cost table supports json and tsv");
    std::ostringstream tsv;
    tsv << "algorithm\tarity";
    for (const auto l : grid.lengths) tsv << "\t" << l << " tokens";
    for (const auto l : grid.lengths) tsv << "\timplementation@" << l;
    if (grid.measure) {
      for (const auto l : grid.lengths) tsv << "\tmeasured@" << l;
    }
    tsv << "\n";
    for (const auto& row : rows) {
      std::string name = row.algorithm == Algorithm::kMsp ? "MSP" : "SOC";
      if (row.mask_probability) {
        std::ostringstream p;
        p << *row.mask_probability;
        name += " (P=" + p.str() + ")";
      }
      tsv << name << "\t" << to_string(row.arity);
      for (const auto v : row.model) tsv << "\t" << v;
      for (const auto& v : row.implementation) tsv << "\t" << (v ? std::to_string(*v) : "-");
      if (grid.measure) {
        for (const auto& v : row.measured) tsv << "\t" << (v ? std::to_string(*v) : "-");
      }
      tsv << "\n";
    }
    *out = duplicate(tsv.str());
  });
}

}  // extern "C"
