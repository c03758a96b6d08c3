// blockmask: command-line front end over the libblockmask C API.
//
//   blockmask explain        MSP block importances with bootstrap p-values
//   blockmask explain-pairs  MSP plus pairwise interactions
//   blockmask soc            sampling-and-occlusion baseline
//   blockmask random         random block selection baseline
//   blockmask evaluate       precision@K, MRR@K, Welch tests, kappa from annotations
//   blockmask cost           classifier-call grid for MSP and SOC
//   blockmask render         re-render a JSON report as html/tsv/json
//   blockmask replay         rebuild an MSP report from a saved perturbation record

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "blockmask/blockmask.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;
constexpr int kExitProtocol = 4;
constexpr int kExitInternal = 1;

int exit_code(bm_status status) {
  switch (status) {
    case BM_OK: return kExitOk;
    case BM_ERR_INPUT:
    case BM_ERR_INVALID_ARGUMENT: return kExitInput;
    case BM_ERR_BACKEND: return kExitBackend;
    case BM_ERR_PROTOCOL: return kExitProtocol;
    default: return kExitInternal;
  }
}

struct CliFailure {
  int code;
  std::string message;
};

[[noreturn]] void throw_status(bm_status status, const std::string& context) {
  std::string message = context.empty() ? bm_last_error() : context + ": " + bm_last_error();
  throw CliFailure{exit_code(status), message};
}

void check(bm_status status, const std::string& context = {}) {
  if (status != BM_OK) throw_status(status, context);
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using CorpusPtr = std::unique_ptr<bm_corpus, Deleter<bm_corpus, bm_corpus_free>>;
using BackendPtr = std::unique_ptr<bm_backend, Deleter<bm_backend, bm_backend_free>>;
using ReportPtr = std::unique_ptr<bm_report, Deleter<bm_report, bm_report_free>>;

std::string take_string(char* s) {
  std::string out(s ? s : "");
  bm_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitInput, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliFailure{kExitInput, "cannot write '" + path.string() + "'"};
  out << content;
  if (!out) throw CliFailure{kExitInput, "write to '" + path.string() + "' failed"};
}

std::string sanitize(const std::string& id) {
  std::string out;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

bm_format parse_format(const std::string& s) {
  if (s == "json") return BM_FORMAT_JSON;
  if (s == "html") return BM_FORMAT_HTML;
  return BM_FORMAT_TSV;
}

const char* extension(bm_format f) {
  switch (f) {
    case BM_FORMAT_HTML: return "html";
    case BM_FORMAT_TSV: return "tsv";
    default: return "json";
  }
}

// Options shared by the document-processing subcommands.
struct CommonOptions {
  std::string corpus;
  std::string backend;
  bool clean = false;
  std::string drop_words;
  std::string format = "json";
  std::string out = "-";
  std::size_t jobs = 1;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  std::size_t block_size = 10;
  std::size_t remote_batch = 32;
  std::uint32_t timeout_ms = 30000;
  std::uint32_t retries = 2;
  std::string html_labels;
  double html_threshold = 0.0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_backend) {
  cmd->add_option("--corpus", o.corpus, "JSON Lines corpus ({\"id\",\"text\"} or {\"id\",\"tokens\"})")
      ->required()
      ->check(CLI::ExistingFile);
  auto* backend = cmd->add_option("--backend", o.backend,
                                  "builtin:<weights.json> | remote[:<url>] | constant:<p>:<labels>");
  if (needs_backend) backend->required();
  cmd->add_flag("--clean", o.clean, "apply clinical text cleaning to text documents");
  cmd->add_option("--drop-words", o.drop_words, "word list removed during cleaning (names, cities, states)");
  cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "html", "tsv"}));
  cmd->add_option("--out", o.out, "output directory, or - for stdout");
  cmd->add_option("--jobs", o.jobs, "documents processed concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--top-k", o.top_k, "blocks reported per label")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--block-size", o.block_size, "tokens per block")->check(CLI::PositiveNumber);
  cmd->add_option("--remote-batch", o.remote_batch, "instances per remote request")->check(CLI::PositiveNumber);
  cmd->add_option("--timeout-ms", o.timeout_ms, "remote request timeout");
  cmd->add_option("--retries", o.retries, "remote transport retries");
  cmd->add_option("--html-labels", o.html_labels, "comma-separated labels to render (html)");
  cmd->add_option("--html-threshold", o.html_threshold, "minimum score highlighted (html)");
}

CorpusPtr load_corpus(const CommonOptions& o) {
  bm_corpus* corpus = nullptr;
  check(bm_corpus_load(o.corpus.c_str(), o.clean ? 1 : 0, o.drop_words.empty() ? nullptr : o.drop_words.c_str(),
                       &corpus),
        "corpus");
  return CorpusPtr(corpus);
}

BackendPtr open_backend(const CommonOptions& o) {
  std::string spec = o.backend;
  if (spec.empty()) spec = "remote";
  bm_remote_options remote;
  bm_remote_options_init(&remote);
  remote.batch_size = o.remote_batch;
  remote.timeout_ms = o.timeout_ms;
  remote.retries = o.retries;
  bm_backend* backend = nullptr;
  check(bm_backend_open(spec.c_str(), &remote, &backend), "backend");
  return BackendPtr(backend);
}

std::string render(const bm_report* report, const CommonOptions& o) {
  char* text = nullptr;
  check(bm_report_render(report, parse_format(o.format), o.html_labels.empty() ? nullptr : o.html_labels.c_str(),
                         o.html_threshold, &text),
        "render");
  return take_string(text);
}

using ProduceReport = std::function<bm_status(std::size_t, bm_report**)>;

// Runs `produce` for every document on up to `jobs` threads and writes one
// output per document. The failure with the lowest document index wins.
int process_corpus(const bm_corpus* corpus, const CommonOptions& o, const std::string& suffix,
                   const ProduceReport& produce, bool save_records = false) {
  const std::size_t n = bm_corpus_size(corpus);
  const bool to_stdout = o.out == "-";
  if (!to_stdout) fs::create_directories(o.out);

  std::map<std::string, std::string> seen_names;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = sanitize(bm_corpus_doc_id(corpus, i));
    if (auto [it, inserted] = seen_names.emplace(name, bm_corpus_doc_id(corpus, i)); !inserted)
      throw CliFailure{kExitInput, "documents '" + it->second + "' and '" + bm_corpus_doc_id(corpus, i) +
                                       "' map to the same output file name"};
  }

  std::vector<std::string> outputs(n);
  std::vector<std::optional<CliFailure>> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      const std::string id = bm_corpus_doc_id(corpus, i);
      try {
        bm_report* raw = nullptr;
        const bm_status status = produce(i, &raw);
        if (status != BM_OK) throw_status(status, "document '" + id + "'");
        ReportPtr report(raw);
        const std::string text = render(report.get(), o);
        if (to_stdout) {
          outputs[i] = text;
        } else {
          const std::string stem = sanitize(id) + "." + suffix;
          write_file(fs::path(o.out) / (stem + "." + extension(parse_format(o.format))), text);
          if (save_records) {
            char* record = nullptr;
            check(bm_report_record_json(report.get(), &record), "document '" + id + "'");
            write_file(fs::path(o.out) / (stem + ".record.json"), take_string(record));
          }
        }
      } catch (const CliFailure& f) {
        failures[i] = f;
      } catch (const std::exception& e) {
        failures[i] = CliFailure{kExitInternal, "document '" + id + "': " + e.what()};
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(o.jobs, 1, std::max<std::size_t>(n, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (to_stdout) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!failures[i]) std::cout << outputs[i];
    }
  }
  for (const auto& f : failures) {
    if (f) throw *f;
  }
  return kExitOk;
}

struct MspCliOptions {
  double mask_prob = 0.1;
  std::optional<std::uint64_t> iterations;
  std::optional<double> expected_masks;
  std::size_t bootstrap_iters = 1000;
  std::size_t bootstrap_sample = 0;
  std::string significance = "corrected";
  std::size_t batch_size = 32;
  std::size_t in_flight = 1;
  double min_comask = 30.0;
  std::optional<double> min_baseline;
  bool save_records = false;
};

void add_msp(CLI::App* cmd, MspCliOptions& m, bool pairs) {
  cmd->add_option("--mask-prob", m.mask_prob, "probability P of masking each block")
      ->check(CLI::Range(0.0, 1.0));
  auto* iters = cmd->add_option("--iterations", m.iterations, "number of masked samples N");
  auto* expected = cmd->add_option("--expected-masks", m.expected_masks, "expected masks per block J (N = J/P)");
  iters->excludes(expected);
  expected->excludes(iters);
  cmd->add_option("--bootstrap-iters", m.bootstrap_iters, "bootstrap iterations for p-values");
  cmd->add_option("--bootstrap-sample", m.bootstrap_sample, "bootstrap sample size (0: block masked count)");
  cmd->add_option("--significance-mode", m.significance, "p-value convention")
      ->check(CLI::IsMember({"corrected", "literal"}));
  cmd->add_option("--batch-size", m.batch_size, "masked variants per classifier call")->check(CLI::PositiveNumber);
  cmd->add_option("--in-flight", m.in_flight, "concurrent classifier calls per document")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-baseline", m.min_baseline, "only report labels whose baseline probability reaches this");
  cmd->add_flag("--save-records", m.save_records, "also write <doc>.msp.record.json perturbation records");
  if (pairs) cmd->add_option("--min-comask", m.min_comask, "required N*P^2 for pair statistics");
}

bm_msp_options msp_options(const CommonOptions& o, const MspCliOptions& m, bool pairs) {
  bm_msp_options opts;
  bm_msp_options_init(&opts);
  opts.block_size = o.block_size;
  opts.mask_probability = m.mask_prob;
  if (m.iterations) {
    if (*m.iterations == 0) throw CliFailure{kExitInput, "--iterations must be at least 1"};
    opts.iterations = *m.iterations;
  } else {
    opts.expected_masks = m.expected_masks.value_or(100.0);
  }
  opts.seed = o.seed;
  opts.pairs = pairs ? 1 : 0;
  opts.min_comask = m.min_comask;
  opts.top_k = o.top_k;
  opts.bootstrap_iterations = m.bootstrap_iters;
  opts.bootstrap_sample_size = m.bootstrap_sample;
  opts.significance = m.significance == "literal" ? BM_SIGNIFICANCE_LITERAL : BM_SIGNIFICANCE_CORRECTED;
  opts.batch_size = m.batch_size;
  opts.max_in_flight = m.in_flight;
  opts.min_baseline = m.min_baseline.value_or(-1.0);
  return opts;
}

std::vector<std::string> report_files(const std::string& dir) {
  std::vector<std::string> files;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw CliFailure{kExitInput, "reports directory '" + dir + "' not found"};
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    if (name.size() > 12 && name.ends_with(".record.json")) continue;
    files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw CliFailure{kExitInput, "expected a comma-separated list of positive integers, got '" + s + "'"};
    }
  }
  if (out.empty()) throw CliFailure{kExitInput, "empty list '" + s + "'"};
  return out;
}

void emit(const std::string& out, const std::string& text) {
  if (out == "-" || out.empty()) {
    std::cout << text;
  } else {
    const fs::path p(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_file(p, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blockmask: masked-sampling explanations for text classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bm_version());

  CommonOptions common;
  MspCliOptions msp;

  auto* explain = app.add_subcommand("explain", "rank text blocks by masked-sampling importance");
  add_common(explain, common, false);
  add_msp(explain, msp, false);

  CommonOptions pairs_common;
  MspCliOptions pairs_msp;
  auto* explain_pairs = app.add_subcommand("explain-pairs", "masked sampling with pairwise interactions");
  add_common(explain_pairs, pairs_common, false);
  add_msp(explain_pairs, pairs_msp, true);

  CommonOptions soc_common;
  std::size_t soc_rounds = 100;
  std::size_t soc_radius = 10;
  std::size_t soc_in_flight = 1;
  std::string soc_sampler = "identity";
  auto* soc = app.add_subcommand("soc", "sampling-and-occlusion baseline");
  add_common(soc, soc_common, false);
  soc->add_option("--rounds", soc_rounds, "sampled contexts per block J")->check(CLI::PositiveNumber);
  soc->add_option("--radius", soc_radius, "context radius in tokens");
  soc->add_option("--sampler", soc_sampler, "context sampler")
      ->check(CLI::IsMember({"identity", "uniform", "unigram"}));
  soc->add_option("--in-flight", soc_in_flight, "concurrent classifier calls per document")
      ->check(CLI::PositiveNumber);

  CommonOptions rnd_common;
  auto* random = app.add_subcommand("random", "random block selection baseline");
  add_common(random, rnd_common, false);
  random->get_option("--top-k")->required();
  random->get_option("--seed")->required();

  std::string annotations;
  std::string reports_dir;
  std::string k_list = "1,2,3,4,5";
  std::size_t eval_boot = 1000;
  std::uint64_t eval_seed = 0;
  std::string eval_out = "-";
  auto* evaluate = app.add_subcommand("evaluate", "precision@K, MRR@K, Welch tests and kappa");
  evaluate->add_option("--annotations", annotations, "CSV doc_id,label,block_index,algorithm,reviewer,informative")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--reports", reports_dir, "directory of JSON reports")->required();
  evaluate->add_option("--k", k_list, "comma-separated K values");
  evaluate->add_option("--bootstrap-iters", eval_boot, "bootstrap iterations for CIs")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", eval_seed, "bootstrap seed");
  evaluate->add_option("--out", eval_out, "metrics JSON path, or - for stdout");

  double cost_j = 100.0;
  std::vector<double> cost_probs{0.1, 0.5};
  std::vector<std::uint64_t> cost_lengths{1000, 10000};
  std::size_t cost_block = 10;
  std::string cost_arity = "pair";
  bool cost_measure = false;
  std::string cost_format = "tsv";
  std::string cost_out = "-";
  auto* cost = app.add_subcommand("cost", "classifier-call counts for MSP and SOC");
  cost->add_option("--expected-masks", cost_j, "J: expected masks per block (MSP) / rounds (SOC)");
  cost->add_option("--mask-probs", cost_probs, "mask probabilities")->delimiter(',');
  cost->add_option("--lengths", cost_lengths, "document lengths in tokens")->delimiter(',');
  cost->add_option("--block-size", cost_block, "tokens per block")->check(CLI::PositiveNumber);
  cost->add_option("--arity", cost_arity, "single, pair or both")->check(CLI::IsMember({"single", "pair", "both"}));
  cost->add_flag("--measure", cost_measure, "count calls of real single-mode runs on synthetic documents");
  cost->add_option("--format", cost_format, "output format")->check(CLI::IsMember({"tsv", "json"}));
  cost->add_option("--out", cost_out, "output path, or - for stdout");

  std::string render_report;
  std::string render_format = "html";
  std::string render_labels;
  double render_threshold = 0.0;
  std::string render_out = "-";
  auto* render_cmd = app.add_subcommand("render", "render a JSON report as html, tsv or json");
  render_cmd->add_option("--report", render_report, "report JSON")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--format", render_format, "output format")->check(CLI::IsMember({"json", "html", "tsv"}));
  render_cmd->add_option("--labels", render_labels, "comma-separated labels (html)");
  render_cmd->add_option("--threshold", render_threshold, "minimum score highlighted (html)");
  render_cmd->add_option("--out", render_out, "output path, or - for stdout");

  CommonOptions replay_common;
  MspCliOptions replay_msp;
  std::string replay_record;
  bool replay_pairs = false;
  auto* replay = app.add_subcommand("replay", "rebuild an MSP report from a perturbation record");
  replay->add_option("--corpus", replay_common.corpus, "corpus the record was produced from")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_flag("--clean", replay_common.clean, "apply clinical text cleaning (as in the original run)");
  replay->add_option("--drop-words", replay_common.drop_words, "word list used during cleaning");
  replay->add_option("--record", replay_record, "perturbation record JSON")->required()->check(CLI::ExistingFile);
  replay->add_option("--top-k", replay_common.top_k, "blocks reported per label")->check(CLI::PositiveNumber);
  replay->add_option("--bootstrap-iters", replay_msp.bootstrap_iters, "bootstrap iterations");
  replay->add_option("--bootstrap-sample", replay_msp.bootstrap_sample, "bootstrap sample size");
  replay->add_option("--significance-mode", replay_msp.significance, "p-value convention")
      ->check(CLI::IsMember({"corrected", "literal"}));
  replay->add_flag("--pairs", replay_pairs, "include pair interactions");
  replay->add_option("--min-comask", replay_msp.min_comask, "required N*P^2 for pair statistics");
  replay->add_option("--format", replay_common.format, "output format")->check(CLI::IsMember({"json", "html", "tsv"}));
  replay->add_option("--out", replay_common.out, "output path, or - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (explain->parsed() || explain_pairs->parsed()) {
      const bool pairs = explain_pairs->parsed();
      auto& o = pairs ? pairs_common : common;
      auto& m = pairs ? pairs_msp : msp;
      const auto opts = msp_options(o, m, pairs);
      auto corpus = load_corpus(o);
      auto backend = open_backend(o);
      return process_corpus(
          corpus.get(), o, pairs ? "msp_pairs" : "msp",
          [&](std::size_t i, bm_report** out) { return bm_explain(corpus.get(), i, backend.get(), &opts, out); },
          m.save_records);
    }
    if (soc->parsed()) {
      bm_soc_options opts;
      bm_soc_options_init(&opts);
      opts.block_size = soc_common.block_size;
      opts.rounds = soc_rounds;
      opts.radius = soc_radius;
      opts.seed = soc_common.seed;
      opts.top_k = soc_common.top_k;
      opts.max_in_flight = soc_in_flight;
      opts.sampler = soc_sampler == "uniform"   ? BM_SAMPLER_UNIFORM
                     : soc_sampler == "unigram" ? BM_SAMPLER_UNIGRAM
                                                : BM_SAMPLER_IDENTITY;
      auto corpus = load_corpus(soc_common);
      auto backend = open_backend(soc_common);
      return process_corpus(corpus.get(), soc_common, "soc", [&](std::size_t i, bm_report** out) {
        return bm_soc(corpus.get(), i, backend.get(), &opts, out);
      });
    }
    if (random->parsed()) {
      auto corpus = load_corpus(rnd_common);
      auto backend = open_backend(rnd_common);
      return process_corpus(corpus.get(), rnd_common, "random", [&](std::size_t i, bm_report** out) {
        return bm_random(corpus.get(), i, backend.get(), rnd_common.block_size, rnd_common.top_k, rnd_common.seed, out);
      });
    }
    if (evaluate->parsed()) {
      const auto ks = parse_size_list(k_list);
      const auto files = report_files(reports_dir);
      std::vector<const char*> paths;
      for (const auto& f : files) paths.push_back(f.c_str());
      char* json = nullptr;
      check(bm_evaluate(annotations.c_str(), paths.data(), paths.size(), ks.data(), ks.size(), eval_boot, eval_seed,
                        &json),
            "evaluate");
      emit(eval_out, take_string(json));
      return kExitOk;
    }
    if (cost->parsed()) {
      bm_cost_options opts;
      bm_cost_options_init(&opts);
      opts.expected_masks = cost_j;
      opts.mask_probabilities = cost_probs.data();
      opts.mask_probability_count = cost_probs.size();
      opts.lengths = cost_lengths.data();
      opts.length_count = cost_lengths.size();
      opts.block_size = cost_block;
      opts.include_single = cost_arity != "pair";
      opts.include_pair = cost_arity != "single";
      opts.measure = cost_measure;
      char* text = nullptr;
      check(bm_cost_table(&opts, cost_format == "json" ? BM_FORMAT_JSON : BM_FORMAT_TSV, &text), "cost");
      emit(cost_out, take_string(text));
      return kExitOk;
    }
    if (render_cmd->parsed()) {
      const std::string json = read_file(render_report);
      bm_report* raw = nullptr;
      check(bm_report_parse(json.c_str(), &raw), render_report);
      ReportPtr report(raw);
      char* text = nullptr;
      check(bm_report_render(report.get(), parse_format(render_format),
                             render_labels.empty() ? nullptr : render_labels.c_str(), render_threshold, &text),
            "render");
      emit(render_out, take_string(text));
      return kExitOk;
    }
    if (replay->parsed()) {
      auto corpus = load_corpus(replay_common);
      bm_msp_options opts;
      bm_msp_options_init(&opts);
      opts.top_k = replay_common.top_k;
      opts.bootstrap_iterations = replay_msp.bootstrap_iters;
      opts.bootstrap_sample_size = replay_msp.bootstrap_sample;
      opts.significance =
          replay_msp.significance == "literal" ? BM_SIGNIFICANCE_LITERAL : BM_SIGNIFICANCE_CORRECTED;
      opts.pairs = replay_pairs ? 1 : 0;
      opts.min_comask = replay_msp.min_comask;
      const std::string record = read_file(replay_record);
      bm_report* raw = nullptr;
      check(bm_replay(corpus.get(), record.c_str(), &opts, &raw), "replay");
      ReportPtr report(raw);
      emit(replay_common.out, render(report.get(), replay_common));
      return kExitOk;
    }
  } catch (const CliFailure& f) {
    std::cerr << "blockmask: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "blockmask: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
