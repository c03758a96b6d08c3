#include <doctest.h>

#include <cmath>
#include <string>

#include <json.hpp>

#include "blockmask/blockmask.h"

namespace {

const std::string kData = BM_TEST_DATA_DIR;

std::string take(char* s) {
  std::string out(s ? s : "");
  bm_string_free(s);
  return out;
}

struct Fixture {
  bm_corpus* corpus = nullptr;
  bm_backend* backend = nullptr;
  Fixture() {
    REQUIRE(bm_corpus_load((kData + "/corpus.jsonl").c_str(), 0, nullptr, &corpus) == BM_OK);
    REQUIRE(bm_backend_open(("builtin:" + kData + "/keyword_model.json").c_str(), nullptr, &backend) == BM_OK);
  }
  ~Fixture() {
    bm_backend_free(backend);
    bm_corpus_free(corpus);
  }
};

bm_msp_options quick_msp() {
  bm_msp_options o;
  bm_msp_options_init(&o);
  o.iterations = 300;
  o.bootstrap_iterations = 200;
  o.seed = 42;
  return o;
}

}  // namespace

TEST_CASE("defaults follow the paper settings") {
  bm_msp_options o;
  bm_msp_options_init(&o);
  CHECK(o.block_size == 10);
  CHECK(o.mask_probability == 0.1);
  CHECK(o.expected_masks == 100.0);
  CHECK(o.top_k == 5);
  CHECK(o.significance == BM_SIGNIFICANCE_CORRECTED);
  bm_soc_options s;
  bm_soc_options_init(&s);
  CHECK(s.rounds == 100);
  CHECK(s.radius == 10);
  CHECK(std::string(bm_version()).size() > 0);
}

TEST_CASE("corpus and backend handles") {
  Fixture f;
  CHECK(bm_corpus_size(f.corpus) == 3);
  CHECK(std::string(bm_corpus_doc_id(f.corpus, 2)) == "note 3/x");
  CHECK(bm_corpus_doc_tokens(f.corpus, 0) == 60);
  CHECK(bm_backend_label_count(f.backend) == 2);
  CHECK(std::string(bm_backend_label(f.backend, 1)) == "chf");
  CHECK(std::string(bm_backend_mask_token(f.backend)) == "[MASK]");

  const char* tokens[] = {"on", "amiodarone"};
  double probs[2];
  REQUIRE(bm_backend_predict(f.backend, tokens, 2, probs) == BM_OK);
  CHECK(probs[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(bm_backend_call_count(f.backend) == 1);
  bm_backend_reset_count(f.backend);
  CHECK(bm_backend_call_count(f.backend) == 0);
}

TEST_CASE("explain performs N+1 calls and round-trips through JSON") {
  Fixture f;
  const auto opts = quick_msp();
  bm_report* report = nullptr;
  REQUIRE(bm_explain(f.corpus, 0, f.backend, &opts, &report) == BM_OK);
  CHECK(bm_backend_call_count(f.backend) == 301);
  CHECK(std::string(bm_report_doc_id(report)) == "note-1");

  char* json = nullptr;
  REQUIRE(bm_report_render(report, BM_FORMAT_JSON, nullptr, 0.0, &json) == BM_OK);
  const std::string text = take(json);
  const auto parsed = nlohmann::json::parse(text);
  CHECK(parsed["labels"][0]["entries"][0]["block_index"] == 2);  // amiodarone at token 23
  CHECK(parsed["labels"][1]["entries"][0]["block_index"] == 4);  // edema at token 47

  bm_report* back = nullptr;
  REQUIRE(bm_report_parse(text.c_str(), &back) == BM_OK);
  REQUIRE(bm_report_render(back, BM_FORMAT_JSON, nullptr, 0.0, &json) == BM_OK);
  CHECK(take(json) == text);

  REQUIRE(bm_report_render(report, BM_FORMAT_HTML, "afib", 0.0, &json) == BM_OK);
  CHECK(take(json).find("<html") != std::string::npos);

  // replay from the stored record reproduces the report without calls
  char* record = nullptr;
  REQUIRE(bm_report_record_json(report, &record) == BM_OK);
  const std::string record_text = take(record);
  CHECK(bm_report_record_json(back, &record) == BM_ERR_INVALID_ARGUMENT);
  bm_report* replayed = nullptr;
  REQUIRE(bm_replay(f.corpus, record_text.c_str(), &opts, &replayed) == BM_OK);
  REQUIRE(bm_report_render(replayed, BM_FORMAT_JSON, nullptr, 0.0, &json) == BM_OK);
  CHECK(take(json) == text);

  bm_report_free(replayed);
  bm_report_free(back);
  bm_report_free(report);
}

TEST_CASE("SOC and random through the C API") {
  Fixture f;
  bm_soc_options s;
  bm_soc_options_init(&s);
  s.rounds = 2;
  bm_report* report = nullptr;
  REQUIRE(bm_soc(f.corpus, 1, f.backend, &s, &report) == BM_OK);
  CHECK(bm_backend_call_count(f.backend) == 2 * 2 * 6);
  char* json = nullptr;
  REQUIRE(bm_report_render(report, BM_FORMAT_JSON, nullptr, 0.0, &json) == BM_OK);
  const auto parsed = nlohmann::json::parse(take(json));
  CHECK(parsed["labels"][1]["entries"][0]["block_index"] == 0);  // furosemide at token 5
  bm_report_free(report);

  bm_backend_reset_count(f.backend);
  REQUIRE(bm_random(f.corpus, 0, f.backend, 10, 5, 7, &report) == BM_OK);
  CHECK(bm_backend_call_count(f.backend) == 0);
  bm_report_free(report);
  CHECK(bm_random(f.corpus, 0, f.backend, 10, 7, 7, &report) == BM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(bm_last_error()).find("exceeds") != std::string::npos);
}

TEST_CASE("status codes and last error") {
  bm_corpus* corpus = nullptr;
  CHECK(bm_corpus_load((kData + "/missing.jsonl").c_str(), 0, nullptr, &corpus) == BM_ERR_INPUT);
  CHECK(std::string(bm_last_error()).find("missing.jsonl") != std::string::npos);
  CHECK(bm_corpus_load((kData + "/duplicate_ids.jsonl").c_str(), 0, nullptr, &corpus) == BM_ERR_INPUT);
  CHECK(std::string(bm_last_error()).find("line 2") != std::string::npos);
  CHECK(bm_corpus_load(nullptr, 0, nullptr, &corpus) == BM_ERR_INVALID_ARGUMENT);

  bm_backend* backend = nullptr;
  CHECK(bm_backend_open("nonsense:x", nullptr, &backend) == BM_ERR_INVALID_ARGUMENT);
  CHECK(bm_backend_open("builtin:/nonexistent.json", nullptr, &backend) == BM_ERR_INPUT);
  bm_remote_options remote;
  bm_remote_options_init(&remote);
  remote.retries = 0;
  remote.timeout_ms = 300;
  CHECK(bm_backend_open("remote:http://127.0.0.1:1", &remote, &backend) == BM_ERR_BACKEND);

  REQUIRE(bm_backend_open("constant:0.5:a,b", nullptr, &backend) == BM_OK);
  REQUIRE(bm_corpus_load((kData + "/corpus.jsonl").c_str(), 0, nullptr, &corpus) == BM_OK);
  auto opts = quick_msp();
  opts.mask_probability = 1.5;
  bm_report* report = nullptr;
  CHECK(bm_explain(corpus, 0, backend, &opts, &report) == BM_ERR_INVALID_ARGUMENT);
  CHECK(report == nullptr);
  opts = quick_msp();
  CHECK(bm_explain(corpus, 99, backend, &opts, &report) == BM_ERR_INVALID_ARGUMENT);
  CHECK(bm_report_parse("{\"labels\": 3}", &report) == BM_ERR_INPUT);
  bm_corpus_free(corpus);
  bm_backend_free(backend);
}

TEST_CASE("cost table") {
  bm_cost_options o;
  bm_cost_options_init(&o);
  char* out = nullptr;
  REQUIRE(bm_cost_table(&o, BM_FORMAT_JSON, &out) == BM_OK);
  const auto rows = nlohmann::json::parse(take(out));
  const std::string dumped = rows.dump();
  CHECK(dumped.find("10000000000") != std::string::npos);
  CHECK(dumped.find("100000000") != std::string::npos);
  REQUIRE(bm_cost_table(&o, BM_FORMAT_TSV, &out) == BM_OK);
  CHECK(take(out).find("400") != std::string::npos);
  CHECK(bm_cost_table(&o, BM_FORMAT_HTML, &out) == BM_ERR_INVALID_ARGUMENT);
}
