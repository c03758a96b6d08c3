/*
 * C interface to the blockmask explanation engine.
 *
 * Objects are opaque handles created by *_open/*_load/*_create functions
 * and released by the matching *_free. Every fallible function returns a
 * bm_status; on failure bm_last_error() describes the problem for the
 * calling thread. Strings returned through char** are owned by the caller
 * and released with bm_string_free.
 */
#ifndef BLOCKMASK_H
#define BLOCKMASK_H

#include <stddef.h>
#include <stdint.h>

#if defined(BM_BUILDING_LIBRARY)
#define BM_API __attribute__((visibility("default")))
#else
#define BM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as CLI exit codes. */
typedef enum bm_status {
  BM_OK = 0,
  BM_ERR_INPUT = 2,
  BM_ERR_BACKEND = 3,
  BM_ERR_PROTOCOL = 4,
  BM_ERR_INVALID_ARGUMENT = 5,
  BM_ERR_INTERNAL = 70
} bm_status;

typedef enum bm_format { BM_FORMAT_JSON = 0, BM_FORMAT_HTML = 1, BM_FORMAT_TSV = 2 } bm_format;

typedef enum bm_significance_mode { BM_SIGNIFICANCE_CORRECTED = 0, BM_SIGNIFICANCE_LITERAL = 1 } bm_significance_mode;

typedef enum bm_sampler_kind {
  BM_SAMPLER_IDENTITY = 0,
  BM_SAMPLER_UNIFORM = 1, /* uniform over the corpus vocabulary */
  BM_SAMPLER_UNIGRAM = 2  /* corpus unigram frequencies */
} bm_sampler_kind;

typedef struct bm_corpus bm_corpus;
typedef struct bm_backend bm_backend;
typedef struct bm_report bm_report;

BM_API const char* bm_version(void);
BM_API const char* bm_last_error(void);
BM_API void bm_string_free(char* s);

/* ---- corpus ------------------------------------------------------------ */

/* JSON Lines corpus. clean != 0 applies clinical text cleaning to "text"
 * documents; drop_words_path (nullable) names a word list to remove. */
BM_API bm_status bm_corpus_load(const char* path, int clean, const char* drop_words_path, bm_corpus** out);
BM_API size_t bm_corpus_size(const bm_corpus* corpus);
BM_API const char* bm_corpus_doc_id(const bm_corpus* corpus, size_t index);
BM_API size_t bm_corpus_doc_tokens(const bm_corpus* corpus, size_t index);
BM_API void bm_corpus_free(bm_corpus* corpus);

/* ---- backends ---------------------------------------------------------- */

typedef struct bm_remote_options {
  size_t batch_size;   /* default 32 */
  uint32_t timeout_ms; /* default 30000 */
  uint32_t retries;    /* default 2 */
} bm_remote_options;

BM_API void bm_remote_options_init(bm_remote_options* options);

/* spec: "builtin:<weights.json>", "remote:<url>", "remote" (url from
 * BLOCKMASK_BACKEND_URL) or "constant:<p>:<label>[,<label>...]".
 * options may be NULL. Every backend counts its evaluations. */
BM_API bm_status bm_backend_open(const char* spec, const bm_remote_options* options, bm_backend** out);
BM_API size_t bm_backend_label_count(const bm_backend* backend);
BM_API const char* bm_backend_label(const bm_backend* backend, size_t index);
BM_API const char* bm_backend_mask_token(const bm_backend* backend);
/* Single-sequence evaluations performed since open or the last reset. */
BM_API uint64_t bm_backend_call_count(const bm_backend* backend);
BM_API void bm_backend_reset_count(bm_backend* backend);
/* probabilities must hold bm_backend_label_count() doubles. */
BM_API bm_status bm_backend_predict(bm_backend* backend, const char* const* tokens, size_t token_count,
                                    double* probabilities);
BM_API void bm_backend_free(bm_backend* backend);

/* ---- explanation ------------------------------------------------------- */

typedef struct bm_msp_options {
  size_t block_size;        /* B, default 10 */
  double mask_probability;  /* P, default 0.1 */
  uint64_t iterations;      /* N; 0 means derive from expected_masks */
  double expected_masks;    /* J, default 100; used when iterations == 0 */
  uint64_t seed;
  int pairs;                /* non-zero: pair interactions */
  double min_comask;        /* default 30 */
  size_t top_k;             /* default 5 */
  size_t bootstrap_iterations;  /* default 1000 */
  size_t bootstrap_sample_size; /* 0: the block's masked count */
  bm_significance_mode significance;
  size_t batch_size;        /* masked variants per backend call, default 32 */
  size_t max_in_flight;     /* concurrent backend calls, default 1 */
  double min_baseline;      /* negative: report every label */
} bm_msp_options;

BM_API void bm_msp_options_init(bm_msp_options* options);

BM_API bm_status bm_explain(const bm_corpus* corpus, size_t doc_index, bm_backend* backend,
                            const bm_msp_options* options, bm_report** out);

typedef struct bm_soc_options {
  size_t block_size; /* default 10 */
  size_t rounds;     /* J, default 100 */
  size_t radius;     /* tokens, default 10 */
  uint64_t seed;
  size_t top_k;      /* default 5 */
  bm_sampler_kind sampler;
  size_t max_in_flight;
} bm_soc_options;

BM_API void bm_soc_options_init(bm_soc_options* options);
BM_API bm_status bm_soc(const bm_corpus* corpus, size_t doc_index, bm_backend* backend, const bm_soc_options* options,
                        bm_report** out);

/* Labels come from the backend; the backend is never called. */
BM_API bm_status bm_random(const bm_corpus* corpus, size_t doc_index, const bm_backend* backend, size_t block_size,
                           size_t top_k, uint64_t seed, bm_report** out);

/* ---- reports ----------------------------------------------------------- */

BM_API bm_status bm_report_parse(const char* json, bm_report** out);
/* For BM_FORMAT_HTML, labels (comma separated, nullable) selects sections
 * and threshold is the minimum score to highlight; ignored otherwise. */
BM_API bm_status bm_report_render(const bm_report* report, bm_format format, const char* labels, double threshold,
                                  char** out);
BM_API const char* bm_report_doc_id(const bm_report* report);
/* Perturbation record JSON, available for MSP reports built in-process. */
BM_API bm_status bm_report_record_json(const bm_report* report, char** out);
BM_API void bm_report_free(bm_report* report);

/* Recomputes an MSP report from a stored record (no classifier calls).
 * Sampling settings and the bootstrap seed come from the record; options->seed
 * and the sampling fields are ignored. */
BM_API bm_status bm_replay(const bm_corpus* corpus, const char* record_json, const bm_msp_options* options,
                           bm_report** out);

/* ---- evaluation and cost ----------------------------------------------- */

BM_API bm_status bm_evaluate(const char* annotations_path, const char* const* report_paths, size_t report_count,
                             const size_t* ks, size_t k_count, size_t bootstrap_iterations, uint64_t seed,
                             char** out_json);

typedef struct bm_cost_options {
  double expected_masks;          /* J, default 100 */
  const double* mask_probabilities; /* default {0.1, 0.5} when NULL */
  size_t mask_probability_count;
  const uint64_t* lengths;        /* default {1000, 10000} when NULL */
  size_t length_count;
  size_t block_size;              /* default 10 */
  int include_single;             /* default 0 */
  int include_pair;               /* default 1 */
  int measure;                    /* run instrumented single-mode counts */
} bm_cost_options;

BM_API void bm_cost_options_init(bm_cost_options* options);
/* BM_FORMAT_JSON or BM_FORMAT_TSV. */
BM_API bm_status bm_cost_table(const bm_cost_options* options, bm_format format, char** out);

#ifdef __cplusplus
}
#endif

#endif /* BLOCKMASK_H */
