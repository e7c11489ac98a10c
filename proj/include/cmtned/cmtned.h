/* Copyright 2026 The cmtned Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of the cmtned named-entity-disambiguation toolkit.
 *
 * Every function returns a cmt_status. On failure, cmt_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * opaque and owned by the caller; free them with the matching *_free.
 */

#ifndef CMTNED_CMTNED_H_
#define CMTNED_CMTNED_H_

#include <stddef.h>

#if defined(CMTNED_BUILDING_LIBRARY)
#define CMT_API __attribute__((visibility("default")))
#else
#define CMT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cmt_status {
  CMT_OK = 0,
  CMT_ERR_INVALID_ARGUMENT = 1,
  CMT_ERR_IO = 2,
  CMT_ERR_PARSE = 3,
  CMT_ERR_CONTRACT = 4,
  CMT_ERR_MISSING_ARTIFACT = 5,
  CMT_ERR_VERSION = 6,
  CMT_ERR_INTERNAL = 7
} cmt_status;

/* Library version, e.g. "1.0.0". */
CMT_API const char* cmt_version(void);
/* Stable name of a status, e.g. "CMT_ERR_PARSE". */
CMT_API const char* cmt_status_name(cmt_status status);
/* Message of the calling thread's last failure ("" if none). */
CMT_API const char* cmt_last_error(void);

/* ---- stage options: an ordered key -> value map ------------------------ */

typedef struct cmt_options cmt_options;

CMT_API cmt_status cmt_options_create(cmt_options** out);
CMT_API void cmt_options_free(cmt_options* options);
/* Sets or replaces |key|. Keys are stage option names without dashes. */
CMT_API cmt_status cmt_options_set(cmt_options* options, const char* key, const char* value);

/* ---- pipeline stages (one per CLI subcommand) -------------------------- */

CMT_API size_t cmt_stage_count(void);
/* NULL when |index| is out of range. */
CMT_API const char* cmt_stage_name(size_t index);
CMT_API cmt_status cmt_stage_help(const char* stage, const char** help);
CMT_API cmt_status cmt_stage_option_count(const char* stage, size_t* count);
/* |default_value| is NULL for required options. Strings live as long as the
 * library is loaded. */
CMT_API cmt_status cmt_stage_option(const char* stage, size_t index, const char** key,
                                    const char** help, const char** default_value);

/* Receives progress lines; may be NULL. */
typedef void (*cmt_log_fn)(const char* line, void* user);

/* Runs |stage| with |options| (NULL means no options). */
CMT_API cmt_status cmt_stage_run(const char* stage, const cmt_options* options, cmt_log_fn log,
                                 void* user);

/* ---- trained ranker scoring -------------------------------------------- */

typedef struct cmt_ranker cmt_ranker;

CMT_API cmt_status cmt_ranker_load(const char* path, cmt_ranker** out);
CMT_API void cmt_ranker_free(cmt_ranker* ranker);
CMT_API cmt_status cmt_ranker_input_size(const cmt_ranker* ranker, size_t* size);
/* Name of input slot |index|. */
CMT_API cmt_status cmt_ranker_feature_name(const cmt_ranker* ranker, size_t index, const char** name);
/* Probability that a candidate with |features| (input_size values) is the
 * true entity. */
CMT_API cmt_status cmt_ranker_score(const cmt_ranker* ranker, const double* features, size_t n,
                                    double* probability);

/* ---- evaluation --------------------------------------------------------- */

typedef struct cmt_metrics {
  double precision;
  double recall;
  double f1;
  double bot_f1;
  double inkb_accuracy;
} cmt_metrics;

/* Scores a predictions file against the gold annotations of a corpus. */
CMT_API cmt_status cmt_evaluate_files(const char* corpus_path, const char* predictions_path,
                                      cmt_metrics* out);

#ifdef __cplusplus
}
#endif

#endif /* CMTNED_CMTNED_H_ */
