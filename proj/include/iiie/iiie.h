#ifndef IIIE_IIIE_H
#define IIIE_IIIE_H

#include <stdint.h>

#if defined(IIIE_BUILDING_LIBRARY)
#define IIIE_API __attribute__((visibility("default")))
#else
#define IIIE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The first five are the codes a failed edit job reports. */
typedef enum iiie_status {
  IIIE_OK = 0,
  IIIE_ANALYSIS_UNPARSEABLE = 1,
  IIIE_GROUNDING_EMPTY = 2,
  IIIE_BACKEND_UNREACHABLE = 3,
  IIIE_BACKEND_CONTRACT_VIOLATION = 4,
  IIIE_MALFORMED_IMAGE = 5,
  IIIE_OVERSIZED_IMAGE = 6,
  IIIE_BACKEND_REJECTED = 7,
  IIIE_DIMENSION_MISMATCH = 8,
  IIIE_EMPTY_BOX_AFTER_CLAMP = 9,
  IIIE_INVALID_PLAN = 10,
  IIIE_PRECONDITION_VIOLATION = 11,
  IIIE_TEMPLATE_ERROR = 12,
  IIIE_PORT_UNAVAILABLE = 13,
  IIIE_MANIFEST_MALFORMED = 14,
  IIIE_EVEN_PANEL = 15,
  IIIE_INCOMPLETE_PANEL = 16,
  IIIE_DUPLICATE_RATING = 17,
  IIIE_CONFIG_ERROR = 18,
  IIIE_IO_ERROR = 19,
  IIIE_INVALID_ARGUMENT = 98,
  IIIE_INTERNAL = 99
} iiie_status;

typedef struct iiie_context iiie_context;
typedef struct iiie_service iiie_service;
typedef struct iiie_mock_backends iiie_mock_backends;

/* Name of a status, e.g. "GroundingEmpty". Never NULL. */
IIIE_API const char* iiie_status_name(iiie_status status);
/* Message of the last failing call on this thread; "" when none. */
IIIE_API const char* iiie_last_error(void);
/* Frees strings returned through char** out-parameters. */
IIIE_API void iiie_string_free(char* s);

/* config_path may be NULL for the defaults. */
IIIE_API iiie_status iiie_context_create(const char* config_path, iiie_context** out);
/* Same, from a JSON document; relative paths resolve against base_dir. */
IIIE_API iiie_status iiie_context_create_json(const char* config_json, const char* base_dir, iiie_context** out);
IIIE_API void iiie_context_destroy(iiie_context* ctx);

/* Runs one edit into out_dir/<job_id>. job_id, override_path and seed may be
 * NULL; the default id is derived from the image and instruction. Returns
 * IIIE_OK when the job reached Done, otherwise the job's error code.
 * *job_json receives the final job state whenever the job ran. */
IIIE_API iiie_status iiie_edit(iiie_context* ctx, const char* image_path, const char* instruction,
                               const char* override_path, const int64_t* seed, const char* out_dir,
                               const char* job_id, char** job_json);

/* Runs a JSONL manifest. Returns IIIE_OK once every record has run (jobs may
 * still have failed; see the summary); *summary_json gets the summary. */
IIIE_API iiie_status iiie_batch(iiie_context* ctx, const char* manifest_path, const char* out_dir, int parallelism,
                                char** summary_json);

/* Starts the HTTP API. host/out_dir NULL and port or workers < 0 take the
 * configured values; port 0 picks a free port. */
IIIE_API iiie_status iiie_service_start(iiie_context* ctx, const char* host, int port, int workers,
                                        const char* out_dir, iiie_service** out);
IIIE_API int iiie_service_port(const iiie_service* service);
IIIE_API void iiie_service_stop(iiie_service* service);
IIIE_API void iiie_service_destroy(iiie_service* service);

/* Serves the deterministic backends on port_base..port_base+3 (chat, ground,
 * inpaint, global-edit); port_base 0 picks free ports. fixtures_dir and
 * rules_path may be NULL. */
IIIE_API iiie_status iiie_mock_backends_start(const char* fixtures_dir, const char* rules_path, const char* host,
                                              int port_base, iiie_mock_backends** out);
/* {"chat": url, "ground": url, "inpaint": url, "global_edit": url} */
IIIE_API iiie_status iiie_mock_backends_urls(const iiie_mock_backends* mocks, char** urls_json);
IIIE_API void iiie_mock_backends_stop(iiie_mock_backends* mocks);
IIIE_API void iiie_mock_backends_destroy(iiie_mock_backends* mocks);

/* Ratings (CSV with header method,image_id,metric,rater_id,score, or JSONL)
 * to per-method scores. *csv gets the ranked aggregate CSV, *table the text
 * table; either pointer may be NULL. */
IIIE_API iiie_status iiie_eval_aggregate(const char* ratings_text, char** csv, char** table);
/* Ranks an aggregate CSV or raw ratings, detected by the header. */
IIIE_API iiie_status iiie_eval_rank(const char* text, char** table);

#ifdef __cplusplus
}
#endif

#endif
