#ifndef SHLAB_H
#define SHLAB_H

#include <stddef.h>

#if defined(__GNUC__)
#define SHLAB_API __attribute__((visibility("default")))
#else
#define SHLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum {
    SHLAB_OK = 0,
    SHLAB_ERR_INTERNAL = 1,
    SHLAB_ERR_VALIDATION = 2,
    SHLAB_ERR_NUMERICAL = 3,
    SHLAB_ERR_HYPOTHESIS = 4
} shlab_status;

typedef struct shlab_report shlab_report;

SHLAB_API const char* shlab_version(void);

/* Worker threads for independent solves; 0 selects the machine's parallelism. */
SHLAB_API shlab_status shlab_set_threads(int threads);

/* Experiment catalog as text; the pointer stays valid for the process lifetime. */
SHLAB_API const char* shlab_catalog(void);
SHLAB_API size_t shlab_catalog_size(void);
SHLAB_API const char* shlab_catalog_name(size_t index);
SHLAB_API const char* shlab_catalog_label(size_t index);

/*
 * Runs one experiment from JSON config text, writing artifacts under output_dir
 * (NULL for the current directory). A report is returned for every status,
 * including failures, and must be released with shlab_report_free.
 */
SHLAB_API shlab_status shlab_run(const char* config_json, const char* output_dir, shlab_report** report);

/* Validates a config without running it; the report's json is the resolved config. */
SHLAB_API shlab_status shlab_resolve(const char* config_json, shlab_report** report);

SHLAB_API shlab_status shlab_report_status(const shlab_report* report);
/* Report JSON on success, empty otherwise. */
SHLAB_API const char* shlab_report_json(const shlab_report* report);
/* Short summary on success, the failure reason otherwise. */
SHLAB_API const char* shlab_report_message(const shlab_report* report);
SHLAB_API size_t shlab_report_artifact_count(const shlab_report* report);
SHLAB_API const char* shlab_report_artifact(const shlab_report* report, size_t index);
SHLAB_API void shlab_report_free(shlab_report* report);

#ifdef __cplusplus
}
#endif

#endif
