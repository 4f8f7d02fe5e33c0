/* Stable C interface to the gazeaudit library.
 *
 * Every fallible call returns a ga_status. On failure the calling thread's
 * ga_last_error() describes the problem until the next call on that thread.
 * Handles are opaque and owned by the caller; free them with the matching
 * _free function (passing NULL is allowed).
 */
#ifndef GAZEAUDIT_H
#define GAZEAUDIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(GAZEAUDIT_BUILDING_LIBRARY)
#define GA_API __attribute__((visibility("default")))
#else
#define GA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ga_status {
    GA_OK = 0,
    GA_ERR_INVALID_ARGUMENT = 1,
    GA_ERR_IO = 2,
    GA_ERR_PARSE = 3,
    GA_ERR_DOMAIN = 4,
    GA_ERR_DEGENERATE = 5,
    GA_ERR_NOT_FOUND = 6,
    GA_ERR_CONFLICT = 7,
    GA_ERR_INTERNAL = 8
} ga_status;

GA_API const char* ga_version(void);
GA_API const char* ga_status_string(ga_status status);
/* Message of the last failed call on this thread ("" when none). */
GA_API const char* ga_last_error(void);

/* Receives warnings and progress notes from batch runs. */
typedef void (*ga_message_fn)(const char* message, void* user);

/* ---- Manifest ---------------------------------------------------------- */

typedef struct ga_manifest ga_manifest;

GA_API ga_status ga_manifest_load(const char* path, ga_manifest** out);
GA_API void ga_manifest_free(ga_manifest* manifest);
GA_API size_t ga_manifest_video_count(const ga_manifest* manifest);
/* The string stays valid for the lifetime of the handle. */
GA_API ga_status ga_manifest_video_id(const ga_manifest* manifest, size_t index, const char** out);
/* Declared frame span of a video. */
GA_API ga_status ga_manifest_video_range(const ga_manifest* manifest, const char* video_id, int64_t* first,
                                         int64_t* last);

/* ---- Saliency maps ----------------------------------------------------- */

typedef struct ga_salmap ga_salmap;

/* values: width*height row-major, may be NULL for a zero map. */
GA_API ga_status ga_salmap_create(uint32_t width, uint32_t height, const double* values, ga_salmap** out);
/* SMAP or PNG. */
GA_API ga_status ga_salmap_read(const char* path, ga_salmap** out);
GA_API ga_status ga_salmap_write(const ga_salmap* map, const char* path);
GA_API void ga_salmap_free(ga_salmap* map);
GA_API uint32_t ga_salmap_width(const ga_salmap* map);
GA_API uint32_t ga_salmap_height(const ga_salmap* map);
GA_API const double* ga_salmap_data(const ga_salmap* map);

/* Sum of isotropic Gaussians at the given points (xy interleaved),
 * normalized to unit sum. */
GA_API ga_status ga_salmap_gaussian(uint32_t width, uint32_t height, const double* xy, size_t count, double sigma,
                                    ga_salmap** out);

/* ---- Metrics ----------------------------------------------------------- */

typedef enum ga_metric { GA_METRIC_KLD = 0, GA_METRIC_CC = 1, GA_METRIC_SIM = 2, GA_METRIC_NSS = 3 } ga_metric;

/* fixations: integer pixel coordinates, xy interleaved; only used by NSS.
 * kld_epsilon <= 0 selects the default. GA_ERR_DEGENERATE when the metric
 * is undefined for the input. */
GA_API ga_status ga_metric_compute(ga_metric metric, const ga_salmap* prediction, const ga_salmap* ground_truth,
                                   const uint32_t* fixations, size_t fixation_count, double kld_epsilon,
                                   double* out);
/* Validates a comma-separated list such as "kld,cc". */
GA_API ga_status ga_metric_list_check(const char* list);

/* ---- Batch commands ---------------------------------------------------- */

typedef struct ga_segment_options {
    const char* manifest;
    const char* video;
    const char* out;
    int median_window;
    double accel_threshold;    /* m/s^2 */
    double stop_threshold_kmh;
    double penalty;            /* <= 0: automatic */
} ga_segment_options;
GA_API void ga_segment_options_init(ga_segment_options* opts);
GA_API ga_status ga_run_segment(const ga_segment_options* opts, ga_message_fn sink, void* user);

typedef struct ga_salmap_options {
    const char* manifest;
    const char* video;
    const char* recipe;     /* bdda | dreyeve | lbw */
    const char* out_dir;
    double sigma_spatial;   /* <= 0: recipe default */
    double sigma_temporal;  /* <= 0: recipe default */
    int window_halfwidth;   /* < 0: recipe default */
    int reject_off_frame;   /* single-fixation recipe: reject instead of clamp */
    int keep_in_vehicle;
} ga_salmap_options;
GA_API void ga_salmap_options_init(ga_salmap_options* opts);
GA_API ga_status ga_run_salmap(const ga_salmap_options* opts, ga_message_fn sink, void* user);

typedef struct ga_eval_options {
    const char* manifest;
    const char* pred_dir;
    const char* gt_dir;
    const char* metrics;    /* comma list; NULL or "" for all */
    int by_action;
    int by_context;
    const char* out;        /* ".md" selects markdown, else CSV */
    double kld_epsilon;
    const char* video;      /* NULL: all videos */
} ga_eval_options;
GA_API void ga_eval_options_init(ga_eval_options* opts);
GA_API ga_status ga_run_eval(const ga_eval_options* opts, ga_message_fn sink, void* user);

typedef enum ga_homaudit_mode { GA_HOMAUDIT_DRIVER_TO_SCENE = 0, GA_HOMAUDIT_TEMPORAL = 1 } ga_homaudit_mode;

typedef struct ga_homaudit_options {
    ga_homaudit_mode mode;
    const char* pairs_file;
    const char* refs_file;
    const char* out;
    int runs;
    int pairs_per_video;
    uint64_t seed;
    double subset_fraction;
    double ransac_threshold; /* 0: plain DLT */
    double image_width;
} ga_homaudit_options;
GA_API void ga_homaudit_options_init(ga_homaudit_options* opts);
GA_API ga_status ga_run_homaudit(const ga_homaudit_options* opts, ga_message_fn sink, void* user);

typedef struct ga_context_options {
    const char* manifest;
    const char* osm;  /* NULL: manifest-level extract */
    const char* video;
    double radius_m;
    const char* out;
} ga_context_options;
GA_API void ga_context_options_init(ga_context_options* opts);
GA_API ga_status ga_run_context(const ga_context_options* opts, ga_message_fn sink, void* user);

typedef struct ga_audit_options {
    const char* manifest;
    const char* video; /* NULL: all videos */
    const char* out;
    unsigned workers;
} ga_audit_options;
GA_API void ga_audit_options_init(ga_audit_options* opts);
GA_API ga_status ga_run_audit(const ga_audit_options* opts, ga_message_fn sink, void* user);

typedef struct ga_stats_options {
    const char* manifest;
    const char* out;
} ga_stats_options;
GA_API void ga_stats_options_init(ga_stats_options* opts);
GA_API ga_status ga_run_stats(const ga_stats_options* opts, ga_message_fn sink, void* user);

/* ---- Annotation service ------------------------------------------------ */

typedef struct ga_service ga_service;

typedef struct ga_service_options {
    const char* host;
    int port;          /* 0: ephemeral */
    const char* manifest;
    int read_only;
    const char* token; /* NULL: no auth */
} ga_service_options;
GA_API void ga_service_options_init(ga_service_options* opts);
GA_API ga_status ga_service_create(const ga_service_options* opts, ga_service** out);
/* Binds and serves on a background thread; *port receives the bound port. */
GA_API ga_status ga_service_start(ga_service* service, int* port);
GA_API void ga_service_stop(ga_service* service);
GA_API void ga_service_free(ga_service* service);

#ifdef __cplusplus
}
#endif

#endif
