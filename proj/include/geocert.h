/*
 * C interface to the geometric-certification library.
 *
 * Conventions:
 *   - Every fallible call returns a geocert_status; GEOCERT_OK is 0.
 *   - On failure, geocert_last_error() returns a thread-local message
 *     describing the most recent failing call on this thread.
 *   - Objects are opaque handles created by *_load / *_build / *_create and
 *     released with the matching *_free (safe on NULL).
 *   - Strings returned through char** out-parameters are heap-allocated and
 *     must be released with geocert_string_free.
 *   - Configuration is JSON text with the fields: transform ("rotation",
 *     "translation", "scaling", "shearing"), range {lo, hi}, interval_size,
 *     samples, subdivisions or epsilon, method ("ibp" | "crown" |
 *     "crown-ibp"), per_cell_lipschitz, tolerance, threads, early_exit,
 *     include_timing. Ranges are in user units: degrees for rotation
 *     (unless "radians": true), pixels for translation, percent points for
 *     scaling and shearing.
 */
#ifndef GEOCERT_H
#define GEOCERT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum geocert_status {
  GEOCERT_OK = 0,
  GEOCERT_INVALID_ARGUMENT = 1,
  GEOCERT_IO_ERROR = 2,
  GEOCERT_SINGULAR_TRANSFORM = 3,
  GEOCERT_RESOURCE_LIMIT = 4,
  GEOCERT_INTERNAL_ERROR = 5
} geocert_status;

typedef struct geocert_image geocert_image;
typedef struct geocert_network geocert_network;
typedef struct geocert_relaxation geocert_relaxation;

/* Library version as "major.minor.patch". */
const char* geocert_version(void);

/* Message for the most recent failing call on this thread ("" if none). */
const char* geocert_last_error(void);

void geocert_string_free(char* text);

/* ---- images ---------------------------------------------------------- */

/* Formats by extension: .pgm (P2/P5), .csv, .json channel manifest. */
geocert_status geocert_image_load(const char* path, geocert_image** out);

/* data is channel-major (channel, row, column), channels*rows*cols values. */
geocert_status geocert_image_create(int channels, int rows, int cols,
                                    const double* data, geocert_image** out);
geocert_status geocert_image_save(const geocert_image* img, const char* path);
geocert_status geocert_image_shape(const geocert_image* img, int* channels,
                                   int* rows, int* cols);

/* Copies all pixel values; capacity must be at least channels*rows*cols. */
geocert_status geocert_image_data(const geocert_image* img, double* out,
                                  size_t capacity);
void geocert_image_free(geocert_image* img);

/* ---- networks -------------------------------------------------------- */

geocert_status geocert_network_load(const char* manifest_path,
                                    geocert_network** out);
geocert_status geocert_network_outputs(const geocert_network* net, int* out);

/* Clean forward pass; capacity must be at least the output count. */
geocert_status geocert_network_forward(const geocert_network* net,
                                       const geocert_image* img, double* out,
                                       size_t capacity);
void geocert_network_free(geocert_network* net);

/* ---- relaxations ----------------------------------------------------- */

/*
 * Build the sound per-pixel linear relaxation over the configured full
 * range (no interval splitting). Exactly one of the config's subdivisions
 * and epsilon selects the correction mesh size.
 */
geocert_status geocert_relaxation_build(const geocert_image* img,
                                        const char* config_json,
                                        geocert_relaxation** out);
geocert_status geocert_relaxation_save(const geocert_relaxation* relax,
                                       const char* path);
geocert_status geocert_relaxation_load(const char* path,
                                       geocert_relaxation** out);

/*
 * Empirical soundness check against the original image: corners, center,
 * then a fixed-seed uniform parameter stream. Reports the number of bound
 * violations beyond the tolerance and the worst violation magnitude.
 */
geocert_status geocert_relaxation_check(const geocert_relaxation* relax,
                                        const geocert_image* img,
                                        int64_t samples, double tolerance,
                                        int64_t* violations, double* worst);
void geocert_relaxation_free(geocert_relaxation* relax);

/* ---- certification ---------------------------------------------------- */

/* certified is 0/1; margin is the worst evaluated sub-interval margin
 * (the clean margin when classification already fails). */
geocert_status geocert_certify_image(const geocert_network* net,
                                     const geocert_image* img, int label,
                                     const char* config_json, int* certified,
                                     double* margin);

/* Runs the dataset manifest through the pipeline. Either out-parameter may
 * be NULL: report_json receives the machine-readable report, summary the
 * aligned-text rendering. */
geocert_status geocert_certify_dataset(const geocert_network* net,
                                       const char* dataset_manifest,
                                       const char* config_json,
                                       char** report_json, char** summary);

/* Curve data (CSV text) for one pixel over the configured range, which
 * must be one-dimensional. */
geocert_status geocert_curve(const geocert_image* img, int channel, int i,
                             int j, const char* config_json, int resolution,
                             char** csv);

#ifdef __cplusplus
}
#endif

#endif /* GEOCERT_H */
