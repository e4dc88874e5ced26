#ifndef QREPEATER_H
#define QREPEATER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QrStatus {
  QR_STATUS_OK = 0,
  QR_STATUS_NULL_POINTER = 1,
  QR_STATUS_INVALID_ARGUMENT = 2,
  QR_STATUS_INVALID_UTF8 = 3,
  QR_STATUS_JSON = 4,
  QR_STATUS_SIMULATION = 5,
  QR_STATUS_PANIC = 6,
} QrStatus;

typedef enum QrProtocol {
  QR_PROTOCOL_MB = 0,
  QR_PROTOCOL_SB = 1,
} QrProtocol;

typedef enum QrPatchMode {
  QR_PATCH_MODE_LIMITED = 0,
  QR_PATCH_MODE_UNLIMITED = 1,
} QrPatchMode;

/**
 * Opaque chain configuration.
 */
typedef struct QrConfig QrConfig;

/**
 * Opaque single protocol run.
 */
typedef struct QrSample QrSample;

/**
 * Aggregated result of [`qr_run`]. Rates in Hz.
 */
typedef struct QrStatistics {
  uint64_t samples;
  double mean_rounds;
  double se_rounds;
  double mean_e_x;
  double se_e_x;
  double mean_e_z;
  double se_e_z;
  double raw_rate;
  double secret_key_fraction;
  double secret_key_rate;
  double se_secret_key_rate;
} QrStatistics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * owned by the library and valid until the next failing call.
 */
const char *qr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qr_version(void);

void qr_string_free(char *s);

/**
 * Default configuration: MB, k = 3, 100 km, T = 10 s, p = 0.5.
 */
enum QrStatus qr_config_new(struct QrConfig **out);

/**
 * Parses a JSON configuration (same schema as the CLI's `--config`).
 */
enum QrStatus qr_config_from_json(const char *json, struct QrConfig **out);

enum QrStatus qr_config_to_json(const struct QrConfig *cfg, char **out);

void qr_config_free(struct QrConfig *cfg);

enum QrStatus qr_config_set_protocol(struct QrConfig *cfg, enum QrProtocol protocol);

enum QrStatus qr_config_set_levels(struct QrConfig *cfg, uint32_t levels);

enum QrStatus qr_config_set_total_distance_km(struct QrConfig *cfg, double km);

enum QrStatus qr_config_set_dephasing_time_s(struct QrConfig *cfg, double seconds);

enum QrStatus qr_config_set_merge_probability(struct QrConfig *cfg, double p);

/**
 * A negative value restores the attenuation-derived default.
 */
enum QrStatus qr_config_set_generation_probability(struct QrConfig *cfg, double p_gen);

enum QrStatus qr_config_set_growth_limit(struct QrConfig *cfg, uint32_t growth_limit);

enum QrStatus qr_config_set_patching(struct QrConfig *cfg, enum QrPatchMode mode);

enum QrStatus qr_config_set_samples(struct QrConfig *cfg, uint64_t samples);

enum QrStatus qr_config_set_seed(struct QrConfig *cfg, uint64_t seed);

/**
 * Samples the configuration and writes the aggregate to `out`.
 */
enum QrStatus qr_run(const struct QrConfig *cfg, struct QrStatistics *out);

/**
 * Draws sample number `index` of the configured seed.
 */
enum QrStatus qr_sample_new(const struct QrConfig *cfg, uint64_t index, struct QrSample **out);

void qr_sample_free(struct QrSample *s);

enum QrStatus qr_sample_rounds(const struct QrSample *s, uint64_t *out);

/**
 * Largest entanglement gap, in segments, seen while building the sample.
 */
enum QrStatus qr_sample_max_gap(const struct QrSample *s, uint32_t *out);

/**
 * Bell-diagonal output probabilities in the order Φ+, Ψ+, Φ−, Ψ−.
 */
enum QrStatus qr_sample_bell_probabilities(const struct QrSample *s, double *out);

enum QrStatus qr_sample_qber(const struct QrSample *s, double *e_x, double *e_z);

/**
 * Operation trace as JSON; free with [`qr_string_free`].
 */
enum QrStatus qr_sample_trace_json(const struct QrSample *s, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QREPEATER_H */
