#ifndef PEAKGAN_H
#define PEAKGAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_POINTER = 1,
  PG_STATUS_INVALID_UTF8 = 2,
  PG_STATUS_CONTRACT = 3,
  PG_STATUS_CONFIG = 4,
  PG_STATUS_DATA = 5,
  PG_STATUS_UNDEFINED_METRIC = 6,
  PG_STATUS_QUERY = 7,
  PG_STATUS_MISSING_FILE = 8,
  PG_STATUS_FORMAT = 9,
  PG_STATUS_IO = 10,
  PG_STATUS_BUFFER_TOO_SMALL = 11,
  PG_STATUS_PANIC = 12,
} PgStatus;

/*
 Trained detector handle.
 */
typedef struct PgDetector PgDetector;

/*
 Trained generator handle.
 */
typedef struct PgGenerator PgGenerator;

/*
 Record store handle.
 */
typedef struct PgStore PgStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread, or null.

 The pointer stays valid until the next failing call on the same thread.
 */
const char *pg_last_error(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void pg_string_free(char *s);

/*
 Successive differences `x[t+1] - x[t]`; `out` holds `len - 1` values.

 # Safety
 `x` must point to `len` doubles and `out` to `len - 1` writable doubles.
 */
enum PgStatus pg_slopes(const double *x, size_t len, double *out);

/*
 Peak-attention weights of a profile; `out` holds `len` values summing to 1.

 # Safety
 `x` must point to `len` doubles and `out` to `len` writable doubles.
 */
enum PgStatus pg_raw_attention(const double *x, size_t len, double *out);

/*
 # Safety
 `a` and `b` must each point to `len` doubles; `out` must be writable.
 */
enum PgStatus pg_cosine_similarity(const double *a, const double *b, size_t len, double *out);

/*
 # Safety
 `a` and `b` must each point to `len` doubles; `out` must be writable.
 */
enum PgStatus pg_pearson(const double *a, const double *b, size_t len, double *out);

/*
 Apex indices of the peaks of `x` with the default options for its length.

 `count` always receives the number of peaks; when it exceeds `capacity`
 nothing is written to `indices` and `BufferTooSmall` is returned.

 # Safety
 `x` must point to `len` doubles, `indices` to `capacity` writable sizes.
 */
enum PgStatus pg_detect_peaks(const double *x,
                              size_t len,
                              size_t *indices,
                              size_t capacity,
                              size_t *count);

/*
 # Safety
 `path` must be a nul-terminated string and `out` writable.
 */
enum PgStatus pg_store_open(const char *path, struct PgStore **out);

/*
 # Safety
 `store` must be a live handle and `out` writable.
 */
enum PgStatus pg_store_len(const struct PgStore *store, size_t *out);

/*
 Records matching the optional filters as a JSON array. Null filters match all.

 # Safety
 `store` must be a live handle; non-null strings must be nul-terminated.
 */
enum PgStatus pg_store_query_json(const struct PgStore *store,
                                  const char *solvent,
                                  const char *solute,
                                  char **out);

/*
 # Safety
 `store` must be null or a handle from [`pg_store_open`] not yet freed.
 */
void pg_store_free(struct PgStore *store);

/*
 Loads the generator from a GAN checkpoint file.

 # Safety
 `path` must be a nul-terminated string and `out` writable.
 */
enum PgStatus pg_generator_load(const char *path, struct PgGenerator **out);

/*
 # Safety
 `gen` must be a live handle and `out` writable.
 */
enum PgStatus pg_generator_output_len(const struct PgGenerator *gen, size_t *out);

/*
 One generated chromatogram for `condition` (for example `"THF + DMMP"`).

 # Safety
 `gen` must be a live handle, `condition` nul-terminated and `out` must
 point to `capacity` writable doubles.
 */
enum PgStatus pg_generator_generate(const struct PgGenerator *gen,
                                    const char *condition,
                                    uint64_t seed,
                                    double *out,
                                    size_t capacity);

/*
 # Safety
 `gen` must be null or a handle from [`pg_generator_load`] not yet freed.
 */
void pg_generator_free(struct PgGenerator *gen);

/*
 # Safety
 `path` must be a nul-terminated string and `out` writable.
 */
enum PgStatus pg_detector_load(const char *path, struct PgDetector **out);

/*
 Runs detection on a spectrum given as JSON and returns the result as JSON.

 # Safety
 `det` must be a live handle, `spectrum_json` nul-terminated and `out` writable.
 */
enum PgStatus pg_detector_detect_json(const struct PgDetector *det,
                                      const char *spectrum_json,
                                      char **out);

/*
 # Safety
 `det` must be null or a handle from [`pg_detector_load`] not yet freed.
 */
void pg_detector_free(struct PgDetector *det);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PEAKGAN_H */
