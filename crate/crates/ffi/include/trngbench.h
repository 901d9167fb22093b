#ifndef TRNGBENCH_H
#define TRNGBENCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Size of the fixed GetRandom header in bytes.
 */
#define TRNG_HEADER_LEN 14

/**
 * Result of every fallible call.
 */
typedef enum TrngStatus {
  TRNG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TRNG_STATUS_NULL = 1,
  TRNG_STATUS_INVALID_ARGUMENT = 2,
  TRNG_STATUS_UNKNOWN_PROFILE = 3,
  TRNG_STATUS_IO = 4,
  /**
   * A replayed file has fewer bytes left than requested.
   */
  TRNG_STATUS_EXHAUSTED = 5,
  /**
   * The output buffer is too small; the needed size was written to the length out-parameter.
   */
  TRNG_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A byte buffer is not a well-formed GetRandom message.
   */
  TRNG_STATUS_WIRE = 7,
  /**
   * The input is too short to analyze.
   */
  TRNG_STATUS_TOO_SHORT = 8,
  /**
   * The library panicked; the handle involved should be freed.
   */
  TRNG_STATUS_PANIC = 9,
} TrngStatus;

/**
 * Opaque random source.
 */
typedef struct TrngDevice TrngDevice;

/**
 * One level's worth of quality metrics.
 */
typedef struct TrngMetricSet {
  double entropy;
  double chi_square;
  double chi_square_exceed_prob;
  double mean;
  double mc_pi_estimate;
  double mc_pi_error_pct;
  /**
   * Only meaningful when `serial_correlation_defined` is true.
   */
  double serial_correlation;
  bool serial_correlation_defined;
  /**
   * True when any metric at this level is labelled fail.
   */
  bool has_failure;
} TrngMetricSet;

typedef struct TrngQualityReport {
  uint64_t input_length;
  struct TrngMetricSet byte_level;
  struct TrngMetricSet bit_level;
} TrngQualityReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *trng_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *trng_version(void);

/**
 * Creates a simulated chip from a built-in profile name.
 *
 * # Safety
 * `profile` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TrngStatus trng_device_new_simulated(const char *profile,
                                          uint64_t seed,
                                          struct TrngDevice **out);

/**
 * Like [`trng_device_new_simulated`] but byte value `v` is drawn with weight
 * `1 + epsilon * v`.
 *
 * # Safety
 * Same as [`trng_device_new_simulated`].
 */
enum TrngStatus trng_device_new_simulated_biased(const char *profile,
                                                 uint64_t seed,
                                                 double epsilon,
                                                 struct TrngDevice **out);

/**
 * Creates a device reading the operating system's entropy source.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum TrngStatus trng_device_new_os(struct TrngDevice **out);

/**
 * Creates a device replaying the bytes of a file in order.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TrngStatus trng_device_new_file(const char *path, struct TrngDevice **out);

/**
 * Releases a device. Null is ignored.
 *
 * # Safety
 * `dev` must come from a `trng_device_new_*` call and not have been freed.
 */
void trng_device_free(struct TrngDevice *dev);

/**
 * Number of successful draws made so far, or 0 for a null handle.
 *
 * # Safety
 * `dev` must be null or a live handle.
 */
uint64_t trng_device_calls(const struct TrngDevice *dev);

/**
 * Asks the device for `n` bytes. The device may return fewer (simulated chips cap
 * each call); the count actually returned goes to `out_len` and the call duration in
 * microseconds to `out_duration_us` (may be null).
 *
 * # Safety
 * `dev` must be a live handle, `buf` must hold `cap` bytes, `out_len` must be writable.
 */
enum TrngStatus trng_device_get_random(struct TrngDevice *dev,
                                       size_t n,
                                       uint8_t *buf,
                                       size_t cap,
                                       size_t *out_len,
                                       double *out_duration_us);

/**
 * Passes a raw GetRandom command buffer to the device and copies back the encoded
 * response. Malformed commands still produce a (failure) response and `TRNG_OK`.
 *
 * # Safety
 * `cmd` must hold `cmd_len` bytes, `resp` must hold `resp_cap` bytes, and `out_len`
 * must be writable.
 */
enum TrngStatus trng_device_submit_command(struct TrngDevice *dev,
                                           const uint8_t *cmd,
                                           size_t cmd_len,
                                           uint8_t *resp,
                                           size_t resp_cap,
                                           size_t *out_len);

/**
 * Writes the 14-byte request for `bytes_requested` into `buf`.
 *
 * # Safety
 * `buf` must hold `cap` bytes and `out_len` must be writable.
 */
enum TrngStatus trng_encode_request(uint32_t bytes_requested,
                                    uint8_t *buf,
                                    size_t cap,
                                    size_t *out_len);

/**
 * Decodes a response buffer. On success the payload occupies
 * `raw[TRNG_HEADER_LEN .. TRNG_HEADER_LEN + *out_size]`.
 *
 * # Safety
 * `raw` must hold `len` bytes; the out-pointers must be writable.
 */
enum TrngStatus trng_decode_response(const uint8_t *raw,
                                     size_t len,
                                     uint32_t *out_return_code,
                                     uint32_t *out_size);

/**
 * Runs the quality battery on an in-memory buffer of at least 6 bytes.
 *
 * # Safety
 * `data` must hold `len` bytes and `out` must be writable.
 */
enum TrngStatus trng_analyze(const uint8_t *data, size_t len, struct TrngQualityReport *out);

/**
 * Streams a file through the quality battery. With `pieces > 1`, `out_pieces` (room
 * for `pieces` reports) receives one report per contiguous segment; it may be null
 * when `pieces` is 1.
 *
 * # Safety
 * `path` must be NUL-terminated, `out_whole` writable, and `out_pieces` null or able
 * to hold `pieces` reports.
 */
enum TrngStatus trng_analyze_file(const char *path,
                                  size_t pieces,
                                  struct TrngQualityReport *out_whole,
                                  struct TrngQualityReport *out_pieces);

/**
 * Sweeps request sizes `min..=max` in `step` increments, `reps` calls each, and
 * writes the CSV to `out_path`.
 *
 * # Safety
 * `dev` must be a live handle and `out_path` NUL-terminated.
 */
enum TrngStatus trng_bench_sweep_csv(struct TrngDevice *dev,
                                     size_t min,
                                     size_t max,
                                     size_t step,
                                     size_t reps,
                                     const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRNGBENCH_H */
