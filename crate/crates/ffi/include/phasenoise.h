#ifndef PHASENOISE_H
#define PHASENOISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PnStatus {
  PN_STATUS_OK = 0,
  PN_STATUS_NULL_POINTER = 1,
  PN_STATUS_INVALID_ARGUMENT = 2,
  PN_STATUS_UNSUPPORTED_ORDER = 3,
  PN_STATUS_INVALID_CONSTELLATION = 4,
  // The Tikhonov detector was asked to run with zero phase variance.
  PN_STATUS_DEGENERATE_VARIANCE = 5,
  PN_STATUS_NUMERICAL_FAILURE = 6,
  PN_STATUS_BUFFER_TOO_SMALL = 7,
  // A Rust panic was caught at the boundary.
  PN_STATUS_INTERNAL = 8,
} PnStatus;

// Symbol-by-symbol detectors.
typedef enum PnDetector {
  PN_DETECTOR_EUCLIDEAN = 0,
  PN_DETECTOR_TIKHONOV = 1,
  PN_DETECTOR_VARIANCE_BIASED = 2,
  PN_DETECTOR_GAUSSIAN_AMPLITUDE_PHASE = 3,
  PN_DETECTOR_TWO_STEP = 4,
  PN_DETECTOR_SECOND_ORDER_MOMENT = 5,
} PnDetector;

// Opaque constellation handle.
typedef struct PnConstellation PnConstellation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a unit-energy square QAM constellation (order 4, 16, 64 or 256).
//
// # Safety
// `out` must be valid for writes. The handle must be released with
// [`pn_constellation_free`].
enum PnStatus pn_constellation_qam(size_t order, struct PnConstellation **out);

// Creates a unit-energy spiral constellation whose points all have
// distinct amplitudes.
//
// # Safety
// Same contract as [`pn_constellation_qam`].
enum PnStatus pn_constellation_spiral(size_t order, struct PnConstellation **out);

// Creates a constellation from `len` points given as separate real and
// imaginary arrays. The points are scaled to unit average energy.
//
// # Safety
// `re` and `im` must each point to `len` readable doubles, and `out` must be
// valid for writes.
enum PnStatus pn_constellation_from_points(const double *re,
                                           const double *im,
                                           size_t len,
                                           struct PnConstellation **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `c` must be null or a handle not yet freed.
void pn_constellation_free(struct PnConstellation *c);

// Number of points, or 0 for a null handle.
//
// # Safety
// `c` must be null or a live handle.
size_t pn_constellation_len(const struct PnConstellation *c);

// Writes point `index` to `re` and `im`.
//
// # Safety
// `c` must be a live handle; `re` and `im` must be valid for writes.
enum PnStatus pn_constellation_point(const struct PnConstellation *c,
                                     size_t index,
                                     double *re,
                                     double *im);

// Runs one detector on the compensated observation `r = r_re + j r_im`.
//
// `posteriors` receives one probability per constellation point and must
// hold at least `capacity` doubles; `hard_index` receives the decision.
// Either output may be null if it is not wanted.
//
// # Safety
// `c` must be a live handle; non-null outputs must be valid for writes
// (`posteriors` for `capacity` elements).
enum PnStatus pn_soft_decide(const struct PnConstellation *c,
                             double r_re,
                             double r_im,
                             double n0,
                             double sigma_p2,
                             enum PnDetector detector,
                             double *posteriors,
                             size_t capacity,
                             size_t *hard_index);

// Union bound on the SEP of the Gaussian amplitude-phase detector.
//
// # Safety
// `c` must be a live handle and `out` valid for writes.
enum PnStatus pn_union_bound(const struct PnConstellation *c,
                             double n0,
                             double sigma_p2,
                             double *out);

// High-SNR error floor of the Gaussian amplitude-phase detector.
//
// # Safety
// `c` must be a live handle and `out` valid for writes.
enum PnStatus pn_error_floor(const struct PnConstellation *c, double sigma_p2, double *out);

// Gaussian tail probability `Q(x)`.
double pn_q_function(double x);

// Complex noise variance for unit symbol energy at the given Eb/N0.
//
// # Safety
// `out` must be valid for writes.
enum PnStatus pn_eb_n0_to_n0(double eb_n0_db, double bits_per_symbol, double *out);

// Message for the most recent failed call on this thread; empty after a
// success. The pointer stays valid until the next call on the same thread.
const char *pn_last_error_message(void);

// Static description of a status code.
const char *pn_status_string(enum PnStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASENOISE_H */
