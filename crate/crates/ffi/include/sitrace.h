/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#ifndef SITRACE_H
#define SITRACE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which trace profile [`sitrace_profile_new`] computes.
typedef enum SitraceProfileKind {
  // Trace of the identity: the fiber dimension.
  SITRACE_PROFILE_KIND_DIMENSION = 0,
  // Trace of the projection onto the zero coordinate, periodically
  // extended.
  SITRACE_PROFILE_KIND_SPECTRAL = 1,
} SitraceProfileKind;

// Outcome of a call. The verdict codes match the command line exit codes.
typedef enum SitraceStatus {
  SITRACE_STATUS_OK = 0,
  SITRACE_STATUS_FAIL = 1,
  SITRACE_STATUS_INVALID_ARGUMENT = 2,
  SITRACE_STATUS_NOT_CERTIFIED = 3,
  SITRACE_STATUS_INCONCLUSIVE = 4,
  SITRACE_STATUS_NULL_POINTER = 5,
  SITRACE_STATUS_PANIC = 6,
} SitraceStatus;

// Sample points, values and error bars of a trace profile.
typedef struct SitraceProfile SitraceProfile;

// A generator system together with its certification state.
typedef struct SitraceSystem SitraceSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sitrace_version(void);

// Message for the last failed call on this thread, or an empty string.
// Valid until the next call into the library from this thread.
const char *sitrace_last_error(void);

// Build a system from a catalog selector such as `bspline:2` or
// `shannon-scaling+shannon-wavelet`.
//
// # Safety
// `selector` must be a NUL-terminated string and `out` a valid pointer.
enum SitraceStatus sitrace_system_new(const char *selector, struct SitraceSystem **out);

// # Safety
// `sys` must come from [`sitrace_system_new`] and not be used afterwards.
void sitrace_system_free(struct SitraceSystem *sys);

// # Safety
// `sys` must be a live handle and `out` a valid pointer.
enum SitraceStatus sitrace_system_dim(const struct SitraceSystem *sys, size_t *out);

// Certify the system as a normalized tight frame generator on a grid of
// `grid` points per axis with window radius `window`. Returns the verdict
// as a status; on `Ok` or `Inconclusive` the handle is certified for that
// window. `max_residual` may be null.
//
// # Safety
// `sys` must be a live handle; `max_residual` must be null or valid.
enum SitraceStatus sitrace_system_certify(struct SitraceSystem *sys,
                                          size_t grid,
                                          size_t window,
                                          double tol,
                                          double *max_residual);

// Skip certification and use window radius `window` for later profiles.
//
// # Safety
// `sys` must be a live handle.
enum SitraceStatus sitrace_system_unchecked(struct SitraceSystem *sys, size_t window);

// Compute a trace profile on a base grid of `grid` points per axis. The
// system must have been certified or marked unchecked first.
//
// # Safety
// `sys` must be a live handle and `out` a valid pointer.
enum SitraceStatus sitrace_profile_new(const struct SitraceSystem *sys,
                                       enum SitraceProfileKind kind,
                                       size_t grid,
                                       struct SitraceProfile **out);

// # Safety
// `p` must come from [`sitrace_profile_new`] and not be used afterwards.
void sitrace_profile_free(struct SitraceProfile *p);

// Number of sample points, or 0 for a null handle.
//
// # Safety
// `p` must be null or a live handle.
size_t sitrace_profile_len(const struct SitraceProfile *p);

// Coordinates per sample point, or 0 for a null handle.
//
// # Safety
// `p` must be null or a live handle.
size_t sitrace_profile_dim(const struct SitraceProfile *p);

// Copy the profile out. `len` must equal [`sitrace_profile_len`]; `points`
// receives `len * dim` coordinates row by row. Any output may be null.
//
// # Safety
// Each non-null output must have room for the stated number of doubles.
enum SitraceStatus sitrace_profile_copy(const struct SitraceProfile *p,
                                        double *points,
                                        double *values,
                                        double *errors,
                                        size_t len);

// Check the tight frame characterization equations of a wavelet set
// under the row-major dilation matrix. Returns the verdict as a status.
// `max_residual` may be null.
//
// # Safety
// `selector` must be a NUL-terminated string, `dilation` must point to
// `dilation_len` integers and `max_residual` must be null or valid.
enum SitraceStatus sitrace_verify_wavelet(const char *selector,
                                          const int64_t *dilation,
                                          size_t dilation_len,
                                          size_t grid,
                                          size_t depth,
                                          size_t s_range,
                                          double tol,
                                          double *max_residual);

// Run the identity harness and return the JSON report through `out`
// (release it with [`sitrace_string_free`]). `config` holds configuration
// file text and may be null for the defaults. Returns the overall verdict.
//
// # Safety
// `config` must be null or a NUL-terminated string; `out` must be valid.
enum SitraceStatus sitrace_properties_json(const char *config, char **out);

// # Safety
// `s` must be null or a string returned by this library.
void sitrace_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SITRACE_H */
