#ifndef SPHERECONE_H
#define SPHERECONE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpcConstruction {
  SPC_CONSTRUCTION_STANDARD = 0,
  SPC_CONSTRUCTION_PCA = 1,
} SpcConstruction;

typedef enum SpcGenerator {
  SPC_GENERATOR_MC = 0,
  SPC_GENERATOR_SOBOL = 1,
  SPC_GENERATOR_SPHERE = 2,
} SpcGenerator;

typedef enum SpcOptionKind {
  SPC_OPTION_KIND_ASIAN = 0,
  SPC_OPTION_KIND_BARRIER = 1,
  SPC_OPTION_KIND_DIGITAL = 2,
  SPC_OPTION_KIND_TERMINAL = 3,
} SpcOptionKind;

/**
 * Result codes.
 */
typedef enum SpcStatus {
  SPC_STATUS_OK = 0,
  SPC_STATUS_NULL_POINTER = 1,
  /**
   * Invalid parameters or shapes.
   */
  SPC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A numerical routine failed or overflowed.
   */
  SPC_STATUS_NUMERIC = 3,
  /**
   * A Sobol' stream ran out of points.
   */
  SPC_STATUS_EXHAUSTED = 4,
  SPC_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  SPC_STATUS_PANIC = 6,
} SpcStatus;

/**
 * Opaque kernel parameters `(μ, A, B)` on `S^d`.
 */
typedef struct SpcKernel SpcKernel;

/**
 * Opaque Sobol' stream.
 */
typedef struct SpcSobol SpcSobol;

/**
 * Worst-case error and its decomposition.
 */
typedef struct SpcWceReport {
  double wce;
  double double_sum_term;
  double single_sum_term;
  double w_k;
  size_t n_points;
  int32_t clamped;
} SpcWceReport;

/**
 * Contract and market data. `barrier` is ignored unless `kind` is barrier.
 */
typedef struct SpcOptionSpec {
  double s0;
  double strike;
  double maturity;
  double sigma;
  double rate;
  size_t steps;
  double barrier;
  /**
   * One of [`SpcOptionKind`].
   */
  uint32_t kind;
} SpcOptionSpec;

typedef struct SpcPriceEstimate {
  double mean;
  double std_dev_across_replicates;
  double std_error;
} SpcPriceEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or
 * 0 when there is no error.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t spc_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spc_version(void);

/**
 * Creates a Sobol' stream in `dim` dimensions. With `scrambled != 0` the
 * stream is scrambled with `(seed, replicate)`. `dirfile` may be null for
 * the built-in direction numbers.
 *
 * # Safety
 * `out` must be valid for a write; `dirfile` null or a NUL-terminated path.
 */
enum SpcStatus spc_sobol_new(size_t dim,
                             int32_t scrambled,
                             uint64_t seed,
                             uint64_t replicate,
                             const char *dirfile,
                             struct SpcSobol **out);

/**
 * Writes the next `count` points (row-major, `count * dim` values) into `out`.
 *
 * # Safety
 * `handle` must come from [`spc_sobol_new`]; `out` must hold `count * dim` doubles.
 */
enum SpcStatus spc_sobol_next(struct SpcSobol *handle, size_t count, double *out);

/**
 * Moves the stream to point `index`.
 *
 * # Safety
 * `handle` must come from [`spc_sobol_new`].
 */
enum SpcStatus spc_sobol_seek(struct SpcSobol *handle, uint64_t index);

/**
 * Releases a stream; null is ignored.
 *
 * # Safety
 * `handle` must come from [`spc_sobol_new`] and not be used afterwards.
 */
void spc_sobol_free(struct SpcSobol *handle);

/**
 * Maps `x ∈ [0,1)^d` to `R^d` (sphere map for the direction, chi radius).
 *
 * # Safety
 * `x` and `out` must each hold `d` doubles.
 */
enum SpcStatus spc_lift_to_space(const double *x, size_t d, double *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum SpcStatus spc_kernel_new(double mu, double a, double b, size_t d, struct SpcKernel **out);

/**
 * # Safety
 * `handle` must come from [`spc_kernel_new`] and not be used afterwards.
 */
void spc_kernel_free(struct SpcKernel *handle);

/**
 * Worst-case error of `n` points of `R^{d+1}` given row-major in `points`.
 *
 * # Safety
 * `kernel` must come from [`spc_kernel_new`]; `points` must hold `n * (d + 1)`
 * doubles; `out` must be valid for a write.
 */
enum SpcStatus spc_wce(const struct SpcKernel *kernel,
                       const double *points,
                       size_t n,
                       struct SpcWceReport *out);

/**
 * Prices an option with `n_points` paths split into `n_replicates` replicates.
 * `generator` is one of [`SpcGenerator`], `construction` one of [`SpcConstruction`].
 *
 * # Safety
 * `spec` and `out` must be valid pointers.
 */
enum SpcStatus spc_price_option(const struct SpcOptionSpec *spec,
                                uint32_t generator,
                                uint32_t construction,
                                size_t n_points,
                                size_t n_replicates,
                                uint64_t seed,
                                struct SpcPriceEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERECONE_H */
