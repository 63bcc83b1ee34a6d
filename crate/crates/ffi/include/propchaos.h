#ifndef PROPCHAOS_H
#define PROPCHAOS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum pc_status {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_ARGUMENT = 2,
  // Blow-up, spectral instability or a degenerate fit.
  PC_STATUS_NUMERICAL_FAILURE = 3,
  PC_STATUS_CONFIG_ERROR = 4,
  PC_STATUS_IO = 5,
  // `pc_run_experiment` ran but its checks did not all pass.
  PC_STATUS_CHECK_FAILED = 6,
  PC_STATUS_PANIC = 7,
} pc_status;

// Angular collision kernel.
typedef struct pc_kernel pc_kernel;

// Random stream keyed by a master seed and a stream id.
typedef struct pc_rng pc_rng;

// Particle configuration.
typedef struct pc_state pc_state;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or an empty string.
// The pointer stays valid until the next failing call on the thread.
const char *pc_last_error(void);

// Library version, a static NUL-terminated string.
const char *pc_version(void);

// Releases a string returned by this library.
//
// `s` must come from this library and not have been freed.
void pc_string_free(char *s);

// Stream `stream_id` of the generator keyed by `master_seed`.
enum pc_status pc_rng_new(uint64_t master_seed, uint64_t stream_id, struct pc_rng **out);

void pc_rng_free(struct pc_rng *rng);

// Uniform draw in `[0, 1)`.
enum pc_status pc_rng_uniform(struct pc_rng *rng, double *out);

// Kernel from the catalog: `isotropic`, `forward:<k>`, `spike:<kappa>`,
// or `two_point:<w>` in one dimension.
enum pc_status pc_kernel_new(size_t dim, const char *spec, struct pc_kernel **out);

void pc_kernel_free(struct pc_kernel *kernel);

// Mean cosine of the scattering angle under the kernel.
enum pc_status pc_kernel_first_moment(const struct pc_kernel *kernel, double *out);

// State from `n * dim` row-major coordinates at time zero.
//
// `coords` must hold `n * dim` values, `out` must be valid.
enum pc_status pc_state_new(size_t dim, size_t n, const double *coords, struct pc_state **out);

// `n` independent Gaussian particles with the given per-axis means and
// variances (each of length `dim`).
//
// Pointers must be valid; `mean` and `variance` must hold `dim` values.
enum pc_status pc_state_sample_gaussian(size_t dim,
                                        size_t n,
                                        const double *mean,
                                        const double *variance,
                                        struct pc_rng *rng,
                                        struct pc_state **out);

void pc_state_free(struct pc_state *state);

// Particle count, dimension and current time.
// Any of the outputs may be null to skip it.
enum pc_status pc_state_shape(const struct pc_state *state, size_t *n, size_t *dim, double *time);

// Copies the `n * dim` coordinates into `buf`, which holds `len` values.
//
// `buf` must be writable for `len` values.
enum pc_status pc_state_coords(const struct pc_state *state, double *buf, size_t len);

// Total energy `sum |v|^2` and total momentum (written to `momentum`,
// `dim` values; may be null).
enum pc_status pc_state_moments(const struct pc_state *state, double *energy, double *momentum);

// Runs the elastic Kac process from the state's time to `t_end`, in place.
enum pc_status pc_kac_advance(struct pc_state *state,
                              const struct pc_kernel *kernel,
                              double t_end,
                              struct pc_rng *rng);

// Runs the inelastic thermostatted process to `t_end`, in place.
// `ordered_pairs` selects the ordered-pair clock (total rate `N - 1`).
enum pc_status pc_thermostat_advance(struct pc_state *state,
                                     const struct pc_kernel *kernel,
                                     double alpha,
                                     double nu,
                                     bool ordered_pairs,
                                     double t_end,
                                     struct pc_rng *rng);

// Limit-equation steady temperature; infinite when the bath wins.
enum pc_status pc_steady_temperature(const struct pc_kernel *kernel,
                                     double alpha,
                                     double nu,
                                     bool ordered_pairs,
                                     double *out);

// Exact `W_1` between two one-dimensional empirical measures.
enum pc_status pc_w1(const struct pc_state *a, const struct pc_state *b, double *out);

// Exact `W_2`: sorted coupling in one dimension, optimal matching above
// (equal particle counts, bounded by the assignment budget).
enum pc_status pc_w2(const struct pc_state *a, const struct pc_state *b, double *out);

// Sliced `W_2` over `projections` random directions, with its standard
// error (`std_error` may be null).
enum pc_status pc_w2_sliced(const struct pc_state *a,
                            const struct pc_state *b,
                            size_t projections,
                            struct pc_rng *rng,
                            double *out,
                            double *std_error);

// Toscani distance of order `s` between one-dimensional measures,
// evaluated on the uniform grid over `[-xi_max, xi_max]`.
enum pc_status pc_toscani(const struct pc_state *a,
                          const struct pc_state *b,
                          double s,
                          double xi_max,
                          size_t intervals,
                          double *out);

// Runs a CLI subcommand (`simulate`, `metric`, `chaos-curve`, `omega-n`,
// `check`) on TOML config text and returns the CSV the CLI would print.
// The string is written even when the status is `PC_STATUS_CHECK_FAILED`;
// release it with `pc_string_free`.
//
// `subcommand` and `config` must be NUL-terminated; `out_csv` must be valid.
enum pc_status pc_run_experiment(const char *subcommand,
                                 const char *config,
                                 size_t workers,
                                 char **out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROPCHAOS_H */
