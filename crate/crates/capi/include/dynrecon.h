#ifndef DYNRECON_H
#define DYNRECON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum DrStatus {
  DR_STATUS_OK = 0,
  DR_STATUS_NULL_POINTER = 1,
  DR_STATUS_INVALID_ARGUMENT = 2,
  DR_STATUS_SOLVER_FAILURE = 3,
  DR_STATUS_PANIC = 4,
} DrStatus;

/**
 * An assembled inverse problem (forward model, data, dictionary, mask).
 */
typedef struct DrProblem DrProblem;

/**
 * A finished reconstruction with its quality scores.
 */
typedef struct DrResult DrResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a problem from a complete experiment configuration in TOML form.
 *
 * # Safety
 * `toml_text` must be a valid NUL-terminated string and `out` a valid
 * pointer slot.
 */
enum DrStatus dr_problem_from_config(const char *toml_text, struct DrProblem **out);

/**
 * Build the default moving-block tomography problem: `image_size` square
 * frames, alternating-angle parallel-beam sampling, Gaussian noise at
 * `noise_sigma_rel` times the peak sinogram value.
 *
 * # Safety
 * `out` must be a valid pointer slot.
 */
enum DrStatus dr_problem_default(uint32_t image_size,
                                 uint32_t n_frames,
                                 uint32_t angles_per_frame,
                                 double noise_sigma_rel,
                                 uint64_t seed,
                                 struct DrProblem **out);

/**
 * # Safety
 * `problem` must come from a `dr_problem_*` constructor and not have been
 * freed.
 */
void dr_problem_free(struct DrProblem *problem);

/**
 * Number of values in the ground-truth stack (0 when no truth exists).
 *
 * # Safety
 * `problem` must be a live handle.
 */
uintptr_t dr_problem_truth_len(const struct DrProblem *problem);

/**
 * Copy the ground-truth stack (frame-major, row-major frames) into
 * `buffer`.
 *
 * # Safety
 * `buffer` must point to at least `len` doubles.
 */
enum DrStatus dr_problem_truth(const struct DrProblem *problem, double *buffer, uintptr_t len);

/**
 * Reconstruct with the hierarchical-Bayesian IAS solver.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer slot.
 */
enum DrStatus dr_reconstruct_ias(const struct DrProblem *problem,
                                 double eta,
                                 double theta_scale,
                                 uint32_t max_outer_iters,
                                 uint32_t inner_cap,
                                 struct DrResult **out);

/**
 * Reconstruct with the compressed-sensing ADMM baseline.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer slot.
 */
enum DrStatus dr_reconstruct_admm(const struct DrProblem *problem,
                                  double mu_spatial,
                                  double mu_temporal,
                                  double rho,
                                  uint32_t max_outer_iters,
                                  uint32_t inner_cap,
                                  struct DrResult **out);

/**
 * Reconstruct with lightly damped least squares (LSMR, damp = sqrt(lambda)).
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer slot.
 */
enum DrStatus dr_reconstruct_lsq(const struct DrProblem *problem,
                                 double lambda,
                                 uint32_t max_iters,
                                 struct DrResult **out);

/**
 * Values in the reconstruction stack.
 *
 * # Safety
 * `result` must be a live handle.
 */
uintptr_t dr_result_len(const struct DrResult *result);

/**
 * Stack geometry.
 *
 * # Safety
 * All pointers must be valid.
 */
enum DrStatus dr_result_shape(const struct DrResult *result,
                              uint32_t *n_frames,
                              uint32_t *height,
                              uint32_t *width);

/**
 * Copy the reconstruction (modulus for complex problems) into `buffer`.
 *
 * # Safety
 * `buffer` must point to at least `len` doubles.
 */
enum DrStatus dr_result_copy_image(const struct DrResult *result, double *buffer, uintptr_t len);

/**
 * Time-averaged masked SSIM against the ground truth (NaN when no truth).
 *
 * # Safety
 * `result` must be a live handle.
 */
double dr_result_ssim(const struct DrResult *result);

/**
 * Normalized RMSE against the ground truth (NaN when no truth).
 *
 * # Safety
 * `result` must be a live handle.
 */
double dr_result_nrmse(const struct DrResult *result);

/**
 * Outer iterations the solver performed.
 *
 * # Safety
 * `result` must be a live handle.
 */
uint32_t dr_result_outer_iters(const struct DrResult *result);

/**
 * # Safety
 * `result` must come from a reconstruct call and not have been freed.
 */
void dr_result_free(struct DrResult *result);

/**
 * Message describing the most recent error on this thread; valid until the
 * next failing call.
 */
const char *dr_last_error(void);

/**
 * Library version as a static string.
 */
const char *dr_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DYNRECON_H */
