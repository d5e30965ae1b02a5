#ifndef SPLITMC_H
#define SPLITMC_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum SmcStatus {
  SMC_STATUS_OK = 0,
  SMC_STATUS_NULL_POINTER = 1,
  SMC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A stated validity predicate does not hold (e.g. no strong convexity).
   */
  SMC_STATUS_VALIDITY_VIOLATION = 3,
  /**
   * Quadrature, minimization or rejection sampling failed.
   */
  SMC_STATUS_NUMERICAL_FAILURE = 4,
  SMC_STATUS_PANIC = 5,
} SmcStatus;

typedef enum SmcTheorem {
  SMC_THEOREM_W1_SINGLE = 0,
  SMC_THEOREM_TV_SINGLE = 1,
  SMC_THEOREM_TV_MULTI = 2,
  SMC_THEOREM_TV_NON_STRONGLY = 3,
} SmcTheorem;

typedef enum SmcBranch {
  SMC_BRANCH_EPSILON_SQUARED = 0,
  SMC_BRANCH_CONDITION_NUMBER = 1,
  SMC_BRANCH_TIE = 2,
  SMC_BRANCH_BIAS_BUDGET = 3,
  SMC_BRANCH_VALIDITY_CAP = 4,
  SMC_BRANCH_SINGLE = 5,
} SmcBranch;

typedef enum SmcDistance {
  SMC_DISTANCE_TV = 0,
  SMC_DISTANCE_W1 = 1,
} SmcDistance;

/**
 * Opaque chain handle.
 */
typedef struct SmcChain SmcChain;

/**
 * Opaque model handle.
 */
typedef struct SmcModel SmcModel;

/**
 * Parameters of the zoo models; unused fields are ignored.
 */
typedef struct SmcZooParams {
  double sigma;
  size_t b;
  double mu;
  size_t d;
  size_t n;
  double kappa;
  uint64_t seed;
} SmcZooParams;

typedef struct SmcPlan {
  double rho2;
  uint64_t t_mix;
  double t_mix_real;
  double k_sgs;
  /**
   * NaN when the plan has no initial-divergence constant.
   */
  double c;
  /**
   * NaN unless the plan regularizes the model.
   */
  double lambda;
  enum SmcBranch branch;
} SmcPlan;

typedef struct SmcBias {
  double value;
  double raw;
  bool valid;
  enum SmcDistance distance;
} SmcBias;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *smc_last_error(void);

/**
 * Default zoo parameters.
 */
struct SmcZooParams smc_zoo_params_default(void);

/**
 * Builds a zoo model by name (`toy-gaussian-1`, `aniso-gaussian`, ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string, `params` may be null (defaults)
 * or point to a valid struct, and `out` must be writable.
 */
enum SmcStatus smc_model_zoo(const char *name,
                             const struct SmcZooParams *params,
                             struct SmcModel **out);

/**
 * Releases a model handle; null is ignored.
 *
 * # Safety
 * `model` must come from this API and not be used afterwards.
 */
void smc_model_free(struct SmcModel *model);

/**
 * Dimension of θ, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t smc_model_dim(const struct SmcModel *model);

/**
 * Number of factors `b`, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t smc_model_num_factors(const struct SmcModel *model);

/**
 * Minimizes the potential and returns a new, centered model. When
 * `theta_star` is non-null it receives the minimizer (`dim` entries).
 *
 * # Safety
 * `model` must be live, `out` writable, `theta_star` null or valid for
 * `dim` writes.
 */
enum SmcStatus smc_model_center(const struct SmcModel *model,
                                struct SmcModel **out,
                                double *theta_star);

/**
 * Contraction constant `K_SGS` at coupling `rho`.
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
enum SmcStatus smc_k_sgs(const struct SmcModel *model, double rho, double *out);

/**
 * Plan from explicit constants. `d` is ignored by the Wasserstein plan and
 * `radius` is used only by the non-strongly-convex plan.
 *
 * # Safety
 * `out` must be writable.
 */
enum SmcStatus smc_plan_single(enum SmcTheorem theorem,
                               double m1,
                               double big_m1,
                               size_t d,
                               double radius,
                               double eps,
                               struct SmcPlan *out);

/**
 * Multi-split TV plan for a centered model.
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
enum SmcStatus smc_plan_multi(const struct SmcModel *model, double eps, struct SmcPlan *out);

/**
 * TV bias bound for Lipschitz factors.
 *
 * # Safety
 * `lipschitz` and `dims` must hold `n` entries; `out` must be writable.
 */
enum SmcStatus smc_bias_tv_lipschitz(const double *lipschitz,
                                     const size_t *dims,
                                     size_t n,
                                     double rho,
                                     struct SmcBias *out);

/**
 * TV bias bound for smooth, strongly convex models.
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
enum SmcStatus smc_bias_tv_strongly_convex(const struct SmcModel *model,
                                           double rho,
                                           struct SmcBias *out);

/**
 * Single-split W₁ bias bound.
 *
 * # Safety
 * `out` must be writable.
 */
enum SmcStatus smc_bias_w1_single(double big_m1, size_t d, double rho, struct SmcBias *out);

/**
 * Parabolic cylinder function `D₋ν(z)` for `ν > 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SmcStatus smc_parabolic_cylinder(double nu, double z, double *out);

/**
 * Creates a chain at `theta0` (`dim` entries), or at the model's
 * minimizer / the origin when `theta0` is null.
 *
 * # Safety
 * `model` must be live, `theta0` null or valid for `dim` reads, `out`
 * writable.
 */
enum SmcStatus smc_chain_new(const struct SmcModel *model,
                             double rho,
                             uint64_t seed,
                             const double *theta0,
                             struct SmcChain **out);

/**
 * Advances a chain by `sweeps` sweeps. When `proposals` is non-null it
 * receives the total number of rejection-sampler proposals.
 *
 * # Safety
 * `chain` must be live; `proposals` null or writable.
 */
enum SmcStatus smc_chain_step(struct SmcChain *chain, uint64_t sweeps, uint64_t *proposals);

/**
 * Copies the current θ into `out`, which must hold `len >= dim` entries.
 *
 * # Safety
 * `chain` must be live and `out` valid for `len` writes.
 */
enum SmcStatus smc_chain_theta(const struct SmcChain *chain, double *out, size_t len);

/**
 * Number of completed sweeps, or 0 for a null handle.
 *
 * # Safety
 * `chain` must be null or live.
 */
uint64_t smc_chain_sweeps(const struct SmcChain *chain);

/**
 * Releases a chain handle; null is ignored.
 *
 * # Safety
 * `chain` must come from this API and not be used afterwards.
 */
void smc_chain_free(struct SmcChain *chain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITMC_H */
