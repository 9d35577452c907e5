#ifndef MRVB_H
#define MRVB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MRVB_API __declspec(dllexport)
#else
#define MRVB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returning mrvb_status leaves a message for mrvb_last_error()
   on failure. Matrices cross the boundary column-major. The *_write functions
   expect an existing directory. */
typedef enum {
  MRVB_OK = 0,
  MRVB_ERR_INVALID_ARGUMENT = 1,
  MRVB_ERR_DATA = 2,
  MRVB_ERR_NUMERICAL = 3,
  MRVB_ERR_IO = 4,
  MRVB_ERR_INTERNAL = 5
} mrvb_status;

/* Message of the last failure on the calling thread, "" if none. */
MRVB_API const char* mrvb_last_error(void);
MRVB_API const char* mrvb_version(void);

typedef struct mrvb_dataset mrvb_dataset;
typedef struct mrvb_fit_result mrvb_fit_result;
typedef struct mrvb_simulation mrvb_simulation;
typedef struct mrvb_fdr_result mrvb_fdr_result;
typedef struct mrvb_oracle_result mrvb_oracle_result;
typedef struct mrvb_cv_result mrvb_cv_result;

typedef struct {
  double a, b;        /* omega_s ~ Beta(a, b); ignored when p_star > 0 */
  double eta, kappa;  /* tau_t ~ Gamma(eta, kappa) */
  double lambda, nu;  /* sigma^-2 ~ Gamma(lambda, nu) */
  double p_star;      /* > 0: a = 1, b = d (p - p_star) / p_star */
} mrvb_prior;

typedef struct {
  double tol;
  size_t maxit;
  size_t restarts;
  uint64_t seed;
  int parallel_responses;
  size_t workers; /* 0: hardware concurrency */
} mrvb_fit_options;

MRVB_API void mrvb_prior_default(mrvb_prior* prior);
MRVB_API void mrvb_fit_options_default(mrvb_fit_options* options);

/* Prior calculus */
MRVB_API mrvb_status mrvb_corrected_b(size_t p, size_t d, double p_star, double* b);
MRVB_API mrvb_status mrvb_prior_activation_probability(double a, double b, size_t d, double* out);
MRVB_API mrvb_status mrvb_prior_odds_ratio(double a, double b, size_t d, size_t q, double* out);

/* Datasets. X is n x p and Y is n x d; both are standardized on creation. */
MRVB_API mrvb_status mrvb_dataset_from_arrays(const double* X, const double* Y, size_t n, size_t p, size_t d,
                                             mrvb_dataset** out);
MRVB_API mrvb_status mrvb_dataset_load(const char* x_path, const char* y_path, mrvb_dataset** out);
MRVB_API void mrvb_dataset_dims(const mrvb_dataset* ds, size_t* n, size_t* p, size_t* d);
MRVB_API size_t mrvb_dataset_warning_count(const mrvb_dataset* ds);
MRVB_API const char* mrvb_dataset_warning(const mrvb_dataset* ds, size_t i);
MRVB_API void mrvb_dataset_free(mrvb_dataset* ds);

/* Fitting */
MRVB_API mrvb_status mrvb_fit(const mrvb_dataset* ds, const mrvb_prior* prior, const mrvb_fit_options* options,
                             mrvb_fit_result** out);
MRVB_API void mrvb_fit_dims(const mrvb_fit_result* fit, size_t* p, size_t* d);
MRVB_API void mrvb_fit_ppi(const mrvb_fit_result* fit, double* out);        /* p x d */
MRVB_API void mrvb_fit_beta_mean(const mrvb_fit_result* fit, double* out);  /* p x d */
MRVB_API void mrvb_fit_omega(const mrvb_fit_result* fit, double* out);      /* p */
MRVB_API size_t mrvb_fit_trace_length(const mrvb_fit_result* fit);
MRVB_API void mrvb_fit_trace(const mrvb_fit_result* fit, double* out);
MRVB_API double mrvb_fit_elbo(const mrvb_fit_result* fit);
MRVB_API size_t mrvb_fit_iterations(const mrvb_fit_result* fit);
MRVB_API int mrvb_fit_converged(const mrvb_fit_result* fit);
/* Writes ppi.tsv, omega.tsv, beta_mean.tsv and elbo_trace.tsv into dir, which must exist. */
MRVB_API mrvb_status mrvb_fit_write(const mrvb_fit_result* fit, const mrvb_dataset* ds, const char* dir);
MRVB_API void mrvb_fit_free(mrvb_fit_result* fit);

/* Simulation */
typedef enum {
  MRVB_INDEPENDENT = 0,
  MRVB_AUTOCORRELATED = 1,
  MRVB_EQUICORRELATED = 2
} mrvb_dependence;

/* Consecutive blocks of block_size (0: a single block). Block k uses
   rho[k % rho_count] and padd_multiplier[k % padd_multiplier_count]; either
   array may be NULL. */
typedef struct {
  int structure;
  size_t block_size;
  const double* rho;
  size_t rho_count;
  const double* padd_multiplier;
  size_t padd_multiplier_count;
} mrvb_block_layout;

typedef struct {
  size_t n, p, d, p0, d0;
  double maf_lo, maf_hi;
  double p_add;
  double target_pve; /* mean over planted associations */
  double shape_a, shape_b;
  uint64_t seed;
  mrvb_block_layout covariates;
  mrvb_block_layout responses;
} mrvb_sim_options;

MRVB_API void mrvb_sim_options_default(mrvb_sim_options* options);
MRVB_API mrvb_status mrvb_simulate(const mrvb_sim_options* options, mrvb_simulation** out);
MRVB_API void mrvb_simulation_beta(const mrvb_simulation* sim, double* out);   /* p x d */
MRVB_API void mrvb_simulation_maf(const mrvb_simulation* sim, double* out);    /* p */
MRVB_API mrvb_status mrvb_simulation_dataset(const mrvb_simulation* sim, mrvb_dataset** out);
/* Writes X.tsv, Y.tsv, truth.tsv (s, t, beta triplets), maf.tsv and residual_sd.tsv. */
MRVB_API mrvb_status mrvb_simulation_write(const mrvb_simulation* sim, const char* dir);
MRVB_API void mrvb_simulation_free(mrvb_simulation* sim);

/* Permutation FDR */
typedef struct {
  size_t B;
  uint64_t seed;
  size_t workers;     /* concurrent permutation fits */
  const double* grid; /* NULL: 50 points from 0.01 to 0.99 */
  size_t grid_length;
} mrvb_fdr_options;

MRVB_API void mrvb_fdr_options_default(mrvb_fdr_options* options);
MRVB_API mrvb_status mrvb_permute_fdr(const mrvb_dataset* ds, const mrvb_prior* prior,
                                     const mrvb_fit_options* fit_options, const mrvb_fdr_options* options,
                                     const mrvb_fit_result* observed, mrvb_fdr_result** out);
MRVB_API size_t mrvb_fdr_curve_length(const mrvb_fdr_result* res);
MRVB_API void mrvb_fdr_curve(const mrvb_fdr_result* res, double* tau, double* fdr, int* no_discoveries);
/* *found is 0 when the target is not reached on the grid. */
MRVB_API mrvb_status mrvb_fdr_threshold(const mrvb_fdr_result* res, double target, double* tau, int* found);
/* Writes fdr_curve.tsv, thresholds.tsv and declarations.tsv for each target. */
MRVB_API mrvb_status mrvb_fdr_write(const mrvb_fdr_result* res, const mrvb_fit_result* observed,
                                   const mrvb_dataset* ds, const double* targets, size_t n_targets, const char* dir);
MRVB_API void mrvb_fdr_free(mrvb_fdr_result* res);

/* Per-column thresholds tau * median(ppi[, t]) / median(ppi) for an
   externally produced p x d PPI matrix. */
MRVB_API mrvb_status mrvb_adaptive_thresholds(const double* ppi, size_t p, size_t d, double tau, double* out);

/* Exact oracle */
typedef struct {
  size_t n_draws;
  uint64_t seed;
  size_t max_p;
} mrvb_oracle_options;

typedef struct {
  double log_evidence;
  double std_error;
  double elbo;
  double relative_gap;
  double log10_relative_gap;
  int bound_holds;
} mrvb_tightness;

MRVB_API void mrvb_oracle_options_default(mrvb_oracle_options* options);
MRVB_API mrvb_status mrvb_oracle_check(const mrvb_dataset* ds, const mrvb_prior* prior,
                                      const mrvb_fit_options* fit_options, const mrvb_oracle_options* options,
                                      mrvb_oracle_result** out);
MRVB_API void mrvb_oracle_tightness(const mrvb_oracle_result* res, mrvb_tightness* out);
/* Writes tightness.tsv, ppi_comparison.tsv and omega_comparison.tsv. */
MRVB_API mrvb_status mrvb_oracle_write(const mrvb_oracle_result* res, const mrvb_dataset* ds, const char* dir);
MRVB_API void mrvb_oracle_free(mrvb_oracle_result* res);

/* Cross-validation over p_star */
typedef enum { MRVB_CV_PREDICTIVE = 0, MRVB_CV_TRAINING_ELBO = 1 } mrvb_cv_objective;

typedef struct {
  size_t folds;
  uint64_t seed;
  int objective;
  size_t workers;
} mrvb_cv_options;

MRVB_API void mrvb_cv_options_default(mrvb_cv_options* options);
MRVB_API mrvb_status mrvb_cross_validate(const mrvb_dataset* ds, const double* grid, size_t grid_length,
                                        const mrvb_prior* prior, const mrvb_fit_options* fit_options,
                                        const mrvb_cv_options* options, mrvb_cv_result** out);
MRVB_API double mrvb_cv_selected(const mrvb_cv_result* res);
/* Writes cv_scores.tsv. */
MRVB_API mrvb_status mrvb_cv_write(const mrvb_cv_result* res, const char* dir);
MRVB_API void mrvb_cv_free(mrvb_cv_result* res);

#ifdef __cplusplus
}
#endif

#endif /* MRVB_H */
