/* C ABI for the poisdep library.
 *
 * Objects cross the boundary as opaque handles created and freed by
 * pd_*_new / pd_*_free pairs. Fallible calls return a PdStatus; on
 * anything but PD_OK, pd_last_error() retrieves a thread-local message.
 * Buffers are caller-allocated; the *_len / pd_draws_kept calls report
 * the required capacity.
 */

#ifndef POISDEP_H
#define POISDEP_H

#include <stdbool.h>
#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum PdStatus {
  PD_OK = 0,
  PD_INVALID_ARGUMENT = 1,
  PD_DOMAIN_ERROR = 2,
  PD_INFEASIBLE = 3,
  PD_RUNTIME_ERROR = 4,
} PdStatus;

typedef enum PdModelKind {
  PD_TYPE_A = 0,
  PD_TYPE_B = 1,
  PD_INAR1 = 2,
} PdModelKind;

typedef struct PdPriors {
  double a_alpha;
  double b_alpha;
  double a_mu;
  double b_mu;
} PdPriors;

typedef struct PdMcmcConfig {
  uint64_t iterations;
  uint64_t burn_in;
  uint64_t thin;
  uint64_t seed;
  uint64_t stream;
  uint64_t alpha_grid;
  double tail_tol;
  bool keep_latents;
} PdMcmcConfig;

/* Opaque handles. */
typedef struct PdSeries PdSeries;
typedef struct PdDraws PdDraws;
typedef struct PdPredictive PdPredictive;

/* Library version as a static NUL-terminated string. */
const char *pd_version(void);

/* Copy the last error message (NUL-terminated, truncated to cap) into buf;
 * returns the full message length in bytes without the NUL. buf may be
 * NULL to query the length. */
size_t pd_last_error(char *buf, size_t cap);

PdPriors pd_priors_default(void);
PdMcmcConfig pd_mcmc_config_default(void);

/* Wrap len observed counts into a series handle. */
PdStatus pd_series_new(const uint64_t *counts, size_t len, PdSeries **out);
void pd_series_free(PdSeries *s);
size_t pd_series_len(const PdSeries *s);
PdStatus pd_series_counts(const PdSeries *s, uint64_t *out, size_t cap);

/* Simulate a contiguous order-p series. alpha holds one stationary value
 * (alpha_len == 1) or one value per index (alpha_len == len). w_divisor 0
 * means the default p+1. For PD_INAR1, p and w_divisor are ignored. */
PdStatus pd_simulate(PdModelKind kind, double mu, const double *alpha,
                     size_t alpha_len, size_t p, size_t len, size_t w_divisor,
                     uint64_t seed, uint64_t stream, PdSeries **out);

/* Run the Gibbs sampler; p is ignored for PD_INAR1. */
PdStatus pd_fit(PdModelKind kind, const PdSeries *series, size_t p,
                PdPriors priors, PdMcmcConfig config, PdDraws **out);
void pd_draws_free(PdDraws *d);
size_t pd_draws_kept(const PdDraws *d);
PdStatus pd_draws_mu(const PdDraws *d, double *out, size_t cap);
double pd_draws_mu_mean(const PdDraws *d);
PdStatus pd_draws_alpha_mean(const PdDraws *d, double *out, size_t cap);

/* One predictive replicate per kept draw, summarized per index. */
PdStatus pd_posterior_predictive(const PdDraws *draws, const PdSeries *series,
                                 double level, uint64_t seed, uint64_t stream,
                                 PdPredictive **out);
void pd_predictive_free(PdPredictive *p);
PdStatus pd_predictive_moments(const PdPredictive *pred, double *mean_out,
                               double *var_out, size_t cap);

/* L(nu) = mean predictive variance + nu * mean squared bias. */
PdStatus pd_l_measure(const PdPredictive *pred, const PdSeries *series,
                      double nu, double *out);

/* Closed-form autocorrelations. alpha carries the per-index thinning
 * probabilities (1-based t; entries before t resolve lagged indices). */
PdStatus pd_acf_type_a(const double *alpha, size_t alpha_len, size_t p,
                       size_t t, size_t s, double *out);
PdStatus pd_acf_type_b(const double *alpha, size_t alpha_len, size_t p,
                       size_t t, size_t s, double *out);
double pd_acf_inar1(double alpha, size_t s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* POISDEP_H */
