/* C interface for the leakage-aware data market toolkit.
 *
 * Usage pattern: create a market from a JSON config, solve it into a
 * mechanism, then query allocations/payments or run audits, tradeoff
 * evaluation and Monte Carlo simulation. All functions return LM_OK (0) on
 * success or a nonzero status; lm_last_error() describes the most recent
 * failure on the calling thread. Strings returned through char** are owned
 * by the caller and must be released with lm_string_free().
 */
#ifndef LEAKMARKET_H
#define LEAKMARKET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes (stable; the CLI maps them 1:1 to exit codes). */
#define LM_OK 0
#define LM_ERR_CONFIG 2     /* malformed or invalid configuration */
#define LM_ERR_INFEASIBLE 3 /* budget below the leakage floor / empty market */
#define LM_AUDIT_FAILED 4   /* an audit invariant failed */
#define LM_ERR_REGIME 5     /* outside the regime the solver supports */
#define LM_ERR_ARGUMENT 10  /* bad argument to an API call */
#define LM_ERR_INTERNAL 11  /* internal invariant violation */

typedef struct lm_market lm_market;       /* validated configuration */
typedef struct lm_mechanism lm_mechanism; /* solved allocation + payments */

/* Library version string, e.g. "0.1.0". Static storage; do not free. */
const char* lm_version(void);

/* Message for the last failure on this thread. Static storage; do not free. */
const char* lm_last_error(void);

/* Release a string returned through a char** out-parameter. */
void lm_string_free(char* s);

/* ---- market lifecycle ---- */

int lm_market_create_from_json(const char* json_text, lm_market** out);
int lm_market_create_from_file(const char* path, lm_market** out);
void lm_market_free(lm_market* market);

/* Model-assumption report (bounded leakage, monotone data link, outsider
 * cost dominated, regular virtual costs at the default rates) as JSON.
 * Returns LM_AUDIT_FAILED when an assumption is violated. */
int lm_market_validate(const lm_market* market, char** report_json);

/* Canonical config hash as a 16-digit hex string. */
int lm_market_hash(const lm_market* market, char** hex);

/* Number of agent groups. */
int lm_market_group_count(const lm_market* market, int* out);

/* ---- solving ---- */

/* Solve at the given participation rates (one per group), or at the config's
 * default rates when rates is NULL. */
int lm_market_solve(const lm_market* market, const double* rates,
                    int n_rates, lm_mechanism** out);
void lm_mechanism_free(lm_mechanism* mech);

/* Structure, thresholds, constants and budget accounting as JSON. */
int lm_mechanism_describe(const lm_mechanism* mech, char** json);

/* Selection probability / payment for a report at the given cost. */
int lm_mechanism_allocation_at(const lm_mechanism* mech, int group,
                               double cost, double* out);
int lm_mechanism_payment_at(const lm_mechanism* mech, int group, double cost,
                            double* out);

/* ---- certification ---- */

/* Truthfulness, participation and leakage-underpayment audits as JSON.
 * Returns LM_AUDIT_FAILED when any audited invariant fails. */
int lm_mechanism_audit(const lm_mechanism* mech, int samples,
                       unsigned long long seed, char** report_json);

/* Worst-case bias/variance tradeoff via the lifted discrete game (panels
 * atoms), plus the closed-form objective when the low-budget regime holds. */
int lm_mechanism_tradeoff(const lm_mechanism* mech, int panels, char** json);

/* Monte Carlo estimator moments vs the closed forms. batch_size 1 keeps
 * replications independent. */
int lm_mechanism_simulate(const lm_mechanism* mech, unsigned long long seed,
                          long long replications, int batch_size,
                          char** report_json);

/* Discrete-game oracle table at the given panelization: one CSV row per
 * atom (phi, mass, saddle allocation, saddle adversary), with the case tag
 * and multiplier in the header comment. */
int lm_market_oracle_table(const lm_market* market, const double* rates,
                           int n_rates, int panels, char** csv);

/* Full-participation scan over a rate grid (steps points per group). */
int lm_market_full_participation(const lm_market* market, int steps,
                                 char** report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LEAKMARKET_H */
