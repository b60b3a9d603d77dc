/*
 * coxnet C API.
 *
 * Opaque handles own all C++ state; every function returns a coxnet_status
 * and leaves a thread-local message for coxnet_last_error() on failure.
 * Status values double as the command-line exit codes.
 */
#ifndef COXNET_COXNET_H_
#define COXNET_COXNET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COXNET_API __declspec(dllexport)
#else
#define COXNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum coxnet_status {
  COXNET_OK = 0,
  COXNET_ERR_USAGE = 1,    /* invalid argument or configuration */
  COXNET_ERR_INPUT = 2,    /* missing, unreadable or malformed input */
  COXNET_ERR_NUMERIC = 3,  /* non-convergence, overflow, singular system */
  COXNET_ERR_INTERNAL = 4
} coxnet_status;

enum { COXNET_SENTIMENT_POS = 0, COXNET_SENTIMENT_NEG = 1 };
enum { COXNET_RISK_ALL_NODES = 0, COXNET_RISK_EVER_ACTIVE = 1 };
enum { COXNET_SIG_POS = 0, COXNET_SIG_NEG = 1, COXNET_NOT_SIG = 2 };
enum { COXNET_LABEL_POS = 0, COXNET_LABEL_NEG = 1, COXNET_LABEL_NEU = 2, COXNET_LABEL_UNR = 3 };

typedef struct coxnet_log coxnet_log;
typedef struct coxnet_fit coxnet_fit;
typedef struct coxnet_profile coxnet_profile;

COXNET_API const char* coxnet_version(void);
/* Message for the last failed call on this thread; "" if none. */
COXNET_API const char* coxnet_last_error(void);

/* ---- event logs ------------------------------------------------------- */

typedef struct coxnet_log_stats {
  size_t events;
  size_t nodes;
  size_t tweets;
  size_t follows;
  size_t labels[4]; /* indexed by COXNET_LABEL_* */
  size_t duplicate_follows_dropped;
  double first_time; /* NaN for an empty log */
  double last_time;
} coxnet_log_stats;

COXNET_API coxnet_status coxnet_log_read(const char* path, coxnet_log** out);
COXNET_API coxnet_status coxnet_log_parse(const char* text, size_t length, coxnet_log** out);
/* Header lines are written as '#' comments before the events. */
COXNET_API coxnet_status coxnet_log_write(const coxnet_log* log, const char* path,
                                          const char* const* header_lines, size_t header_count);
COXNET_API coxnet_status coxnet_log_stats_get(const coxnet_log* log, coxnet_log_stats* out);
COXNET_API void coxnet_log_free(coxnet_log* log);

/* ---- fitting ---------------------------------------------------------- */

typedef struct coxnet_fit_options {
  const char* covariates; /* "focal", "full" or comma-separated names; NULL means "full" */
  int risk_set;           /* COXNET_RISK_* */
  int standardize;        /* z-score covariates over the window's risk sets */
  double t_start;         /* analysis window; -INFINITY/+INFINITY for none */
  double t_end;
  int max_iterations;
  double gradient_tolerance;
  int step_halving_limit;
  double ridge;
  double confidence_level;
} coxnet_fit_options;

COXNET_API void coxnet_fit_options_init(coxnet_fit_options* options);

/* On COXNET_OK or COXNET_ERR_NUMERIC (non-convergence, separation) *out holds
 * the fit; any other status leaves *out NULL. */
COXNET_API coxnet_status coxnet_fit_run(const coxnet_log* log, const coxnet_fit_options* options,
                                        int sentiment, coxnet_fit** out);

typedef struct coxnet_fit_summary {
  size_t dimension;
  size_t events;
  int converged;
  int iterations;
  int ridge_applied;
  int separation;
  double loglik;
  double gradient_norm;
} coxnet_fit_summary;

typedef struct coxnet_coefficient {
  const char* name; /* valid while the fit handle lives */
  double estimate;
  double se;
  double ci_lower;
  double ci_upper;
  int significance; /* COXNET_SIG_* */
} coxnet_coefficient;

COXNET_API coxnet_status coxnet_fit_summary_get(const coxnet_fit* fit, coxnet_fit_summary* out);
COXNET_API coxnet_status coxnet_fit_coefficient(const coxnet_fit* fit, size_t index,
                                                coxnet_coefficient* out);
/* metadata: alternating key, value strings (2 * pairs entries). */
COXNET_API coxnet_status coxnet_fit_write_table(const coxnet_fit* fit, const char* path,
                                                const char* const* metadata, size_t pairs);
COXNET_API coxnet_status coxnet_fit_write_baseline(const coxnet_fit* fit, const char* path);
COXNET_API void coxnet_fit_free(coxnet_fit* fit);

/* Covariate rows at each opinionated event time in the window. */
COXNET_API coxnet_status coxnet_trace_write(const coxnet_log* log, const coxnet_fit_options* options,
                                            const char* path, int actors_only);

/* ---- simulation ------------------------------------------------------- */

typedef struct coxnet_sim_options {
  size_t nodes;
  double p_edge;
  double p_reciprocal;
  const char* edge_list_path; /* "<follower> <followee>" lines; NULL for Erdos-Renyi */
  const char* covariates;     /* NULL means "focal" */
  const double* beta_pos;     /* NULL means zeros */
  size_t beta_pos_length;
  const double* beta_neg;
  size_t beta_neg_length;
  double baseline_pos;
  double baseline_neg;
  double neutral_rate;
  double follow_rate;
  double horizon;
  uint64_t seed;
} coxnet_sim_options;

COXNET_API void coxnet_sim_options_init(coxnet_sim_options* options);
COXNET_API coxnet_status coxnet_simulate(const coxnet_sim_options* options, coxnet_log** out);

/* ---- misclassification resampling ------------------------------------ */

typedef struct coxnet_confusion {
  double q[4][4]; /* q[predicted][true], rows indexed by COXNET_LABEL_* */
} coxnet_confusion;

COXNET_API void coxnet_confusion_identity(coxnet_confusion* out);
COXNET_API coxnet_status coxnet_confusion_read(const char* path, coxnet_confusion* out);
COXNET_API coxnet_status coxnet_confusion_estimate(const char* calibration_path, double smoothing,
                                                   coxnet_confusion* out);
COXNET_API coxnet_status coxnet_confusion_write(const coxnet_confusion* model, const char* path);

typedef struct coxnet_resample_options {
  coxnet_fit_options fit;
  size_t realizations;
  uint64_t master_seed;
  unsigned threads; /* 0 = hardware concurrency */
} coxnet_resample_options;

COXNET_API void coxnet_resample_options_init(coxnet_resample_options* options);
COXNET_API coxnet_status coxnet_resample_run(const coxnet_log* log,
                                             const coxnet_resample_options* options,
                                             const coxnet_confusion* model, coxnet_profile** out);

typedef struct coxnet_profile_summary {
  size_t realizations;
  size_t dimension;
  size_t included[2]; /* indexed by COXNET_SENTIMENT_* */
  size_t excluded[2];
} coxnet_profile_summary;

COXNET_API coxnet_status coxnet_profile_summary_get(const coxnet_profile* profile,
                                                    coxnet_profile_summary* out);
COXNET_API coxnet_status coxnet_profile_fractions(const coxnet_profile* profile, int sentiment,
                                                  size_t coefficient, double* sig_pos,
                                                  double* sig_neg, double* not_sig);
/* Writes profile_pos.tsv, profile_neg.tsv and summary.tsv into directory. */
COXNET_API coxnet_status coxnet_profile_write_tables(const coxnet_profile* profile,
                                                     const char* directory);
/* Reads profile_pos.tsv and profile_neg.tsv from directory. */
COXNET_API coxnet_status coxnet_profile_read(const char* directory, coxnet_profile** out);
/* One SVG per focal coefficient (or every coefficient) and sentiment. */
COXNET_API coxnet_status coxnet_profile_render(const coxnet_profile* profile, const char* directory,
                                               int all_coefficients, int deterministic,
                                               size_t* plots_written);
COXNET_API void coxnet_profile_free(coxnet_profile* profile);

/* ---- utilities -------------------------------------------------------- */

/* Lowercase hex SHA-256 of a file's bytes; out must hold 65 chars. */
COXNET_API coxnet_status coxnet_file_sha256(const char* path, char* out);
COXNET_API uint64_t coxnet_derive_seed(uint64_t master, uint64_t counter);

#ifdef __cplusplus
}
#endif

#endif /* COXNET_COXNET_H_ */
