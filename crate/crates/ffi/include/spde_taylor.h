#ifndef SPDE_TAYLOR_H
#define SPDE_TAYLOR_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum SptStatus {
  SPT_STATUS_OK = 0,
  SPT_STATUS_NULL_POINTER = 1,
  SPT_STATUS_INVALID_UTF8 = 2,
  SPT_STATUS_PARSE_ERROR = 3,
  SPT_STATUS_TREE_ERROR = 4,
  /**
   * Undefined order: the wood has no active tree.
   */
  SPT_STATUS_NO_ACTIVE_TREE = 5,
  SPT_STATUS_CONFIG_ERROR = 6,
  SPT_STATUS_MODEL_ERROR = 7,
  SPT_STATUS_SCHEME_ERROR = 8,
  SPT_STATUS_IO_ERROR = 9,
  SPT_STATUS_OUT_OF_RANGE = 10,
  SPT_STATUS_PANIC = 11,
} SptStatus;

typedef enum SptVerdict {
  SPT_VERDICT_PASS = 0,
  SPT_VERDICT_FAIL = 1,
  SPT_VERDICT_NOT_APPLICABLE = 2,
} SptVerdict;

/**
 * Opaque convergence report handle.
 */
typedef struct SptReport SptReport;

/**
 * Opaque wood handle.
 */
typedef struct SptWood SptWood;

/**
 * One row of a convergence report.
 */
typedef struct SptErrorRow {
  double h;
  double error;
  double std_error;
  size_t n_paths;
  size_t n_excluded;
  bool in_fit;
} SptErrorRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *spt_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void spt_string_free(char *s);

/**
 * The initial wood `(0);(1*);(2*)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SptStatus spt_wood_initial(struct SptWood **out);

/**
 * Parses wood text such as `(0);(1*[2]);(2*)`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` valid for writes.
 */
enum SptStatus spt_wood_parse(const char *text_in, struct SptWood **out);

/**
 * # Safety
 * `wood` must come from this library and not have been freed. Null is ignored.
 */
void spt_wood_free(struct SptWood *wood);

/**
 * Number of trees.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_len(const struct SptWood *wood, size_t *out);

/**
 * Number of active nodes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_active_count(const struct SptWood *wood, size_t *out);

/**
 * Active node `index` (0-based, lexicographic) as a 1-based (tree, node).
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_active_node(const struct SptWood *wood,
                                    size_t index,
                                    size_t *tree,
                                    size_t *node);

/**
 * New wood `E(tree, node)` of `wood`; the input is left untouched.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_expand(const struct SptWood *wood,
                               size_t tree,
                               size_t node,
                               struct SptWood **out);

/**
 * Numeric order at `(gamma, delta)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_order(const struct SptWood *wood, double gamma, double delta, double *out);

/**
 * Symbolic order, e.g. `δ + min(γ, δ)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_order_text(const struct SptWood *wood, char **out);

/**
 * Text form of the wood.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_serialize(const struct SptWood *wood, char **out);

/**
 * Scheme terms of the wood in compact form.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_wood_psi(const struct SptWood *wood, char **out);

/**
 * The multi-line report printed by `spde-taylor symbolic`.
 *
 * # Safety
 * `wood_text` must be a NUL-terminated string; `out` valid for writes.
 */
enum SptStatus spt_symbolic_report(const char *wood_text, char **out);

/**
 * Runs a convergence experiment. `config` holds `key = value` lines over
 * the defaults; null or empty means all defaults.
 *
 * # Safety
 * `config` must be null or NUL-terminated; `out` valid for writes.
 */
enum SptStatus spt_converge(const char *config, struct SptReport **out);

/**
 * # Safety
 * `report` must come from this library and not have been freed. Null is ignored.
 */
void spt_report_free(struct SptReport *report);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_verdict(const struct SptReport *report, enum SptVerdict *out);

/**
 * Fitted slope; NaN when there were too few points to fit.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_slope(const struct SptReport *report, double *out);

/**
 * Predicted order; NaN for the reference scheme.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_predicted(const struct SptReport *report, double *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_row_count(const struct SptReport *report, size_t *out);

/**
 * Row `index`, coarsest step first.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_row(const struct SptReport *report,
                              size_t index,
                              struct SptErrorRow *out);

/**
 * The report as JSON, as written to `report.json`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_json(const struct SptReport *report, char **out);

/**
 * The report as CSV, as written to `report.csv`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SptStatus spt_report_csv(const struct SptReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPDE_TAYLOR_H */
