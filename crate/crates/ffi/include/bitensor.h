#ifndef BITENSOR_H
#define BITENSOR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum BtStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  BT_STATUS_OK = 0,
  BT_STATUS_NULL_POINTER = 1,
  BT_STATUS_INVALID_UTF8 = 2,
  BT_STATUS_PARSE = 3,
  BT_STATUS_EVAL = 4,
  BT_STATUS_CONFIG = 5,
  BT_STATUS_GEOMETRY = 6,
  BT_STATUS_NOT_FOUND = 7,
  BT_STATUS_PANIC = 8,
};
#ifndef __cplusplus
typedef int32_t BtStatus;
#endif // __cplusplus

/**
 * A validated scenario configuration.
 */
typedef struct BtConfig BtConfig;

/**
 * A parsed expression together with its ordered variable list.
 */
typedef struct BtExpr BtExpr;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bt_last_error_message(void);

/**
 * Parses `source` over the `n_vars` variable names in `vars`.
 *
 * # Safety
 * `source` and each of `vars[0..n_vars]` must be NUL-terminated strings;
 * `out` must be writable.
 */
int32_t bt_expr_parse(const char *source,
                      const char *const *vars,
                      size_t n_vars,
                      struct BtExpr **out);

/**
 * Evaluates at `values`, given in the order the variables were declared.
 *
 * # Safety
 * `expr` must come from this library; `values` must hold `n_values` doubles.
 */
int32_t bt_expr_eval(const struct BtExpr *expr, const double *values, size_t n_values, double *out);

/**
 * Symbolic partial derivative with respect to `var`.
 *
 * # Safety
 * `expr` must come from this library; `var` must be NUL-terminated.
 */
int32_t bt_expr_differentiate(const struct BtExpr *expr, const char *var, struct BtExpr **out);

/**
 * Canonical text of an expression.
 *
 * # Safety
 * `expr` must come from this library; `out` must be writable.
 */
int32_t bt_expr_to_string(const struct BtExpr *expr, char **out);

/**
 * # Safety
 * `expr` must come from this library and not be used afterwards.
 */
void bt_expr_free(struct BtExpr *expr);

/**
 * Loads and validates a config file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
int32_t bt_config_load(const char *path, struct BtConfig **out);

/**
 * Parses and validates config text.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
int32_t bt_config_parse(const char *text, struct BtConfig **out);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards.
 */
void bt_config_free(struct BtConfig *config);

/**
 * Pointwise tensors of a map or immersion as JSON; `at` is `name=value,…`.
 *
 * # Safety
 * Pointers must be valid; `out` receives a string to release with `bt_string_free`.
 */
int32_t bt_map_eval_json(const struct BtConfig *config,
                         const char *map,
                         const char *at,
                         char **out);

/**
 * Runs every check of a config. `passed` reports the verdict; the JSON
 * report is written to `report`.
 *
 * # Safety
 * Pointers must be valid and writable.
 */
int32_t bt_run_config(const struct BtConfig *config, double tol_scale, char **report, bool *passed);

/**
 * Runs a builtin scenario by name.
 *
 * # Safety
 * `name` must be NUL-terminated; `report` and `passed` must be writable.
 */
int32_t bt_run_scenario(const char *name, double tol_scale, char **report, bool *passed);

/**
 * Number of builtin scenarios.
 */
size_t bt_scenario_count(void);

/**
 * Name of the `index`-th builtin scenario, or null when out of range.
 * The string is static and must not be freed.
 */
const char *bt_scenario_name(size_t index);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void bt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BITENSOR_H */
