/* C API for the unlearning lab. All functions return ULAB_OK (0) on success;
 * on failure they return an error code and leave a message retrievable with
 * ulab_last_error() (thread-local). Handles are opaque; every *_free is safe
 * on NULL. */

#ifndef ULAB_H
#define ULAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ulab_status {
  ULAB_OK = 0,
  ULAB_ERR_VALIDATION = 1, /* bad inputs, config, file contents, state */
  ULAB_ERR_NUMERIC = 2,    /* non-finite values; training aborted */
  ULAB_ERR_IO = 3          /* filesystem failures */
} ulab_status;

typedef struct ulab_config ulab_config;
typedef struct ulab_dataset ulab_dataset;

const char *ulab_last_error(void);
void ulab_string_free(char *s);

/* ---- configuration ------------------------------------------------------ */

ulab_status ulab_config_create(ulab_config **out);
ulab_status ulab_config_load(const char *path, ulab_config **out);
/* Flag-style override of one unlearn field, e.g. ("lr", "1e-3"),
 * ("forget_loss", "EUL"), ("use_retain", "true"). */
ulab_status ulab_config_override(ulab_config *cfg, const char *key, const char *value);
/* Effective config as a JSON document; free with ulab_string_free. */
ulab_status ulab_config_to_json(const ulab_config *cfg, char **out_json);
void ulab_config_free(ulab_config *cfg);

/* ---- datasets ------------------------------------------------------------ */

ulab_status ulab_dataset_load(const char *path, ulab_dataset **out);
ulab_status ulab_dataset_save(const ulab_dataset *ds, const char *path);
/* Re-segmentation augmentation; the input handle is left untouched. */
ulab_status ulab_dataset_augment(const ulab_dataset *ds, ulab_dataset **out);
/* split is one of "forget", "retain", "holdout", "eval_general". */
ulab_status ulab_dataset_count(const ulab_dataset *ds, const char *split, size_t *out_count);
void ulab_dataset_free(ulab_dataset *ds);

/* ---- pipeline ------------------------------------------------------------ */

typedef void (*ulab_log_fn)(const char *line, void *user);

/* Memorization training on retain+forget; writes a ULF1 checkpoint to
 * out_checkpoint and a JSON-lines train log next to it (<out>.trainlog.jsonl). */
ulab_status ulab_train_base(const ulab_config *cfg, const ulab_dataset *ds,
                            const char *out_checkpoint, ulab_log_fn log, void *user);

/* Full unlearning pipeline from a base checkpoint. */
ulab_status ulab_unlearn(const ulab_config *cfg, const char *base_checkpoint,
                         const ulab_dataset *ds, const char *out_checkpoint,
                         ulab_log_fn log, void *user);

/* Evaluates model_checkpoint against base_checkpoint on ds; writes the JSON
 * report to report_path when non-NULL. out_scores (when non-NULL) receives
 * {mia, tas, capability, final}. */
ulab_status ulab_evaluate(const char *base_checkpoint, const char *model_checkpoint,
                          const ulab_dataset *ds, const char *report_path,
                          double out_scores[4]);

/* Verifies the EUL gradient identity and finite-difference agreement on a
 * random tiny model. Returns ULAB_OK iff both checks pass; the measured
 * maxima are stored when the pointers are non-NULL. */
ulab_status ulab_gradcheck(uint64_t seed, double *out_dual_err, double *out_fd_err);

#ifdef __cplusplus
}
#endif

#endif /* ULAB_H */
