#ifndef SEMNO_H
#define SEMNO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes. The nonzero values below `SEMNO_STATUS_INVALID_ARGUMENT`
// match the command-line exit codes.
typedef enum SemnoStatus {
  SEMNO_STATUS_OK = 0,
  // Bad configuration, parameter or input file.
  SEMNO_STATUS_CONFIG = 2,
  // Missing, malformed or mismatched artifact.
  SEMNO_STATUS_ARTIFACT = 3,
  // Failure while running a stage.
  SEMNO_STATUS_RUNTIME = 4,
  // Null pointer or invalid UTF-8 argument.
  SEMNO_STATUS_INVALID_ARGUMENT = 5,
  // A Rust panic was caught at the boundary.
  SEMNO_STATUS_PANIC = 6,
} SemnoStatus;

// Pipeline configuration: defaults, optionally a config file, plus
// key/value overrides.
typedef struct SemnoConfig SemnoConfig;

// Anchored communities loaded from a hierarchy artifact, ready to classify
// sentences.
typedef struct SemnoFilter SemnoFilter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *semno_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void semno_string_free(char *s);

// Anchors inserted into a clean sentence of `len` tokens.
size_t semno_infusion_frequency(size_t len);

// Tokenizes `text` and removes stop words; `stopwords` is a builtin tag
// (`english`, `none`) or a file path. `*out` receives the space-joined
// tokens.
//
// # Safety
// `text` and `stopwords` must be NUL-terminated strings; `out` must be
// writable.
enum SemnoStatus semno_clean_text(const char *text, const char *stopwords, char **out);

// Creates a configuration from `path`, or from defaults when `path` is
// null.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` must be writable.
enum SemnoStatus semno_config_new(const char *path, struct SemnoConfig **out);

// Sets a config key. Relative paths resolve against the working directory.
//
// # Safety
// `config` must be a live handle; `key` and `value` NUL-terminated strings.
enum SemnoStatus semno_config_set(struct SemnoConfig *config, const char *key, const char *value);

// # Safety
// `config` must be null or a handle not yet freed.
void semno_config_free(struct SemnoConfig *config);

// Runs one stage by name. `threads` 0 uses every core.
//
// # Safety
// `config` must be a live handle; `stage` a NUL-terminated string.
enum SemnoStatus semno_run_stage(const struct SemnoConfig *config,
                                 const char *stage,
                                 size_t threads,
                                 bool force);

// Runs cleanse through filter, plus pip when `pip.enabled` is set.
//
// # Safety
// `config` must be a live handle.
enum SemnoStatus semno_run_all(const struct SemnoConfig *config, size_t threads, bool force);

// Opens the hierarchy artifact at `path`; sentences passed to
// [`semno_filter_classify`] are cleaned with `stopwords`.
//
// # Safety
// `path` and `stopwords` must be NUL-terminated strings; `out` writable.
enum SemnoStatus semno_filter_open(const char *path,
                                   const char *stopwords,
                                   struct SemnoFilter **out);

// Number of anchored communities, the length of a sentence's encoding.
//
// # Safety
// `filter` must be a live handle.
size_t semno_filter_community_count(const struct SemnoFilter *filter);

// Classifies one raw sentence; `*is_noise` is true when it shares no word
// with any anchored community.
//
// # Safety
// `filter` must be a live handle, `sentence` a NUL-terminated string and
// `is_noise` writable.
enum SemnoStatus semno_filter_classify(const struct SemnoFilter *filter,
                                       const char *sentence,
                                       bool *is_noise);

// # Safety
// `filter` must be null or a handle not yet freed.
void semno_filter_free(struct SemnoFilter *filter);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMNO_H */
