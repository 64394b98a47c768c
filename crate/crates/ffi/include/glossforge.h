#ifndef GLOSSFORGE_H
#define GLOSSFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible `gf_` entry point.
 */
typedef enum GfStatus {
  GF_STATUS_OK = 0,
  /**
   * A pointer was null, a string was not UTF-8, or a value was out of
   * range. Details via `gf_last_error_message`.
   */
  GF_STATUS_INVALID_ARGUMENT = 1,
  GF_STATUS_IO = 2,
  GF_STATUS_PARSE = 3,
  GF_STATUS_BACKEND = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  GF_STATUS_PANIC = 5,
} GfStatus;

/**
 * Hypernym-based augmentation flavors.
 */
typedef enum GfHypernymMode {
  GF_HYPERNYM_MODE_REPLACE = 0,
  GF_HYPERNYM_MODE_CONCAT = 1,
  GF_HYPERNYM_MODE_HYPER_HYPO = 2,
} GfHypernymMode;

/**
 * Opaque sense inventory handle.
 */
typedef struct GfDatabase GfDatabase;

/**
 * Opaque context-gloss pair collection handle.
 */
typedef struct GfPairSet GfPairSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; never null.
 */
const char *gf_last_error_message(void);

/**
 * Loads a WordNet `dict` directory. On success `*out` owns the handle.
 */
enum GfStatus gf_database_open(const char *dict_dir, struct GfDatabase **out);

/**
 * Releases a database handle. Null is a no-op.
 */
void gf_database_close(struct GfDatabase *db);

/**
 * Total synsets across all parts of speech; 0 for a null handle.
 */
uint64_t gf_database_synset_count(const struct GfDatabase *db);

/**
 * Total sense keys; 0 for a null handle.
 */
uint64_t gf_database_sense_count(const struct GfDatabase *db);

/**
 * Builds context-gloss pairs from a unified corpus. `gold_path` may be
 * null for unlabeled input and `pos_filter` may be null for all parts
 * of speech.
 */
enum GfStatus gf_pairs_build(const struct GfDatabase *db,
                             const char *xml_path,
                             const char *gold_path,
                             const char *pos_filter,
                             struct GfPairSet **out);

/**
 * Reads a pair file written by this library.
 */
enum GfStatus gf_pairs_read(const char *path, struct GfPairSet **out);

/**
 * Writes a pair set as a TSV pair file.
 */
enum GfStatus gf_pairs_write(const struct GfPairSet *ps, const char *path);

/**
 * Number of records; 0 for a null handle.
 */
uint64_t gf_pairs_len(const struct GfPairSet *ps);

/**
 * Fraction of records whose combined token length fits in 128; -1.0 for
 * a null handle.
 */
double gf_pairs_short_fraction(const struct GfPairSet *ps);

/**
 * Releases a pair-set handle. Null is a no-op.
 */
void gf_pairs_close(struct GfPairSet *ps);

/**
 * Appends hypernym-derived records; `*out` is a new handle containing
 * the input records plus the appended ones.
 */
enum GfStatus gf_pairs_augment_hypernym(const struct GfPairSet *ps,
                                        const struct GfDatabase *db,
                                        enum GfHypernymMode mode,
                                        struct GfPairSet **out);

/**
 * Appends synonym-replacement records with the given per-word
 * probability and seed.
 */
enum GfStatus gf_pairs_augment_synonym(const struct GfPairSet *ps,
                                       const struct GfDatabase *db,
                                       double p_replace,
                                       uint64_t seed,
                                       struct GfPairSet **out);

/**
 * Scores a prediction file against a gold-labeled corpus and writes the
 * F1 value through `out_f1`.
 */
enum GfStatus gf_score_files(const char *xml_path,
                             const char *gold_path,
                             const char *preds_path,
                             double *out_f1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLOSSFORGE_H */
