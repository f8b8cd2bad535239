#ifndef COCOMPACT_H
#define COCOMPACT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CocoStatus {
  COCO_STATUS_OK = 0,
  COCO_STATUS_NULL_POINTER = 1,
  COCO_STATUS_INVALID_UTF8 = 2,
  COCO_STATUS_INVALID_INPUT = 3,
  COCO_STATUS_NOT_A_COVER = 4,
  COCO_STATUS_SPACE_MISMATCH = 5,
  COCO_STATUS_NOT_PERFECT = 6,
  COCO_STATUS_RESOURCE_LIMIT = 7,
  COCO_STATUS_PARSE = 8,
  COCO_STATUS_OUT_OF_RANGE = 9,
  COCO_STATUS_OTHER = 10,
  COCO_STATUS_PANIC = 99,
} CocoStatus;

// A finite open cover of the line or of a compact interval.
typedef struct CocoCover CocoCover;

// A piecewise-affine map of the line.
typedef struct CocoMap CocoMap;

// The counts `N_n` of iterated joins, `n = 1..=n_max`.
typedef struct CocoSequence CocoSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread, or null. Owned by the
// library and valid until the next failing call.
const char *coco_last_error(void);

// Releases a string returned by this library.
void coco_string_free(char *s);

// Static version string.
const char *coco_version(void);

// Named map: `doubling`, `identity`, `tent`, `tent-extended`, `abs`.
enum CocoStatus coco_map_preset(const char *name, struct CocoMap **out);

enum CocoStatus coco_map_from_json(const char *src, struct CocoMap **out);

// Serializes the map; free the result with `coco_string_free`.
enum CocoStatus coco_map_to_json(const struct CocoMap *map, char **out);

// Evaluates the map at a rational given as text (`p/q` or decimal), writing
// the exact image as text.
enum CocoStatus coco_map_eval(const struct CocoMap *map, const char *x, char **out);

void coco_map_free(struct CocoMap *map);

// Parses `{"space": "R" | {"interval": [a, b]}, "elements": [{"intervals": [[l, r], ...]}, ...]}`.
enum CocoStatus coco_cover_from_json(const char *src, struct CocoCover **out);

enum CocoStatus coco_cover_len(const struct CocoCover *cover, size_t *out);

// Size of a smallest subcover. `exact_threshold` bounds the components
// solved exactly; larger ones fall back to a greedy upper bound.
enum CocoStatus coco_cover_min_subcover(const struct CocoCover *cover,
                                        size_t exact_threshold,
                                        size_t *size,
                                        bool *exact);

// Writes the Lebesgue number, or positive infinity when some element is the
// whole space.
enum CocoStatus coco_cover_lebesgue(const struct CocoCover *cover, double *out);

void coco_cover_free(struct CocoCover *cover);

// Computes `N_1..N_{n_max}` for `cover` under `map`. `settings_json` may be
// null for defaults.
enum CocoStatus coco_sequence_compute(const struct CocoMap *map,
                                      const struct CocoCover *cover,
                                      size_t n_max,
                                      const char *settings_json,
                                      struct CocoSequence **out);

enum CocoStatus coco_sequence_len(const struct CocoSequence *seq, size_t *out);

// `N_n` for `1 <= n <= len`.
enum CocoStatus coco_sequence_count(const struct CocoSequence *seq, size_t n, uint64_t *out);

// Entropy estimate `min_n log N_n / n` with the given convergence tolerance.
enum CocoStatus coco_sequence_estimate(const struct CocoSequence *seq,
                                       double tolerance,
                                       double *out);

// CSV text `n,N_n,a_n,rate,exact`; free with `coco_string_free`.
enum CocoStatus coco_sequence_to_csv(const struct CocoSequence *seq, char **out);

void coco_sequence_free(struct CocoSequence *seq);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COCOMPACT_H */
