#include <stdio.h>
#include "cocompact.h"

static const char *COVER =
    "{\"space\": \"R\", \"elements\": ["
    "{\"intervals\": [[\"-inf\", \"1\"], [\"2\", \"+inf\"]]},"
    "{\"intervals\": [[\"-inf\", \"-2\"], [\"-1\", \"+inf\"]]}]}";

int main(void) {
    CocoMap *f = NULL;
    CocoCover *u = NULL;
    CocoSequence *seq = NULL;
    if (coco_map_preset("doubling", &f) != COCO_STATUS_OK ||
        coco_cover_from_json(COVER, &u) != COCO_STATUS_OK ||
        coco_sequence_compute(f, u, 10, NULL, &seq) != COCO_STATUS_OK) {
        fprintf(stderr, "error: %s\n", coco_last_error());
        return 1;
    }
    for (size_t n = 1; n <= 10; n++) {
        uint64_t count = 0;
        coco_sequence_count(seq, n, &count);
        printf("%zu %llu\n", n, (unsigned long long)count);
    }
    double h = 0.0;
    coco_sequence_estimate(seq, 0.02, &h);
    printf("estimate %.6f\n", h);
    if (coco_map_preset("logistic", &f) == COCO_STATUS_INVALID_INPUT) {
        printf("error: %s\n", coco_last_error());
    }
    coco_sequence_free(seq);
    coco_cover_free(u);
    coco_map_free(f);
    return 0;
}
