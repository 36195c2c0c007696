#include <stdio.h>
#include "cocycle.h"

int main(void) {
    CocycleFunction *g = NULL, *f = NULL;
    CocycleReconstructor *rec = NULL;
    double h = 0.0;
    if (cocycle_function_builtin("square", &g) != COCYCLE_STATUS_OK) return 1;
    if (cocycle_function_from_seed(g, &f) != COCYCLE_STATUS_OK) return 1;
    if (cocycle_reconstructor_new(f, &rec) != COCYCLE_STATUS_OK) return 1;
    if (cocycle_reconstructor_h(rec, 1, 3, COCYCLE_ENGINE_EUCLID_CHAIN, &h) != COCYCLE_STATUS_OK) {
        fprintf(stderr, "%s\n", cocycle_last_error_message());
        return 1;
    }
    printf("h(1/3) = %.17g\n", h);
    if (cocycle_reconstructor_h(rec, 1, 3, COCYCLE_ENGINE_DYADIC, &h) != COCYCLE_STATUS_OK)
        printf("dyadic: %s\n", cocycle_last_error_message());
    cocycle_reconstructor_free(rec);
    cocycle_function_free(f);
    cocycle_function_free(g);
    return 0;
}
