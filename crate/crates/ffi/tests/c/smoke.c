#include <math.h>
#include <stdio.h>

#include "chowla_lab.h"

int main(void) {
    ChlMultSpec *lam = NULL;
    if (chl_mult_spec_parse("liouville", &lam) != CHL_STATUS_OK) {
        fprintf(stderr, "%s\n", chl_last_error());
        return 1;
    }
    ChlParams unit = {1, 0, 1};
    ChlComplex raw, norm;
    if (chl_correlation2(lam, lam, unit, 10, 5.0, &raw, &norm) != CHL_STATUS_OK) {
        return 2;
    }
    if (fabs(raw.re + 0.9210317460317460) > 1e-12) {
        return 3;
    }
    ChlSignWindow *w = NULL;
    if (chl_sign_window_new(CHL_SIGN_KIND_LIOUVILLE, 0, 10, &w) != CHL_STATUS_INVALID_ARGUMENT) {
        return 4;
    }
    chl_mult_spec_free(lam);
    printf("ok %.12f\n", raw.re);
    return 0;
}
