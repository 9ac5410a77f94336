#include <stdio.h>
#include <stdlib.h>
#include "ampflow.h"

int main(void) {
    AfMatrix *mat = NULL;
    if (af_matrix_sample(AF_ENSEMBLE_GAUSSIAN, 0.0, 96, 8, 42, &mat) != AF_OK) {
        fprintf(stderr, "sample: %s\n", af_last_error_message());
        return 1;
    }
    size_t d = af_matrix_cols(mat), m = af_matrix_rows(mat);

    AfComplex *x0 = calloc(d, sizeof *x0);
    for (size_t i = 0; i < d; i++) { x0[i].re = (double)(i + 1); x0[i].im = 0.5 * (double)i; }
    double *b = calloc(m, sizeof *b);
    if (af_matrix_amplitudes(mat, x0, b) != AF_OK) return 2;

    AfResult *res = NULL;
    if (af_solve_amplitude_flow(mat, b, NULL, &res) != AF_OK) {
        fprintf(stderr, "solve: %s\n", af_last_error_message());
        return 3;
    }
    AfComplex *xr = calloc(d, sizeof *xr);
    if (af_result_copy_x(res, xr) != AF_OK) return 4;
    double dist = -1.0;
    if (af_phase_dist(xr, x0, d, &dist) != AF_OK) return 5;

    double eps = 0.0;
    if (af_chi_square_epsilon(m, 0.01, &eps) != AF_OK) return 6;

    printf("converged=%d iters=%zu dist=%.3e residual=%.3e eps=%.4f status[0]=%s\n",
           af_result_converged(res), af_result_iterations(res), dist,
           af_result_final_residual(res), eps, af_status_name(AF_OK));

    /* Error path: NULL out-pointer. */
    if (af_matrix_sample(AF_ENSEMBLE_GAUSSIAN, 0.0, 4, 2, 1, NULL) != AF_NULL_POINTER) return 7;

    af_result_free(res);
    af_matrix_free(mat);
    free(x0); free(b); free(xr);
    return dist <= 1e-5 ? 0 : 8;
}
