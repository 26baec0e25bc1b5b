#include <math.h>
#include <stdio.h>
#include <string.h>
#include "gaep.h"

int main(void) {
    const double p[2] = {0.5, 0.5};
    const double rho[4] = {0.0, 1.0, 1.0, 0.0};
    GaepProblem *h = NULL;
    if (gaep_problem_new(p, 2, p, 2, rho, 1.0, &h) != GAEP_STATUS_OK) return 1;
    double r1 = 0.0;
    if (gaep_rate_r1(h, 0.25, &r1, NULL, NULL) != GAEP_STATUS_OK) return 2;
    if (fabs(r1 / log(2.0) - 0.188722) > 1e-6) return 3;
    const uint32_t x[3] = {0, 0, 0};
    double lp = 0.0;
    if (gaep_ball_log_prob(h, x, 3, 1.0 / 3.0, &lp) != GAEP_STATUS_OK) return 4;
    if (fabs(lp - log(0.5)) > 1e-12) return 5;
    char buf[32];
    if (gaep_elias_encode(17, buf, sizeof buf) != GAEP_STATUS_OK || strcmp(buf, "001010001") != 0) return 6;
    if (gaep_rate_r1(h, 0.0, NULL, NULL, NULL) != GAEP_STATUS_INFEASIBLE || gaep_last_error() == NULL) return 7;
    gaep_problem_free(h);
    printf("ok\n");
    return 0;
}
