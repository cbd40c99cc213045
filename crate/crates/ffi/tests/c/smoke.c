#include <math.h>
#include <stdio.h>
#include "sysvar.h"

#define CHECK(call)                                                   \
  do {                                                                \
    SvStatus s_ = (call);                                             \
    if (s_ != SV_STATUS_OK) {                                         \
      char msg[256];                                                  \
      sv_last_error(msg, sizeof msg);                                 \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, msg);         \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  SvFrame *frame = NULL;
  SvPopulation *pop = NULL;
  double beta[3] = {0.0, 1.0, 1.0};
  size_t starts = 0, cells[25];
  SvEstimate est;
  SvCellSummary sum;

  CHECK(sv_frame_new(20, 20, 0.05, &frame));
  CHECK(sv_population_generate(frame, beta, 1.0, 1.0, 0.3, 7, 0, &pop));
  CHECK(sv_systematic_num_starts(frame, 5, 5, &starts));
  if (starts != 16) return 2;
  CHECK(sv_systematic_draw(frame, 5, 5, 3, cells, 25));
  CHECK(sv_estimate(pop, SV_ESTIMATOR_GREG2, cells, 25, 0, &est));
  if (!isfinite(est.mu_hat) || !(est.var_hat > 0)) return 3;
  CHECK(sv_run_cell(pop, 5, 5, SV_ESTIMATOR_HT, 7, 100, 200, &sum));
  if (sum.replicates != 16) return 4;
  if (sv_percent_bias(1.0, 0.0, &est.mu_hat) != SV_STATUS_UNDEFINED_BIAS) return 5;
  if (sv_frame_new(0, 20, 1.0, NULL) != SV_STATUS_NULL_POINTER) return 6;
  sv_population_free(pop);
  sv_frame_free(frame);
  printf("ok %s\n", sv_version());
  return 0;
}
