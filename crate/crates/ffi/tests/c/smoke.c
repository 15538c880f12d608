#include <math.h>
#include <stdio.h>
#include <string.h>

#include "tsvf.h"

#define CHECK(cond)                                               \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                   \
    }                                                             \
  } while (0)

int main(void) {
  TsvfScenario *s = NULL;
  CHECK(tsvf_scenario_builtin("three-box", 1, &s) == TSVF_STATUS_OK);

  size_t dim = 0;
  CHECK(tsvf_scenario_dim(s, &dim) == TSVF_STATUS_OK && dim == 3);

  double values[4], probs[4];
  size_t len = 0;
  CHECK(tsvf_abl(s, "P_A", values, probs, 4, &len) == TSVF_STATUS_OK);
  CHECK(len == 2 && values[1] == 1.0 && fabs(probs[1] - 1.0) < 1e-12);

  CHECK(tsvf_abl(s, "X", values, probs, 1, &len) == TSVF_STATUS_BUFFER_TOO_SMALL && len == 3);

  double re = 0, im = 0;
  CHECK(tsvf_weak_value(s, "P_C", &re, &im) == TSVF_STATUS_OK);
  CHECK(fabs(re + 1.0) < 1e-12 && fabs(im) < 1e-12);

  TsvfPointerStats st;
  CHECK(tsvf_ensemble_pressure(s, "P_C", 10, 10.0, 20000, 7, &st) == TSVF_STATUS_OK);
  CHECK(st.n_trials == 20000 && fabs(st.sample_mean - st.analytic_mean) < 5 * st.standard_error);

  CHECK(tsvf_weak_value(s, "nope", &re, &im) == TSVF_STATUS_USAGE);
  CHECK(strstr(tsvf_last_error_message(), "nope") != NULL);

  tsvf_scenario_free(s);
  printf("ok %s weak(P_C)=%.1f pressure(C)=%.3f\n", tsvf_version(), re, st.sample_mean);
  return 0;
}
