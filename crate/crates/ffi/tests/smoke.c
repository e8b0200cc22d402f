#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "sitrace.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,          \
              sitrace_last_error());                                  \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  SitraceSystem *sys = NULL;
  CHECK(sitrace_system_new("shannon-scaling", &sys) == SITRACE_STATUS_OK);
  double residual = -1.0;
  CHECK(sitrace_system_certify(sys, 64, 8, 1e-9, &residual) == SITRACE_STATUS_OK);
  CHECK(residual >= 0.0 && residual <= 1e-9);

  SitraceProfile *p = NULL;
  CHECK(sitrace_profile_new(sys, SITRACE_PROFILE_KIND_DIMENSION, 64, &p) == SITRACE_STATUS_OK);
  size_t n = sitrace_profile_len(p);
  CHECK(n == 64 && sitrace_profile_dim(p) == 1);
  double *values = malloc(n * sizeof(double));
  CHECK(sitrace_profile_copy(p, NULL, values, NULL, n) == SITRACE_STATUS_OK);
  for (size_t i = 0; i < n; i++) CHECK(values[i] == 1.0);
  free(values);
  sitrace_profile_free(p);
  sitrace_system_free(sys);

  CHECK(sitrace_system_new("no-such-system", &sys) == SITRACE_STATUS_INVALID_ARGUMENT);
  CHECK(sys == NULL && strlen(sitrace_last_error()) > 0);

  int64_t two = 2;
  CHECK(sitrace_verify_wavelet("shannon-scaling", &two, 1, 64, 30, 8, 1e-9, NULL) == SITRACE_STATUS_FAIL);
  printf("sitrace %s ok\n", sitrace_version());
  return 0;
}
