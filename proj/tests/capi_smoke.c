/* The public header must compile as C and the library must work through it. */
#include <stdio.h>
#include <string.h>

#include "tailbound/tailbound.h"

#define EXPECT(cond)                                         \
  do {                                                       \
    if (!(cond)) {                                           \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                              \
    }                                                        \
  } while (0)

int main(void) {
  char* out = NULL;
  tb_model* m = NULL;
  tb_sample_set* s = NULL;
  double v[4];

  EXPECT(strcmp(tb_version(), "") != 0);
  EXPECT(tb_solve_kappa("{\"kind\":\"two_point\",\"a\":0.5,\"b\":3,\"p\":0.8}", NULL, &out) == TB_OK);
  EXPECT(strstr(out, "\"kappa\"") != NULL);
  tb_free_string(out);
  EXPECT(tb_solve_kappa("{\"kind\":\"two_point\",\"a\":0.5,\"b\":0.9,\"p\":0.5}", NULL, &out) == TB_NO_INDEX);
  EXPECT(strlen(tb_last_error()) > 0);
  EXPECT(tb_solve_kappa("not json", NULL, &out) == TB_USAGE);
  EXPECT(tb_solve_kappa(NULL, NULL, &out) == TB_USAGE);

  EXPECT(tb_model_create("bogus", NULL, &m) == TB_USAGE);
  EXPECT(tb_model_create("arch", "{}", &m) == TB_OK);
  EXPECT(tb_sample(m, "{\"kind\":\"backward\",\"depth\":100}", 1000, 3, &s) == TB_OK);
  EXPECT(tb_sample_set_size(s) == 1000);
  EXPECT(tb_sample_set_values(s, v, 4) == TB_OK);
  EXPECT(v[0] >= 0.0);
  EXPECT(tb_hill(s, 50, &out) == TB_OK);
  tb_free_string(out);
  EXPECT(tb_sandwich_verify(m, "{\"envs\":100,\"points\":10}", &out) == TB_OK);
  tb_free_string(out);
  EXPECT(tb_sandwich_verify(m, "{\"envs\":100,\"points\":10,\"corrupt\":true}", &out) == TB_VIOLATION);
  tb_free_string(out);
  EXPECT(tb_sandwich_verify(m, "{\"points\":0}", &out) == TB_USAGE);
  tb_sample_set_free(s);
  tb_model_free(m);

  EXPECT(tb_run_config("{\"model_id\":\"nope\",\"seed\":1}", &out) == TB_USAGE);
  EXPECT(tb_run_config("{\"model_id\":\"perpetuity\",\"seed\":1,\"n_samples\":1000,"
                       "\"analysis\":[{\"op\":\"hill\",\"k\":50,\"assert\":{\"index_in\":[50,60]}}]}",
                       &out) == TB_VIOLATION);
  EXPECT(out != NULL);
  tb_free_string(out);
  puts("capi ok");
  return 0;
}
