#include <math.h>
#include <stdio.h>
#include "matmoment.h"

#define EXPECT(c) do { if (!(c)) { fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #c, mm_last_error_message()); return 1; } } while (0)

int main(void) {
    const double s[3] = {1.0, 0.0, 1.0};
    MmProblem *p = NULL;
    EXPECT(mm_problem_new(-1.0, 1.0, 1, 3, s, NULL, &p) == MM_OK);

    int solvable = 0;
    EXPECT(mm_problem_check(p, &solvable) == MM_OK && solvable == 1);

    MmMeasure *m = NULL;
    EXPECT(mm_problem_solve(p, 0.5, 0.5, &m) == MM_OK);
    EXPECT(mm_measure_len(m) == 2);
    for (size_t i = 0; i < 2; i++) {
        double x, w;
        EXPECT(mm_measure_atom(m, i, &x, &w, NULL) == MM_OK);
        EXPECT(fabs(fabs(x) - 1.0) < 1e-9 && fabs(w - 0.5) < 1e-9);
    }
    int passed = 0;
    EXPECT(mm_measure_verify(m, p, 1e-8, &passed) == MM_OK && passed == 1);
    EXPECT(mm_problem_solve(p, 2.0, 0.5, &m) == MM_ERR_PARAMETER && m == NULL);

    mm_measure_free(m);
    mm_problem_free(p);
    puts("ok");
    return 0;
}
