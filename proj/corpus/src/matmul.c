#include "rt.h"

#define D 6
static int a[D][D], b[D][D], c[D][D];

NOINLINE static void mul(void) {
  for (int i = 0; i < D; i++)
    for (int j = 0; j < D; j++) {
      int s = 0;
      for (int k = 0; k < D; k++) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
}

void _start(void) {
  for (int i = 0; i < D; i++)
    for (int j = 0; j < D; j++) {
      a[i][j] = i * 3 - j;
      b[i][j] = (i ^ j) + 1;
    }
  mul();
  int trace = 0;
  for (int i = 0; i < D; i++) trace += c[i][i];
  println(trace);
  println(c[D - 1][0]);
}
