#include "rt.h"

NOINLINE static int steps(unsigned long long n) {
  int s = 0;
  while (n != 1) {
    n = (n & 1) ? 3 * n + 1 : n >> 1;
    s++;
  }
  return s;
}

void _start(void) {
  int best = 0, arg = 0;
  for (int n = 1; n < 300; n++) {
    int s = steps((unsigned long long)n);
    if (s > best) {
      best = s;
      arg = n;
    }
  }
  println(arg);
  println(best);
}
