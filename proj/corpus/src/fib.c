#include "rt.h"

NOINLINE static long long fib_iter(int n) {
  long long a = 0, b = 1;
  for (int i = 0; i < n; i++) {
    long long t = a + b;
    a = b;
    b = t;
  }
  return a;
}

NOINLINE static int fib_rec(int n) { return n < 2 ? n : fib_rec(n - 1) + fib_rec(n - 2); }

void _start(void) {
  for (int n = 10; n <= 90; n += 20) print_i64(fib_iter(n));
  println(fib_rec(15));
}
