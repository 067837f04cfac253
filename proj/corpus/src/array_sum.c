#include "rt.h"

static int arr[5];

NOINLINE static void fill(int *a, int n) {
  for (int i = 0; i < n; i++) a[i] = i + 1;
}

void _start(void) {
  fill(arr, 5);
  int sum = 0;
  for (int i = 0; i < 5; i++) sum += arr[i];
  println(sum);
}
