#include "rt.h"

#define N 48
static int data[N];
static unsigned seed = 12345;

NOINLINE static unsigned next(void) {
  seed = seed * 1103515245u + 12345u;
  return (seed >> 16) & 0x7fff;
}

NOINLINE static void bubble(int *a, int n) {
  for (int i = 0; i < n; i++)
    for (int j = 0; j + 1 < n - i; j++)
      if (a[j] > a[j + 1]) {
        int t = a[j];
        a[j] = a[j + 1];
        a[j + 1] = t;
      }
}

NOINLINE static void insertion(int *a, int n) {
  for (int i = 1; i < n; i++) {
    int v = a[i], j = i - 1;
    while (j >= 0 && a[j] < v) {
      a[j + 1] = a[j];
      j--;
    }
    a[j + 1] = v;
  }
}

void _start(void) {
  for (int i = 0; i < N; i++) data[i] = (int)(next() % 1000) - 500;
  bubble(data, N);
  println(data[0]);
  println(data[N - 1]);
  insertion(data, N);
  int check = 0;
  for (int i = 0; i < N; i++) check = check * 31 + data[i];
  println(check);
}
