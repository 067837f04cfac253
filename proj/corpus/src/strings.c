#include "rt.h"

static const char message[] = "WebAssembly variants stay functionally equivalent";
static char buffer[64];

NOINLINE static unsigned fnv1a(const char *s) {
  unsigned h = 2166136261u;
  while (*s) {
    h ^= (unsigned char)*s++;
    h *= 16777619u;
  }
  return h;
}

NOINLINE static int length(const char *s) {
  int n = 0;
  while (s[n]) n++;
  return n;
}

void _start(void) {
  int n = length(message);
  for (int i = 0; i < n; i++) buffer[i] = message[n - 1 - i];
  buffer[n] = 0;
  puts_(buffer);
  println(n);
  println((int)fnv1a(message));
  int upper = 0;
  for (int i = 0; i < n; i++)
    if (message[i] >= 'A' && message[i] <= 'Z') upper++;
  println(upper);
}
