#include "rt.h"

NOINLINE static unsigned long long gcd(unsigned long long a, unsigned long long b) {
  while (b) {
    unsigned long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

NOINLINE static unsigned long long powmod(unsigned long long b, unsigned long long e,
                                           unsigned long long m) {
  unsigned long long r = 1;
  b %= m;
  while (e) {
    if (e & 1) r = r * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return r;
}

void _start(void) {
  unsigned long long g = 0;
  for (unsigned long long i = 1; i < 60; i++) g += gcd(i * 987654321ull, 123456789ull + i);
  print_i64((long long)g);
  print_i64((long long)powmod(7, 1234567, 1000000007ull));
  long long lcm = 1;
  for (int i = 1; i <= 20; i++) lcm = lcm / (long long)gcd((unsigned long long)lcm, (unsigned long long)i) * i;
  print_i64(lcm);
}
