#include "rt.h"

static unsigned crc_table[256];

NOINLINE static void make_table(void) {
  for (unsigned n = 0; n < 256; n++) {
    unsigned c = n;
    for (int k = 0; k < 8; k++) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    crc_table[n] = c;
  }
}

NOINLINE static unsigned crc32(const unsigned char *p, int n) {
  unsigned c = 0xFFFFFFFFu;
  for (int i = 0; i < n; i++) c = crc_table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

NOINLINE static int popcount(unsigned v) {
  int n = 0;
  while (v) {
    v &= v - 1;
    n++;
  }
  return n;
}

static inline unsigned rotl(unsigned v, int s) { return (v << s) | (v >> (32 - s)); }

void _start(void) {
  static const unsigned char payload[] = "diversify all the things";
  make_table();
  unsigned crc = crc32(payload, sizeof(payload) - 1);
  println((int)crc);
  unsigned x = 0x9E3779B9u;
  int bits = 0;
  for (int i = 1; i < 32; i++) {
    x = rotl(x, i) ^ (x >> 3);
    bits += popcount(x);
  }
  println(bits);
  println((int)x);
}
