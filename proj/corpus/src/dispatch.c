#include "rt.h"

typedef int (*op_fn)(int, int);

NOINLINE static int op_add(int a, int b) { return a + b; }
NOINLINE static int op_sub(int a, int b) { return a - b; }
NOINLINE static int op_mul(int a, int b) { return a * b; }
NOINLINE static int op_xor(int a, int b) { return a ^ b; }

static op_fn table[4] = {op_add, op_sub, op_mul, op_xor};

NOINLINE static int classify(int v) {
  switch (v & 7) {
    case 0: return 10;
    case 1: return 21;
    case 2: return 32;
    case 3: return 43;
    case 4: return 54;
    case 5: return 65;
    default: return 99;
  }
}

void _start(void) {
  int acc = 7;
  for (int i = 0; i < 40; i++) acc = table[i & 3](acc, i + 3) & 0xffff;
  println(acc);
  int sum = 0;
  for (int i = 0; i < 50; i++) sum += classify(i * 5 + acc);
  println(sum);
}
