#include "rt.h"

#define LIMIT 2000
static unsigned char composite[LIMIT];

void _start(void) {
  int count = 0, last = 0;
  for (int i = 2; i < LIMIT; i++) {
    if (composite[i]) continue;
    count++;
    last = i;
    for (int j = i * i; j < LIMIT; j += i) composite[j] = 1;
  }
  println(count);
  println(last);
}
