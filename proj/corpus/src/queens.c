#include "rt.h"

#define N 6
static int cols[N];

NOINLINE static int safe(int row, int col) {
  for (int r = 0; r < row; r++) {
    int c = cols[r];
    if (c == col || c - col == r - row || c - col == row - r) return 0;
  }
  return 1;
}

NOINLINE static int solve(int row) {
  if (row == N) return 1;
  int count = 0;
  for (int col = 0; col < N; col++)
    if (safe(row, col)) {
      cols[row] = col;
      count += solve(row + 1);
    }
  return count;
}

void _start(void) {
  println(solve(0));
  int checksum = 0;
  for (int i = 0; i < N; i++) checksum = checksum * 7 + cols[i];
  println(checksum);
}
