#include "rt.h"

NOINLINE static double newton_sqrt(double x) {
  double g = x / 2.0;
  for (int i = 0; i < 20; i++) g = 0.5 * (g + x / g);
  return g;
}

NOINLINE static float horner(float x) {
  static const float coeff[5] = {1.0f, -0.5f, 0.25f, -0.125f, 0.0625f};
  float acc = 0.0f;
  for (int i = 4; i >= 0; i--) acc = acc * x + coeff[i];
  return acc;
}

void _start(void) {
  double total = 0.0;
  for (int i = 1; i <= 10; i++) total += newton_sqrt((double)i);
  print_f64(total);
  print_f64((double)horner(1.5f));
  double harmonic = 0.0;
  for (int i = 1; i <= 100; i++) harmonic += 1.0 / i;
  print_f64(harmonic);
  println((int)(harmonic * 1000.0));
}
