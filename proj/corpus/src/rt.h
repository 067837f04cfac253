/* Host imports and freestanding helpers shared by the corpus programs. */
#pragma once

#define IMPORT(name) __attribute__((import_module("env"), import_name(name)))
#define NOINLINE __attribute__((noinline))

IMPORT("println") void println(int value);
IMPORT("print_i64") void print_i64(long long value);
IMPORT("print_f64") void print_f64(double value);
IMPORT("putchar") void putchar_(int c);

void *memset(void *dst, int c, unsigned long n);
void *memcpy(void *dst, const void *src, unsigned long n);

static inline void puts_(const char *s) {
  while (*s) putchar_(*s++);
  putchar_('\n');
}
