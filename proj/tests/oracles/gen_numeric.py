#!/usr/bin/env python3
"""Reference results for single numeric instructions.

Writes numeric_cases.inc, which the interpreter tests include. Integer ops use
Python integers with explicit wrapping; f32 arithmetic goes through numpy
float32, f64 through Python floats, and integer-to-float conversion rounds
exactly from the integer value.
"""
import math
import random
import struct
import sys

import numpy as np

M32 = (1 << 32) - 1
M64 = (1 << 64) - 1


def s32(x):
    x &= M32
    return x - (1 << 32) if x >> 31 else x


def s64(x):
    x &= M64
    return x - (1 << 64) if x >> 63 else x


def f32_from_bits(b):
    return np.frombuffer(struct.pack("<I", b), dtype=np.float32)[0]


def f32_bits(v):
    return struct.unpack("<I", np.float32(v).tobytes())[0]


def f64_from_bits(b):
    return struct.unpack("<d", struct.pack("<Q", b))[0]


def f64_bits(v):
    return struct.unpack("<Q", struct.pack("<d", v))[0]


def int_to_float_bits(n, mant_bits, exp_bits):
    """Round an integer to the nearest binary float (ties to even)."""
    bias = (1 << (exp_bits - 1)) - 1
    sign = 0
    if n < 0:
        sign, n = 1, -n
    if n == 0:
        return sign << (mant_bits + exp_bits)
    e = n.bit_length() - 1
    if e > mant_bits:
        shift = e - mant_bits
        q, r = divmod(n, 1 << shift)
        half = 1 << (shift - 1)
        if r > half or (r == half and q & 1):
            q += 1
        if q.bit_length() > mant_bits + 1:
            q >>= 1
            e += 1
        m = q
    else:
        m = n << (mant_bits - e)
    frac = m & ((1 << mant_bits) - 1)
    return (sign << (mant_bits + exp_bits)) | ((e + bias) << mant_bits) | frac


def is_nan32(b):
    return (b & 0x7F800000) == 0x7F800000 and (b & 0x7FFFFF) != 0


def is_nan64(b):
    return (b & 0x7FF0000000000000) == 0x7FF0000000000000 and (b & 0xFFFFFFFFFFFFF) != 0


class Trap(Exception):
    def __init__(self, kind):
        self.kind = kind


def clz(x, w):
    return w - x.bit_length()


def ctz(x, w):
    if x == 0:
        return w
    return (x & -x).bit_length() - 1


def int_binop(name, a, b, w):
    m = (1 << w) - 1
    sg = s32 if w == 32 else s64
    sa, sb = sg(a), sg(b)
    if name == "add":
        return (a + b) & m
    if name == "sub":
        return (a - b) & m
    if name == "mul":
        return (a * b) & m
    if name in ("div_s", "div_u", "rem_s", "rem_u") and b == 0:
        raise Trap("IntegerDivideByZero")
    if name == "div_s":
        if sa == -(1 << (w - 1)) and sb == -1:
            raise Trap("IntegerOverflow")
        q = abs(sa) // abs(sb)
        return (q if (sa < 0) == (sb < 0) else -q) & m
    if name == "div_u":
        return a // b
    if name == "rem_s":
        r = abs(sa) % abs(sb)
        return (r if sa >= 0 else -r) & m
    if name == "rem_u":
        return a % b
    if name == "and":
        return a & b
    if name == "or":
        return a | b
    if name == "xor":
        return a ^ b
    k = b % w
    if name == "shl":
        return (a << k) & m
    if name == "shr_s":
        return (sa >> k) & m
    if name == "shr_u":
        return a >> k
    if name == "rotl":
        return ((a << k) | (a >> (w - k))) & m if k else a
    if name == "rotr":
        return ((a >> k) | (a << (w - k))) & m if k else a
    if name == "eq":
        return int(a == b)
    if name == "ne":
        return int(a != b)
    if name == "lt_s":
        return int(sa < sb)
    if name == "lt_u":
        return int(a < b)
    if name == "gt_s":
        return int(sa > sb)
    if name == "gt_u":
        return int(a > b)
    if name == "le_s":
        return int(sa <= sb)
    if name == "le_u":
        return int(a <= b)
    if name == "ge_s":
        return int(sa >= sb)
    if name == "ge_u":
        return int(a >= b)
    raise KeyError(name)


def int_unop(name, a, w):
    if name == "clz":
        return clz(a, w)
    if name == "ctz":
        return ctz(a, w)
    if name == "popcnt":
        return bin(a).count("1")
    if name == "eqz":
        return int(a == 0)
    raise KeyError(name)


def fmin(x, y):
    if math.isnan(x) or math.isnan(y):
        return math.nan
    if x == y == 0:
        return x if math.copysign(1, x) < 0 else y
    return min(x, y)


def fmax(x, y):
    if math.isnan(x) or math.isnan(y):
        return math.nan
    if x == y == 0:
        return y if math.copysign(1, x) < 0 else x
    return max(x, y)


def float_binop(name, a, b, w):
    if w == 32:
        x, y = f32_from_bits(a), f32_from_bits(b)
        bits, sign = f32_bits, 1 << 31
    else:
        x, y = f64_from_bits(a), f64_from_bits(b)
        bits, sign = f64_bits, 1 << 63
    if name == "copysign":
        return (a & ~sign) | (b & sign)
    cmp = {"eq": x == y, "ne": x != y, "lt": x < y, "gt": x > y, "le": x <= y, "ge": x >= y}
    if name in cmp:
        return int(bool(cmp[name]))
    with np.errstate(all="ignore"):
        if name == "add":
            r = x + y
        elif name == "sub":
            r = x - y
        elif name == "mul":
            r = x * y
        elif name == "div":
            if w == 64 and y == 0:
                r = math.nan if x == 0 or math.isnan(x) else math.copysign(math.inf, x) * math.copysign(1, y)
            else:
                r = x / y
        elif name == "min":
            r = fmin(float(x), float(y))
        elif name == "max":
            r = fmax(float(x), float(y))
        else:
            raise KeyError(name)
    return bits(np.float32(r) if w == 32 else r)


def float_unop(name, a, w):
    sign = 1 << (w - 1)
    if name == "abs":
        return a & ~sign
    if name == "neg":
        return a ^ sign
    if w == 32:
        x = f32_from_bits(a)
        with np.errstate(all="ignore"):
            r = {"ceil": np.ceil, "floor": np.floor, "trunc": np.trunc, "nearest": np.rint, "sqrt": np.sqrt}[name](x)
        return f32_bits(np.float32(r))
    x = np.float64(f64_from_bits(a))
    with np.errstate(all="ignore"):
        r = {"ceil": np.ceil, "floor": np.floor, "trunc": np.trunc, "nearest": np.rint, "sqrt": np.sqrt}[name](x)
    return f64_bits(float(r))


def trunc_to_int(x, w, signed):
    if math.isnan(x):
        raise Trap("InvalidConversion")
    if math.isinf(x):
        raise Trap("IntegerOverflow")
    t = math.trunc(x)
    lo, hi = (-(1 << (w - 1)), (1 << (w - 1)) - 1) if signed else (0, (1 << w) - 1)
    if t < lo or t > hi:
        raise Trap("IntegerOverflow")
    return t & ((1 << w) - 1)


def conversion(name, a):
    dst, rest = name.split(".")
    if dst == "i32" and rest == "wrap_i64":
        return a & M32
    if rest.startswith("extend_i32"):
        return (s32(a) & M64) if rest.endswith("_s") else a
    if rest.startswith("trunc_"):
        src = rest[6:9]
        x = float(f32_from_bits(a)) if src == "f32" else f64_from_bits(a)
        return trunc_to_int(x, 32 if dst == "i32" else 64, rest.endswith("_s"))
    if rest.startswith("convert_"):
        src = rest[8:11]
        n = a
        if rest.endswith("_s"):
            n = s32(a) if src == "i32" else s64(a)
        return int_to_float_bits(n, 23, 8) if dst == "f32" else int_to_float_bits(n, 52, 11)
    if rest == "demote_f64":
        with np.errstate(all="ignore"):
            return f32_bits(np.float32(f64_from_bits(a)))
    if rest == "promote_f32":
        return f64_bits(float(f32_from_bits(a)))
    if rest.startswith("reinterpret"):
        return a
    raise KeyError(name)


I32_EDGE = [0, 1, M32, 2, 0x80000000, 0x7FFFFFFF, 31, 32, 33, 0xFFFFFFFE, 0x12345678]
I64_EDGE = [0, 1, M64, 2, 1 << 63, (1 << 63) - 1, 63, 64, 65, 0x123456789ABCDEF0]
F32_EDGE = [f32_bits(v) for v in (0.0, -0.0, 1.0, -1.0, 2.5, -2.5, 0.5, 1.5, 3.4e38, 1e-45, 16777217.0, 2147483648.0,
                                  4294967296.0, -2147483904.0)] + [0x7F800000, 0xFF800000, 0x7FC00000]
F64_EDGE = [f64_bits(v) for v in (0.0, -0.0, 1.0, -1.0, 2.5, -2.5, 0.5, 1.5, 1.7976931348623157e308, 5e-324,
                                  9007199254740993.0, 2147483647.0, 4294967295.0, -9223372036854775808.0,
                                  18446744073709551616.0, 3.5, -0.4)] + [0x7FF0000000000000, 0xFFF0000000000000,
                                                                          0x7FF8000000000000]

EDGE = {"i": I32_EDGE, "I": I64_EDGE, "f": F32_EDGE, "F": F64_EDGE}
WIDTH = {"i": 32, "I": 64, "f": 32, "F": 64}
LETTER = {"i32": "i", "i64": "I", "f32": "f", "f64": "F"}


def random_value(rng, t):
    if rng.random() < 0.5:
        return rng.choice(EDGE[t])
    if t == "f":
        return f32_bits(np.float32(rng.uniform(-1e6, 1e6)))
    if t == "F":
        return f64_bits(rng.uniform(-1e12, 1e12))
    return rng.getrandbits(WIDTH[t])


def evaluate(name, args):
    ty, op = name.split(".")
    if op in ("clz", "ctz", "popcnt", "eqz"):
        return int_unop(op, args[0], WIDTH[LETTER[ty]])
    if op in ("abs", "neg", "ceil", "floor", "trunc", "nearest", "sqrt"):
        return float_unop(op, args[0], WIDTH[LETTER[ty]])
    if len(args) == 1:
        return conversion(name, args[0])
    if ty in ("i32", "i64"):
        return int_binop(op, args[0], args[1], WIDTH[LETTER[ty]])
    return float_binop(op, args[0], args[1], WIDTH[LETTER[ty]])


def main():
    sigs = []
    with open(sys.argv[1]) as f:
        for line in f:
            line = line.strip()
            if not line.startswith("X(") or '"' not in line:
                continue
            parts = [p.strip() for p in line[2:].split(",")]
            name, sig = parts[2].strip('"'), parts[4].split(")")[0].strip('"')
            if ":" in sig and sig.split(":")[1] and all(c in "iIfF" for c in sig.replace(":", "")) and "." in name:
                if "load" in name or "store" in name or "const" in name or name[:3] not in LETTER or not sig.split(":")[0]:
                    continue
                sigs.append((name, sig))
    rng = random.Random(20240611)
    out = []
    for name, sig in sigs:
        params, result = sig.split(":")
        for _ in range(3):
            args = [random_value(rng, p) for p in params]
            try:
                r = evaluate(name, args)
                nan = (result == "f" and is_nan32(r)) or (result == "F" and is_nan64(r))
                kind = "Nan" if nan else "Value"
                trap = "Unreachable"
            except Trap as t:
                r, kind, trap = 0, "Trap", t.kind
            b = args[1] if len(args) > 1 else 0
            out.append(f'  {{"{name}", 0x{args[0]:X}ull, 0x{b:X}ull, 0x{r:X}ull, Expect::{kind}, TrapKind::{trap}}},')
    with open(sys.argv[2], "w") as f:
        f.write("// Generated by gen_numeric.py; do not edit.\n")
        f.write("\n".join(out) + "\n")
    print(len(out), "cases")


if __name__ == "__main__":
    main()
