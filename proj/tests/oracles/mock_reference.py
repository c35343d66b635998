#!/usr/bin/env python3
"""Reference mock encoder. Writes the golden vectors used by the C++ tests."""

import json
import math
import struct
import sys

MASK = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
ZERO_SEED = 0x9E3779B97F4A7C15
DIM = 16
ALPHAS = (0.0, 0.25, 0.5)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


class XorShift64Star:
    def __init__(self, seed: int):
        self.s = seed if seed else ZERO_SEED

    def next(self) -> int:
        s = self.s
        s ^= s >> 12
        s ^= (s << 25) & MASK
        s ^= s >> 27
        self.s = s
        return (s * 2685821657736338717) & MASK


def base(token: str):
    rng = XorShift64Star(fnv1a64(token.lower().encode("utf-8")))
    v = []
    for _ in range(DIM):
        u = (rng.next() >> 11) * 2.0**-53
        v.append(2.0 * u - 1.0)
    norm = 0.0
    for x in v:
        norm += x * x
    norm = math.sqrt(norm)
    return [x / norm for x in v]


def encode(tokens):
    bases = [base(t) for t in tokens]
    n = len(tokens)
    layers = []
    for alpha in ALPHAS:
        rows = []
        for i in range(n):
            v = list(bases[i])
            if alpha > 0.0 and n > 1:
                others = [0.0] * DIM
                for j in range(n):
                    if j != i:
                        for d in range(DIM):
                            others[d] += bases[j][d]
                norm = 0.0
                for d in range(DIM):
                    others[d] /= n - 1
                    v[d] = (1.0 - alpha) * bases[i][d] + alpha * others[d]
                    norm += v[d] * v[d]
                norm = math.sqrt(norm)
                v = [x / norm for x in v]
            rows.append([f32_bits(x) for x in v])
        layers.append(rows)
    return layers


def f64_bits(x: float) -> str:
    return struct.pack(">d", x).hex()


def f32_bits(x: float) -> str:
    return struct.pack(">f", x).hex()


def main():
    sentence = ["The", "disaster", "of", "that", "year"]
    golden = {
        "base": {w: [f64_bits(x) for x in base(w)] for w in ("disaster", "year", "")},
        "encode": {"tokens": sentence, "vectors": encode(sentence)},
    }
    out = sys.argv[1] if len(sys.argv) > 1 else "-"
    text = json.dumps(golden, indent=1) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)


if __name__ == "__main__":
    main()
