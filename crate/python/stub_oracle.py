"""Reference implementation of the deterministic stub embedder.

Written from the algorithm description only (FNV-1a 64 seed, xorshift64*
stream, per-token normalization, sorted-token f64 summation, final f32
rounding). Used to produce the golden values frozen in the Rust tests.
"""
import math
import re
import struct
import sys

MASK = (1 << 64) - 1


def fnv1a(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def token_vector(token: str, dim: int):
    s = fnv1a(token.encode("utf-8")) | 1
    out = []
    for _ in range(dim):
        s ^= s >> 12
        s ^= (s << 25) & MASK
        s ^= s >> 27
        u = (s * 2685821657736338717) & MASK
        out.append(((u >> 11) / float(1 << 53)) * 2.0 - 1.0)
    n = math.sqrt(sum(x * x for x in out))
    return [x / n for x in out]


def f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def stub_embed(text: str, dim: int):
    tokens = sorted(t for t in re.split(r"[^0-9a-z]+", text.lower()) if t)
    acc = [0.0] * dim
    for t in tokens:
        for i, x in enumerate(token_vector(t, dim)):
            acc[i] += x
    return [f32(x) for x in acc]


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [f32(x / n) for x in v]


def cos(a, b):
    return sum(x * y for x, y in zip(a, b))


if __name__ == "__main__":
    car = stub_embed("car", 8)
    print("car/8 bits:", [hex(struct.unpack("<I", struct.pack("<f", x))[0]) for x in car])
    rc = unit(stub_embed("red car", 512))
    print("red car vs red truck:", repr(cos(rc, unit(stub_embed("red truck", 512)))))
    print("red car vs blue sky:", repr(cos(rc, unit(stub_embed("blue sky", 512)))))
    print("fnv('car') =", hex(fnv1a(b"car")))
