"""Ordered bit patterns of non-negative doubles, for bisection to the last bit."""

import struct


def to_bits(x: float) -> int:
    return struct.unpack("<q", struct.pack("<d", x))[0]


def from_bits(bits: int) -> float:
    return struct.unpack("<d", struct.pack("<q", bits))[0]


def bisect_bits(pred, lo: float, hi: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` to adjacent doubles, keeping ``pred(lo)`` false and ``pred(hi)`` true.

    ``pred`` must be monotone (false then true) on the bracket; its values at
    the ends are not evaluated.
    """
    a, b = to_bits(lo), to_bits(hi)
    while b - a > 1:
        mid = (a + b) // 2
        if pred(from_bits(mid)):
            b = mid
        else:
            a = mid
    return from_bits(a), from_bits(b)
