"""Gimli permutation, pure functional form.

State is a 3x4 matrix of 32-bit words, indexed row-major.  Rounds
count from 24 down to 1: every round applies the column-wise non-linear
layer (rotations by 24 and 9 plus the shift-and-mix combination); the
linear layer swaps entries of the first row every second round (big
swap on rounds = 2 mod 4, small swap on rounds = 0 mod 4) and the
rounds divisible by four also inject the constant 0x9e377900 xor the
round number into the first word.
"""

from __future__ import annotations

_M32 = 0xFFFFFFFF

ROUND_CONSTANT = 0x9E377900


def _rol32(x: int, n: int) -> int:
    return ((x << n) | (x >> (32 - n))) & _M32


def gimli(state: list[int]) -> list[int]:
    """Apply the 24-round permutation to 12 words (row-major 3x4)."""
    if len(state) != 12:
        raise ValueError("state must be 12 words")
    s = [w & _M32 for w in state]
    for rnd in range(24, 0, -1):
        for col in range(4):
            x = _rol32(s[col], 24)
            y = _rol32(s[4 + col], 9)
            z = s[8 + col]
            s[8 + col] = (x ^ (z << 1) ^ ((y & z) << 2)) & _M32
            s[4 + col] = (y ^ x ^ ((x | z) << 1)) & _M32
            s[col] = (z ^ y ^ ((x & y) << 3)) & _M32
        if rnd % 4 == 0:
            s[0], s[1] = s[1], s[0]
            s[2], s[3] = s[3], s[2]
            s[0] ^= ROUND_CONSTANT ^ rnd
        elif rnd % 4 == 2:
            s[0], s[2] = s[2], s[0]
            s[1], s[3] = s[3], s[1]
    return s


def gimli_bytes(state: bytes) -> bytes:
    """Byte-level view: 48 bytes, words little-endian."""
    if len(state) != 48:
        raise ValueError("state must be 48 bytes")
    words = [int.from_bytes(state[4 * i : 4 * i + 4], "little") for i in range(12)]
    out = gimli(words)
    return b"".join(w.to_bytes(4, "little") for w in out)
