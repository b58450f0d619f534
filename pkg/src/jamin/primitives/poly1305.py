"""Poly1305 one-time authenticator, pure functional form.

The key is a pair (r, s) of 16-octet little-endian numbers; r is
clamped to its format before use.  The message is split into 16-byte
blocks, each lifted to a number with one extra high bit set (2^128 for
full blocks, 2^(8*len) for the final partial block, which is the same
as appending a 0x01 octet); the accumulator folds (h + block) * r
modulo 2^130 - 5 and the tag is the low 128 bits of h + s.
"""

from __future__ import annotations

P = (1 << 130) - 5

CLAMP_MASK = 0x0FFFFFFC0FFFFFFC0FFFFFFC0FFFFFFF


def clamp(rbytes: bytes) -> int:
    """Mask the r half of the key to its required format."""
    if len(rbytes) != 16:
        raise ValueError("r must be exactly 16 bytes")
    return int.from_bytes(rbytes, "little") & CLAMP_MASK


def poly1305_spec(r: int, s: int, msg: bytes) -> bytes:
    """Tag a message under a clamped r and a 128-bit s."""
    h = 0
    for off in range(0, len(msg), 16):
        block = msg[off : off + 16]
        b = int.from_bytes(block, "little") + (1 << (8 * len(block)))
        h = ((h + b) * r) % P
    tag = (h + s) % (1 << 128)
    return tag.to_bytes(16, "little")


def poly1305_mac(key: bytes, msg: bytes) -> bytes:
    """Convenience form over the 32-byte one-time key."""
    if len(key) != 32:
        raise ValueError("key must be exactly 32 bytes")
    r = clamp(key[:16])
    s = int.from_bytes(key[16:], "little")
    return poly1305_spec(r, s, msg)
