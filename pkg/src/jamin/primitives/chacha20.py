"""ChaCha20 stream cipher, pure functional form.

The initial state is the 4x4 matrix of 32-bit words: four constants,
the 256-bit key as eight words, then the 32-bit block counter next to
the 96-bit nonce as three words.  Ten double rounds apply the quarter
round over the four columns and then the four diagonals; the keystream
block is the word-wise 32-bit sum of the permuted state with the
initial state, serialized little-endian.
"""

from __future__ import annotations

CONSTANTS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)

_M32 = 0xFFFFFFFF

COLUMN_ROUNDS = ((0, 4, 8, 12), (1, 5, 9, 13), (2, 6, 10, 14), (3, 7, 11, 15))
DIAGONAL_ROUNDS = ((0, 5, 10, 15), (1, 6, 11, 12), (2, 7, 8, 13), (3, 4, 9, 14))


def _rol32(x: int, n: int) -> int:
    return ((x << n) | (x >> (32 - n))) & _M32


def qround(a: int, b: int, c: int, d: int) -> tuple[int, int, int, int]:
    a = (a + b) & _M32
    d = _rol32(d ^ a, 16)
    c = (c + d) & _M32
    b = _rol32(b ^ c, 12)
    a = (a + b) & _M32
    d = _rol32(d ^ a, 8)
    c = (c + d) & _M32
    b = _rol32(b ^ c, 7)
    return a, b, c, d


def initial_state(key: bytes, nonce: bytes, counter: int) -> list[int]:
    if len(key) != 32:
        raise ValueError("key must be exactly 32 bytes")
    if len(nonce) != 12:
        raise ValueError("nonce must be exactly 12 bytes")
    words = list(CONSTANTS)
    words += [int.from_bytes(key[4 * i : 4 * i + 4], "little") for i in range(8)]
    words.append(counter & _M32)
    words += [int.from_bytes(nonce[4 * i : 4 * i + 4], "little") for i in range(3)]
    return words


def chacha20_block(key: bytes, nonce: bytes, counter: int) -> bytes:
    """One 64-byte keystream block."""
    init = initial_state(key, nonce, counter)
    st = list(init)
    for _ in range(10):
        for sel in COLUMN_ROUNDS + DIAGONAL_ROUNDS:
            a, b, c, d = sel
            st[a], st[b], st[c], st[d] = qround(st[a], st[b], st[c], st[d])
    out = bytearray()
    for w, w0 in zip(st, init):
        out += ((w + w0) & _M32).to_bytes(4, "little")
    return bytes(out)


def chacha20_xor(key: bytes, nonce: bytes, counter: int, msg: bytes) -> bytes:
    """XOR a message with the keystream starting at the given counter."""
    out = bytearray()
    for off in range(0, len(msg), 64):
        ks = chacha20_block(key, nonce, counter)
        counter = (counter + 1) & _M32
        chunk = msg[off : off + 64]
        out += bytes(m ^ k for m, k in zip(chunk, ks))
    return bytes(out)
