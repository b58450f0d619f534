"""Fixed-width machine words.

A word is a pair (width, value) with the value always reduced modulo
2^width.  Widths are restricted to the sizes the instruction set knows
about; one-bit conditions are plain Python bools, never 1-bit words.
All operations are pure.
"""

from __future__ import annotations

WIDTHS = (8, 16, 32, 64, 128, 256)

_MASK = {w: (1 << w) - 1 for w in WIDTHS}


class WordError(ValueError):
    """Contract violation in the word layer (bad width, bad shift count)."""


class Word:
    __slots__ = ("width", "value")

    def __init__(self, width: int, value: int):
        if width not in _MASK:
            raise WordError(f"unsupported word width {width}")
        self.width = width
        self.value = value & _MASK[width]

    def __eq__(self, other):
        return (
            isinstance(other, Word)
            and self.width == other.width
            and self.value == other.value
        )

    def __hash__(self):
        return hash((self.width, self.value))

    def __repr__(self):
        return f"Word({self.width}, 0x{self.value:0{self.width // 4}x})"


def of_uint(width: int, n: int) -> Word:
    """Inject an arbitrary integer, reducing modulo 2^width."""
    return Word(width, n)


def to_uint(x: Word) -> int:
    return x.value


def to_sint(x: Word) -> int:
    """Two's-complement reading of the value."""
    if x.value >> (x.width - 1):
        return x.value - (1 << x.width)
    return x.value


def _check_count(x: Word, i: int) -> None:
    if not 0 <= i <= x.width:
        raise WordError(f"shift count {i} outside [0, {x.width}]")


def shl(x: Word, i: int) -> Word:
    _check_count(x, i)
    return Word(x.width, x.value << i)


def shr(x: Word, i: int) -> Word:
    """Logical right shift."""
    _check_count(x, i)
    return Word(x.width, x.value >> i)


def sar(x: Word, i: int) -> Word:
    """Arithmetic right shift (sign-filling)."""
    _check_count(x, i)
    return Word(x.width, to_sint(x) >> i)


def rol(x: Word, i: int) -> Word:
    _check_count(x, i)
    i %= x.width
    return Word(x.width, (x.value << i) | (x.value >> (x.width - i)))


def ror(x: Word, i: int) -> Word:
    _check_count(x, i)
    return rol(x, (x.width - i) % x.width)


def add(x: Word, y: Word) -> Word:
    _check_same(x, y)
    return Word(x.width, x.value + y.value)


def sub(x: Word, y: Word) -> Word:
    _check_same(x, y)
    return Word(x.width, x.value - y.value)


def mul(x: Word, y: Word) -> Word:
    """Truncating product."""
    _check_same(x, y)
    return Word(x.width, x.value * y.value)


def and_(x: Word, y: Word) -> Word:
    _check_same(x, y)
    return Word(x.width, x.value & y.value)


def or_(x: Word, y: Word) -> Word:
    _check_same(x, y)
    return Word(x.width, x.value | y.value)


def xor(x: Word, y: Word) -> Word:
    _check_same(x, y)
    return Word(x.width, x.value ^ y.value)


def not_(x: Word) -> Word:
    return Word(x.width, ~x.value)


def neg(x: Word) -> Word:
    return Word(x.width, -x.value)


def _check_same(x: Word, y: Word) -> None:
    if x.width != y.width:
        raise WordError(f"width mismatch: {x.width} vs {y.width}")


def mul_wide(x: Word, y: Word) -> tuple[Word, Word]:
    """Non-truncated unsigned product, returned as (hi, lo)."""
    _check_same(x, y)
    p = x.value * y.value
    return Word(x.width, p >> x.width), Word(x.width, p)


def split(x: Word, sub_width: int) -> list[Word]:
    """View a word as an array of sub-words, least significant first."""
    if sub_width not in _MASK or x.width % sub_width != 0:
        raise WordError(f"cannot split width {x.width} into {sub_width}-bit parts")
    mask = _MASK[sub_width]
    v = x.value
    out = []
    for _ in range(x.width // sub_width):
        out.append(Word(sub_width, v & mask))
        v >>= sub_width
    return out


def join(ws: list[Word], total_width: int) -> Word:
    """Inverse of split: pack sub-words, least significant first."""
    if not ws:
        raise WordError("cannot join an empty list")
    sub_width = ws[0].width
    if any(w.width != sub_width for w in ws):
        raise WordError("join requires uniform sub-word width")
    if sub_width * len(ws) != total_width:
        raise WordError(
            f"{len(ws)} x {sub_width} bits does not make a {total_width}-bit word"
        )
    v = 0
    for w in reversed(ws):
        v = (v << sub_width) | w.value
    return Word(total_width, v)
