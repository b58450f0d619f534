"""Byte-addressed global memory with declared valid regions.

The memory is a partial map from 64-bit addresses to bytes plus a set of
half-open intervals [base, base+len) that accesses must stay inside (the
memory calling contract).  Store operations return a new Memory value;
the interpreter obtains a private copy via `thaw` and mutates that one
in place, which is observationally the same thing.

Multi-byte accesses are little-endian compositions of single-byte
accesses, never primitive, so overlapping accesses of different widths
("type punning") behave per the byte-level semantics.

In strict mode (the default), reading a byte that was never written
raises UninitializedRead; permissive mode returns 0 instead and exists
for the differential harness only.

Dump format: one line per 16 bytes, `addr: b0 b1 ...` in lowercase hex,
rows starting at each region base; in-region bytes that were never
written print as `..`.
"""

from __future__ import annotations

from bisect import bisect_right

from .words import Word

ADDR_MASK = (1 << 64) - 1


class MemAccessError(Exception):
    def __init__(self, address: int, message: str):
        self.address = address
        super().__init__(message)


class OutOfRegion(MemAccessError):
    def __init__(self, address: int):
        super().__init__(address, f"address 0x{address:x} outside all declared regions")


class UninitializedRead(MemAccessError):
    def __init__(self, address: int):
        super().__init__(address, f"read of uninitialized byte at 0x{address:x}")


class Memory:
    __slots__ = ("_bytes", "_regions", "strict")

    def __init__(self, *, strict: bool = True):
        self._bytes: dict[int, int] = {}
        # sorted, pairwise disjoint, non-adjacent (base, end) intervals
        self._regions: list[tuple[int, int]] = []
        self.strict = strict

    # -- construction ------------------------------------------------

    def copy(self) -> "Memory":
        m = Memory(strict=self.strict)
        m._bytes = dict(self._bytes)
        m._regions = list(self._regions)
        return m

    thaw = copy  # the interpreter's private working copy

    def regions(self) -> list[tuple[int, int]]:
        return list(self._regions)

    # -- region contract ----------------------------------------------

    def in_region(self, a: int) -> bool:
        i = bisect_right(self._regions, (a, 1 << 65))
        if i == 0:
            return False
        base, end = self._regions[i - 1]
        return base <= a < end

    def _check_region(self, a: int) -> None:
        if not self.in_region(a):
            raise OutOfRegion(a)

    def _add_region_inplace(self, base: int, length: int) -> None:
        if length < 0:
            raise ValueError("region length must be non-negative")
        if base < 0 or base + length > 1 << 64:
            raise ValueError("region overflows the 64-bit address space")
        if length == 0:
            return
        lo, hi = base, base + length
        merged = []
        for b, e in self._regions:
            if e < lo or b > hi:  # disjoint and non-adjacent
                merged.append((b, e))
            else:
                lo, hi = min(lo, b), max(hi, e)
        merged.append((lo, hi))
        merged.sort()
        self._regions = merged

    # -- byte level ----------------------------------------------------

    def _load8(self, a: int) -> int:
        self._check_region(a)
        v = self._bytes.get(a)
        if v is None:
            if self.strict:
                raise UninitializedRead(a)
            return 0
        return v

    def _store8_inplace(self, a: int, w: int) -> None:
        self._check_region(a)
        self._bytes[a] = w & 0xFF

    def is_initialized(self, a: int) -> bool:
        return a in self._bytes

    # -- multi-byte, little-endian --------------------------------------

    def _check_span(self, a: int, n: int) -> bool:
        """True when [a, a+n) sits inside one region (no wraparound)."""
        if a + n > 1 << 64:
            return False
        i = bisect_right(self._regions, (a, 1 << 65))
        if i == 0:
            return False
        base, end = self._regions[i - 1]
        return base <= a and a + n <= end

    def load_int(self, a: int, width: int) -> int:
        n = width // 8
        if self._check_span(a, n):
            v = 0
            get = self._bytes.get
            if self.strict:
                for i in range(n - 1, -1, -1):
                    b = get(a + i)
                    if b is None:
                        raise UninitializedRead(a + i)
                    v = (v << 8) | b
            else:
                for i in range(n - 1, -1, -1):
                    v = (v << 8) | (get(a + i) or 0)
            return v
        v = 0
        for i in reversed(range(n)):
            v = (v << 8) | self._load8((a + i) & ADDR_MASK)
        return v

    def store_int_inplace(self, a: int, width: int, value: int) -> None:
        n = width // 8
        if self._check_span(a, n):
            put = self._bytes
            for i in range(n):
                put[a + i] = value & 0xFF
                value >>= 8
            return
        for i in range(n):
            self._store8_inplace((a + i) & ADDR_MASK, value & 0xFF)
            value >>= 8

    def _loadW(self, a: int, width: int) -> Word:
        return Word(width, self.load_int(a, width))

    def _storeW_inplace(self, a: int, x: Word) -> None:
        self.store_int_inplace(a, x.width, x.value)


# -- functional interface ----------------------------------------------


def load8(m: Memory, a: int) -> int:
    return m._load8(a)


def store8(m: Memory, a: int, w: int) -> Memory:
    m2 = m.copy()
    m2._store8_inplace(a, w)
    return m2


def loadW(m: Memory, a: int, width: int) -> Word:
    return m._loadW(a, width)


def storeW(m: Memory, a: int, x: Word) -> Memory:
    m2 = m.copy()
    m2._storeW_inplace(a, x)
    return m2


def add_region(m: Memory, base: int, length: int) -> Memory:
    m2 = m.copy()
    m2._add_region_inplace(base, length)
    return m2


def load_bytes(m: Memory, a: int, n: int) -> bytes:
    return bytes(m._load8((a + i) & ADDR_MASK) for i in range(n))


def store_bytes(m: Memory, a: int, data: bytes) -> Memory:
    m2 = m.copy()
    for i, b in enumerate(data):
        m2._store8_inplace((a + i) & ADDR_MASK, b)
    return m2


# -- hex dumps ----------------------------------------------------------


def dump(m: Memory) -> str:
    lines = []
    for base, end in m.regions():
        for row in range(base, end, 16):
            cells = []
            for a in range(row, min(row + 16, end)):
                b = m._bytes.get(a)
                cells.append(f"{b:02x}" if b is not None else "..")
            lines.append(f"{row:08x}: " + " ".join(cells))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_dump(text: str, *, strict: bool = True) -> Memory:
    m = Memory(strict=strict)
    spans: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            addr_part, _, rest = line.partition(":")
            addr = int(addr_part, 16)
            cells = rest.split()
        except ValueError as exc:
            raise ValueError(f"bad dump line {lineno}: {raw!r}") from exc
        if len(cells) > 16:
            raise ValueError(f"dump line {lineno} has more than 16 bytes")
        spans.append((addr, len(cells)))
        for i, cell in enumerate(cells):
            if cell != "..":
                m._bytes[addr + i] = int(cell, 16)
    for base, n in spans:
        m._add_region_inplace(base, n)
    return m
