"""Instruction descriptors and executable semantics.

Every intrinsic is described by a Descriptor packaging its implicit and
explicit operands, a pure semantics function, and emission metadata.
New instructions are added by registering one descriptor.

At the source level an intrinsic is a pure function: it takes one value
per source (implicit register sources become explicit arguments) and
returns one value per destination.  Flag results use the five-flag
order OF, CF, SF, PF, ZF; flags an instruction leaves architecturally
undefined are returned as UNDEF, which the interpreter treats as poison.

Vector instructions carry two semantics: `sem` computes on the packed
wide word (the OpsV view) while `sem_lanes` computes on the array of
sub-words (the Ops view).  The two are written independently and are
required to agree under the word/array bijection; `exec_vector`
dispatches on the requested mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .words import Word


class IsaError(Exception):
    pass


class UnknownInstruction(IsaError):
    pass


class IsaFault(IsaError):
    """Runtime fault raised by an instruction's semantics (division)."""


class _FlagUndef:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEF"

    def __bool__(self):
        raise IsaError("undefined flag used in a computation")


UNDEF = _FlagUndef()

OPS = "Ops"
OPSV = "OpsV"

# ------------------------------------------------------------- arg locs


@dataclass(frozen=True)
class F:
    """Implicit flag-register destination/source."""

    flag: str


@dataclass(frozen=True)
class R:
    """Implicit machine-register destination/source."""

    reg: str


@dataclass(frozen=True)
class E:
    """Explicit operand: `width` bits, position `index` in the emitted form."""

    width: int
    index: int


ArgLoc = object

FLAGS5 = (F("OF"), F("CF"), F("SF"), F("PF"), F("ZF"))


@dataclass
class Descriptor:
    name: str
    sources: tuple
    destinations: tuple
    oshape: tuple  # operand kinds of the emitted instruction
    mnemonic: str
    sem: Callable  # list of values -> list of values
    size: int  # operation width in bits (lane width for vector ops)
    lanes: Optional[tuple[int, int]] = None  # (n, m) when this is a vector op
    sem_lanes: Optional[Callable] = None  # Ops-mode semantics
    src_lanes: tuple = ()  # per-source lane shape or None
    dst_lanes: tuple = ()
    reads_memory: bool = False
    writes_memory: bool = False
    variable_time: bool = False  # extension point; no current instruction sets it
    src_widths: tuple = field(default=(), repr=False)  # int bits or "flag"
    dst_widths: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.src_widths:
            self.src_widths = tuple(self._loc_width(s) for s in self.sources)
        if not self.dst_widths:
            self.dst_widths = tuple(self._loc_width(d) for d in self.destinations)

    def _loc_width(self, loc):
        if isinstance(loc, F):
            return "flag"
        if isinstance(loc, E):
            return loc.width
        if isinstance(loc, R):
            # vector registers are as wide as the op, scalar regs 64-bit
            return self.lanes[0] * self.lanes[1] if self.lanes else 64
        raise IsaError(f"bad argument location {loc!r}")

    @property
    def is_vector(self) -> bool:
        return self.lanes is not None


_REGISTRY: dict[str, Descriptor] = {}


def register(d: Descriptor) -> Descriptor:
    if d.name in _REGISTRY:
        raise IsaError(f"duplicate descriptor {d.name}")
    _REGISTRY[d.name] = d
    return d


def registry() -> dict[str, Descriptor]:
    return dict(_REGISTRY)


def lookup(name: str) -> Descriptor:
    key = name.lstrip("#")
    d = _REGISTRY.get(key)
    if d is None:
        raise UnknownInstruction(f"unknown instruction {name!r}")
    return d


# ------------------------------------------------------------ execution


def _coerce_sources(d: Descriptor, args):
    if len(args) != len(d.sources):
        raise IsaError(
            f"{d.name} expects {len(d.sources)} arguments, got {len(args)}"
        )
    vals = []
    for a, w in zip(args, d.src_widths):
        if w == "flag":
            if not isinstance(a, bool):
                raise IsaError(f"{d.name}: flag argument must be a bool, got {a!r}")
            vals.append(a)
        else:
            if isinstance(a, Word):
                a = a.value
            elif isinstance(a, bool) or not isinstance(a, int):
                raise IsaError(f"{d.name}: word argument expected, got {a!r}")
            vals.append(a & ((1 << w) - 1))  # implicit truncation
    return vals


def _wrap_outputs(d: Descriptor, outs):
    res = []
    for o, w in zip(outs, d.dst_widths):
        if w == "flag":
            res.append(o)
        else:
            res.append(Word(w, o))
    return res


def exec_intrinsic(d: Descriptor, args) -> list:
    """Run a descriptor's pure semantics; Word in, Word out."""
    outs = d.sem(_coerce_sources(d, args))
    if len(outs) != len(d.destinations):
        raise IsaError(f"{d.name}: semantics returned {len(outs)} values")
    return _wrap_outputs(d, outs)


def exec_raw(d: Descriptor, vals: list) -> list:
    """Trusting fast path for the interpreter: plain ints/bools in and out."""
    return d.sem(vals)


def _split_int(v: int, n: int, m: int) -> list[int]:
    mask = (1 << m) - 1
    return [(v >> (m * i)) & mask for i in range(n)]


def _join_int(vals, m: int) -> int:
    v = 0
    for x in reversed(vals):
        v = (v << m) | x
    return v


def exec_ops(d: Descriptor, args) -> list:
    """Ops-mode execution: vector operands as lists of sub-word ints."""
    if not d.is_vector:
        raise IsaError(f"{d.name} is not a vector instruction")
    vals = _coerce_sources(d, args)
    ins = []
    for v, shape in zip(vals, d.src_lanes):
        ins.append(_split_int(v, *shape) if shape else v)
    outs = d.sem_lanes(ins)
    return outs


def exec_vector(d: Descriptor, mode: str, args) -> list:
    """Execute a vector intrinsic in the chosen representation.

    Both modes return packed Words so callers can store results
    uniformly; in Ops mode the lane results are joined through the
    word/array bijection.
    """
    if mode == OPSV:
        return exec_intrinsic(d, args)
    if mode != OPS:
        raise IsaError(f"unknown vector mode {mode!r}")
    outs = exec_ops(d, args)
    res = []
    for o, shape, w in zip(outs, d.dst_lanes, d.dst_widths):
        if shape:
            n, m = shape
            res.append(Word(w, _join_int(o, m)))
        else:
            res.append(o if w == "flag" else Word(w, o))
    return res


def validate_descriptor(d: Descriptor) -> list[str]:
    """Well-formedness checks, established by computation."""
    problems = []
    if len(d.sources) != len(d.src_widths):
        problems.append("source width list out of sync")
    seen = set()
    for loc in d.destinations:
        if loc in seen:
            problems.append(f"duplicate destination {loc!r}")
        seen.add(loc)
    e_idx = sorted(loc.index for loc in d.sources if isinstance(loc, E))
    if e_idx != list(range(len(e_idx))):
        problems.append("explicit-argument indices are not dense from 0")
    for w in d.src_widths + d.dst_widths:
        if w != "flag" and w not in (8, 16, 32, 64, 128, 256):
            problems.append(f"illegal operand width {w}")
    if d.is_vector and d.sem_lanes is None:
        problems.append("vector descriptor without lane semantics")
    # probe the semantics with benign inputs
    probe = [False if w == "flag" else 1 for w in d.src_widths]
    try:
        outs = d.sem(probe)
    except IsaFault:
        outs = None
    except Exception as exc:  # noqa: BLE001 - report, do not crash
        problems.append(f"semantics raised {exc!r} on probe input")
        outs = None
    if outs is not None:
        if len(outs) != len(d.destinations):
            problems.append(
                f"semantics returns {len(outs)} values for {len(d.destinations)} destinations"
            )
        else:
            for o, w in zip(outs, d.dst_widths):
                if w == "flag":
                    if not (isinstance(o, bool) or o is UNDEF):
                        problems.append(f"flag output is {o!r}")
                elif not isinstance(o, int) or o < 0 or o >> w:
                    problems.append(f"word output {o!r} does not fit {w} bits")
    if d.is_vector and not problems:
        vec = exec_vector(d, OPS, probe)
        vecv = exec_vector(d, OPSV, probe)
        if vec != vecv:
            problems.append("Ops and OpsV disagree on probe input")
    return problems


# ------------------------------------------------------- flag helpers


def _msb(v: int, w: int) -> bool:
    return bool((v >> (w - 1)) & 1)


def _parity(v: int) -> bool:
    return bin(v & 0xFF).count("1") % 2 == 0


def _szp(r: int, w: int):
    return _msb(r, w), _parity(r), r == 0


# ------------------------------------------------- scalar definitions


def _scalar(name, w, nsrc, dests, sem, oshape=("oprd", "oprd"), mnemonic=None):
    register(
        Descriptor(
            name=f"{name}_{w}",
            sources=tuple(E(w, i) for i in range(nsrc)),
            destinations=dests,
            oshape=oshape,
            mnemonic=mnemonic or name.split("_")[-1],
            sem=sem,
            size=w,
        )
    )


def _build_scalars():
    for w in (8, 16, 32, 64):
        mask = (1 << w) - 1
        top = 1 << (w - 1)

        def add_sem(a, *, w=w, mask=mask):
            x, y = a
            s = x + y
            r = s & mask
            cf = s > mask
            of = (_msb(x, w) == _msb(y, w)) and (_msb(r, w) != _msb(x, w))
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def adc_sem(a, *, w=w, mask=mask):
            x, y, c = a
            s = x + y + c
            r = s & mask
            cf = s > mask
            of = (_msb(x, w) == _msb(y, w)) and (_msb(r, w) != _msb(x, w))
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def sub_sem(a, *, w=w, mask=mask):
            x, y = a
            r = (x - y) & mask
            cf = x < y
            of = (_msb(x, w) != _msb(y, w)) and (_msb(r, w) != _msb(x, w))
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def sbb_sem(a, *, w=w, mask=mask):
            x, y, c = a
            r = (x - y - c) & mask
            cf = x < y + c
            of = (_msb(x, w) != _msb(y, w)) and (_msb(r, w) != _msb(x, w))
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def mul_sem(a, *, w=w, mask=mask):
            x, y = a
            p = x * y
            hi, lo = p >> w, p & mask
            over = hi != 0
            return [over, over, UNDEF, UNDEF, UNDEF, hi, lo]

        def imul_sem(a, *, w=w, mask=mask, top=top):
            x, y = a
            sx = x - (1 << w) if x & top else x
            sy = y - (1 << w) if y & top else y
            full = sx * sy
            r = full & mask
            sr = r - (1 << w) if r & top else r
            over = full != sr
            return [over, over, UNDEF, UNDEF, UNDEF, r]

        def div_sem(a, *, w=w, mask=mask):
            hi, lo, dv = a
            if dv == 0:
                raise IsaFault("division by zero")
            num = (hi << w) | lo
            q, r = divmod(num, dv)
            if q > mask:
                raise IsaFault("division overflow")
            return [UNDEF, UNDEF, UNDEF, UNDEF, UNDEF, q, r]

        def and_sem(a, *, w=w):
            r = a[0] & a[1]
            sf, pf, zf = _szp(r, w)
            return [False, False, sf, pf, zf, r]

        def or_sem(a, *, w=w):
            r = a[0] | a[1]
            sf, pf, zf = _szp(r, w)
            return [False, False, sf, pf, zf, r]

        def xor_sem(a, *, w=w):
            r = a[0] ^ a[1]
            sf, pf, zf = _szp(r, w)
            return [False, False, sf, pf, zf, r]

        def not_sem(a, *, mask=mask):
            return [a[0] ^ mask]

        def neg_sem(a, *, w=w, mask=mask, top=top):
            x = a[0]
            r = (-x) & mask
            sf, pf, zf = _szp(r, w)
            return [x == top, x != 0, sf, pf, zf, r]

        def mov_sem(a):
            return [a[0]]

        def shl_sem(a, *, w=w, mask=mask):
            x, cnt = a
            c = cnt & (w - 1)
            if c == 0:
                return [UNDEF, UNDEF, UNDEF, UNDEF, UNDEF, x]
            r = (x << c) & mask
            cf = bool((x >> (w - c)) & 1)
            of = (_msb(r, w) != cf) if c == 1 else UNDEF
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def shr_sem(a, *, w=w):
            x, cnt = a
            c = cnt & (w - 1)
            if c == 0:
                return [UNDEF, UNDEF, UNDEF, UNDEF, UNDEF, x]
            r = x >> c
            cf = bool((x >> (c - 1)) & 1)
            of = _msb(x, w) if c == 1 else UNDEF
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def sar_sem(a, *, w=w, mask=mask, top=top):
            x, cnt = a
            c = cnt & (w - 1)
            if c == 0:
                return [UNDEF, UNDEF, UNDEF, UNDEF, UNDEF, x]
            sx = x - (1 << w) if x & top else x
            r = (sx >> c) & mask
            cf = bool((sx >> (c - 1)) & 1)
            of = False if c == 1 else UNDEF
            sf, pf, zf = _szp(r, w)
            return [of, cf, sf, pf, zf, r]

        def rol_sem(a, *, w=w, mask=mask):
            x, cnt = a
            c = cnt & (w - 1)
            if c == 0:
                return [UNDEF, UNDEF, x]
            r = ((x << c) | (x >> (w - c))) & mask
            cf = bool(r & 1)
            of = (_msb(r, w) != cf) if c == 1 else UNDEF
            return [of, cf, r]

        def ror_sem(a, *, w=w, mask=mask):
            x, cnt = a
            c = cnt & (w - 1)
            if c == 0:
                return [UNDEF, UNDEF, x]
            r = ((x >> c) | (x << (w - c))) & mask
            cf = _msb(r, w)
            of = (_msb(r, w) != bool((r >> (w - 2)) & 1)) if c == 1 else UNDEF
            return [of, cf, r]

        def cmov_sem(a):
            cond, src, old = a
            return [src if cond else old]

        def set0_sem(a):
            return [False, False, False, True, True, 0]

        res = (E(w, 0),)
        flags_res = FLAGS5 + res
        _scalar("x86_ADD", w, 2, flags_res, add_sem)
        register(
            Descriptor(
                name=f"x86_ADC_{w}",
                sources=(E(w, 0), E(w, 1), F("CF")),
                destinations=flags_res,
                oshape=("oprd", "oprd"),
                mnemonic="ADC",
                sem=adc_sem,
                size=w,
            )
        )
        _scalar("x86_SUB", w, 2, flags_res, sub_sem)
        _scalar("x86_AND", w, 2, flags_res, and_sem)
        _scalar("x86_OR", w, 2, flags_res, or_sem)
        _scalar("x86_XOR", w, 2, flags_res, xor_sem)
        _scalar("x86_SHL", w, 2, flags_res, shl_sem, ("oprd", "imm8"))
        _scalar("x86_SHR", w, 2, flags_res, shr_sem, ("oprd", "imm8"))
        _scalar("x86_SAR", w, 2, flags_res, sar_sem, ("oprd", "imm8"))
        _scalar("x86_NOT", w, 1, res, not_sem, ("oprd",))
        _scalar("x86_NEG", w, 1, flags_res, neg_sem, ("oprd",))
        _scalar("x86_MOV", w, 1, res, mov_sem, ("oprd",))
        _scalar("x86_IMUL", w, 2, flags_res, imul_sem)
        register(
            Descriptor(
                name=f"x86_ROL_{w}",
                sources=(E(w, 0), E(8, 1)),
                destinations=(F("OF"), F("CF"), E(w, 0)),
                oshape=("oprd", "imm8"),
                mnemonic="ROL",
                sem=rol_sem,
                size=w,
            )
        )
        register(
            Descriptor(
                name=f"x86_ROR_{w}",
                sources=(E(w, 0), E(8, 1)),
                destinations=(F("OF"), F("CF"), E(w, 0)),
                oshape=("oprd", "imm8"),
                mnemonic="ROR",
                sem=ror_sem,
                size=w,
            )
        )
        register(
            Descriptor(
                name=f"x86_SBB_{w}",
                sources=(E(w, 0), E(w, 1), F("CF")),
                destinations=flags_res,
                oshape=("oprd", "oprd"),
                mnemonic="SBB",
                sem=sbb_sem,
                size=w,
            )
        )
        register(
            Descriptor(
                name=f"x86_MUL_{w}",
                sources=(R("RAX"), E(w, 0)),
                destinations=FLAGS5 + (R("RDX"), R("RAX")),
                oshape=("oprd",),
                mnemonic="MUL",
                sem=mul_sem,
                size=w,
            )
        )
        register(
            Descriptor(
                name=f"x86_DIV_{w}",
                sources=(R("RDX"), R("RAX"), E(w, 0)),
                destinations=FLAGS5 + (R("RAX"), R("RDX")),
                oshape=("oprd",),
                mnemonic="DIV",
                sem=div_sem,
                size=w,
            )
        )
        register(
            Descriptor(
                name=f"x86_CMOV_{w}",
                sources=(F("cond"), E(w, 0), E(w, 1)),
                destinations=(E(w, 1),),
                oshape=("oprd", "oprd"),
                mnemonic="CMOVcc",
                sem=cmov_sem,
                size=w,
            )
        )
        register(
            Descriptor(
                name=f"set0_{w}",
                sources=(),
                destinations=flags_res,
                oshape=("oprd",),
                mnemonic="XOR",  # compiled as r := XOR r r
                sem=set0_sem,
                size=w,
            )
        )


_build_scalars()


def exec_vector_raw(d: Descriptor, mode: str, vals: list) -> list:
    """Int-level twin of exec_vector for the interpreter's hot path."""
    if mode == OPSV:
        return d.sem(vals)
    ins = []
    for v, shape in zip(vals, d.src_lanes):
        ins.append(_split_int(v, *shape) if shape else v)
    outs = d.sem_lanes(ins)
    res = []
    for o, shape in zip(outs, d.dst_lanes):
        res.append(_join_int(o, shape[1]) if shape else o)
    return res


# ------------------------------------------------- vector definitions


def _rep_mask(bits: int, n: int, m: int) -> int:
    """The n-lane repetition of a per-lane bit pattern."""
    v = 0
    for _ in range(n):
        v = (v << m) | bits
    return v


def _vector(name, n, m, sources, src_lanes, sem, sem_lanes, dst=None, dst_lanes=None,
            oshape=("oprd", "oprd"), mnemonic=None):
    total = n * m
    register(
        Descriptor(
            name=name,
            sources=tuple(sources),
            destinations=(dst if dst is not None else E(total, 0),),
            oshape=oshape,
            mnemonic=mnemonic or name.replace("x86_", ""),
            sem=sem,
            size=m,
            lanes=(n, m),
            sem_lanes=sem_lanes,
            src_lanes=tuple(src_lanes),
            dst_lanes=(dst_lanes if dst_lanes is not None else (n, m),),
        )
    )


def _build_vectors():
    # lane-wise addition (SWAR on the packed word in OpsV mode)
    for n, m in ((4, 64), (8, 32)):
        total = n * m
        lane_mask = (1 << m) - 1
        high = _rep_mask(1 << (m - 1), n, m)
        low = _rep_mask(lane_mask >> 1, n, m)

        def padd_v(a, *, high=high, low=low):
            x, y = a
            return [((x & low) + (y & low)) ^ ((x ^ y) & high)]

        def padd_l(a, *, lane_mask=lane_mask):
            x, y = a
            return [[(u + v) & lane_mask for u, v in zip(x, y)]]

        _vector(f"x86_VPADD_{n}u{m}", n, m,
                [E(total, 0), E(total, 1)], [(n, m), (n, m)], padd_v, padd_l)

        def pmulu_v(a, *, n=n, m=m, lane_mask=lane_mask):
            x, y = a
            r = 0
            m32 = (1 << (m // 2)) - 1
            for i in range(n):
                p = ((x >> (m * i)) & m32) * ((y >> (m * i)) & m32)
                r |= (p & lane_mask) << (m * i)
            return [r]

        def pmulu_l(a, *, m=m, lane_mask=lane_mask):
            x, y = a
            m32 = (1 << (m // 2)) - 1
            return [[((u & m32) * (v & m32)) & lane_mask for u, v in zip(x, y)]]

        if (n, m) == (4, 64):
            _vector("x86_VPMULU_4u64", n, m,
                    [E(total, 0), E(total, 1)], [(n, m), (n, m)], pmulu_v, pmulu_l,
                    mnemonic="VPMULUDQ")

    # whole-register bitwise operations, viewed as 64-bit lanes in Ops mode
    for total in (128, 256):
        n = total // 64
        for nm, pyop in (("VPXOR", "^"), ("VPAND", "&"), ("VPOR", "|")):
            if pyop == "^":
                sem = lambda a: [a[0] ^ a[1]]
                sem_l = lambda a: [[u ^ v for u, v in zip(a[0], a[1])]]
            elif pyop == "&":
                sem = lambda a: [a[0] & a[1]]
                sem_l = lambda a: [[u & v for u, v in zip(a[0], a[1])]]
            else:
                sem = lambda a: [a[0] | a[1]]
                sem_l = lambda a: [[u | v for u, v in zip(a[0], a[1])]]
            _vector(f"x86_{nm}_{total}", n, 64,
                    [E(total, 0), E(total, 1)], [(n, 64), (n, 64)], sem, sem_l)

    # lane shifts by a shared count
    for n, m in ((4, 64), (8, 32), (4, 32)):
        total = n * m
        lane_mask = (1 << m) - 1

        def psll_v(a, *, n=n, m=m):
            x, c = a
            if c >= m:
                return [0]
            keep = _rep_mask((1 << (m - c)) - 1, n, m)
            return [(x & keep) << c]

        def psll_l(a, *, m=m, lane_mask=lane_mask):
            x, c = a
            if c >= m:
                return [[0] * len(x)]
            return [[(u << c) & lane_mask for u in x]]

        def psrl_v(a, *, n=n, m=m):
            x, c = a
            if c >= m:
                return [0]
            keep = _rep_mask((1 << (m - c)) - 1, n, m)
            return [(x >> c) & keep]

        def psrl_l(a, *, m=m):
            x, c = a
            if c >= m:
                return [[0] * len(x)]
            return [[u >> c for u in x]]

        _vector(f"x86_VPSLL_{n}u{m}", n, m,
                [E(total, 0), E(8, 1)], [(n, m), None], psll_v, psll_l,
                oshape=("oprd", "imm8"))
        _vector(f"x86_VPSRL_{n}u{m}", n, m,
                [E(total, 0), E(8, 1)], [(n, m), None], psrl_v, psrl_l,
                oshape=("oprd", "imm8"))

    # per-lane variable shifts (vector of counts)
    for nm in ("4u64", "8u32"):
        n, m = (4, 64) if nm == "4u64" else (8, 32)
        total = n * m
        lane_mask = (1 << m) - 1

        def psllv_v(a, *, n=n, m=m, lane_mask=lane_mask):
            x, cs = a
            r = 0
            for i in range(n):
                c = (cs >> (m * i)) & lane_mask
                if c < m:
                    r |= (((x >> (m * i)) & lane_mask) << c & lane_mask) << (m * i)
            return [r]

        def psllv_l(a, *, m=m, lane_mask=lane_mask):
            x, cs = a
            return [[(u << c) & lane_mask if c < m else 0 for u, c in zip(x, cs)]]

        def psrlv_v(a, *, n=n, m=m, lane_mask=lane_mask):
            x, cs = a
            r = 0
            for i in range(n):
                c = (cs >> (m * i)) & lane_mask
                if c < m:
                    r |= (((x >> (m * i)) & lane_mask) >> c) << (m * i)
            return [r]

        def psrlv_l(a, *, m=m, lane_mask=lane_mask):
            x, cs = a
            return [[u >> c if c < m else 0 for u, c in zip(x, cs)]]

        _vector(f"x86_VPSLLV_{nm}", n, m,
                [E(total, 0), E(total, 1)], [(n, m), (n, m)], psllv_v, psllv_l)
        _vector(f"x86_VPSRLV_{nm}", n, m,
                [E(total, 0), E(total, 1)], [(n, m), (n, m)], psrlv_v, psrlv_l)

    # broadcasts: multiplication by the all-lanes-one pattern in OpsV mode
    for name, n, m in (("x86_VPBROADCAST_4u64", 4, 64),
                       ("x86_VPBROADCAST_8u32", 8, 32),
                       ("x86_VPBROADCAST_4u32", 4, 32)):
        mult = _rep_mask(1, n, m)

        def bcast_v(a, *, mult=mult):
            return [a[0] * mult]

        def bcast_l(a, *, n=n):
            return [[a[0]] * n]

        _vector(name, n, m, [E(m, 0)], [None], bcast_v, bcast_l, oshape=("oprd",))

    # dword shuffles: imm8 is four 2-bit source positions, applied per
    # 128-bit half in the 256-bit form
    m32 = (1 << 32) - 1

    def shufd128_v(a):
        x, imm = a
        r = 0
        for i in range(4):
            sel = (imm >> (2 * i)) & 3
            r |= ((x >> (32 * sel)) & m32) << (32 * i)
        return [r]

    def shufd128_l(a):
        x, imm = a
        return [[x[(imm >> (2 * i)) & 3] for i in range(4)]]

    _vector("x86_VPSHUFD_128", 4, 32,
            [E(128, 0), E(8, 1)], [(4, 32), None], shufd128_v, shufd128_l,
            oshape=("oprd", "imm8"))

    def shufd256_v(a):
        x, imm = a
        r = 0
        for half in (0, 128):
            for i in range(4):
                sel = (imm >> (2 * i)) & 3
                r |= ((x >> (half + 32 * sel)) & m32) << (half + 32 * i)
        return [r]

    def shufd256_l(a):
        x, imm = a
        out = []
        for h in (0, 4):
            out += [x[h + ((imm >> (2 * i)) & 3)] for i in range(4)]
        return [out]

    _vector("x86_VPSHUFD_256", 8, 32,
            [E(256, 0), E(8, 1)], [(8, 32), None], shufd256_v, shufd256_l,
            oshape=("oprd", "imm8"))

    # byte shuffles: per-byte table lookup within each 128-bit half;
    # a set high bit in the selector byte yields zero
    def shufb_v_for(nbytes):
        def shufb_v(a, *, nbytes=nbytes):
            x, s = a
            r = 0
            for i in range(nbytes):
                sel = (s >> (8 * i)) & 0xFF
                if not sel & 0x80:
                    base = (i // 16) * 16
                    b = (x >> (8 * (base + (sel & 0x0F)))) & 0xFF
                    r |= b << (8 * i)
            return [r]

        return shufb_v

    def shufb_l_for(nbytes):
        def shufb_l(a, *, nbytes=nbytes):
            x, s = a
            out = []
            for i in range(nbytes):
                sel = s[i]
                if sel & 0x80:
                    out.append(0)
                else:
                    out.append(x[(i // 16) * 16 + (sel & 0x0F)])
            return [out]

        return shufb_l

    _vector("x86_VPSHUFB_128", 16, 8,
            [E(128, 0), E(128, 1)], [(16, 8), (16, 8)],
            shufb_v_for(16), shufb_l_for(16))
    _vector("x86_VPSHUFB_256", 32, 8,
            [E(256, 0), E(256, 1)], [(32, 8), (32, 8)],
            shufb_v_for(32), shufb_l_for(32))

    # interleaves (per 128-bit half, AVX2 style)
    def unpck32(lo):
        off = 0 if lo else 2

        def v(a, *, off=off):
            x, y = a
            r = 0
            for h in (0, 128):
                for i in range(2):
                    xd = (x >> (h + 32 * (off + i))) & m32
                    yd = (y >> (h + 32 * (off + i))) & m32
                    r |= xd << (h + 64 * i)
                    r |= yd << (h + 64 * i + 32)
            return [r]

        def l(a, *, off=off):
            x, y = a
            out = []
            for h in (0, 4):
                out += [x[h + off], y[h + off], x[h + off + 1], y[h + off + 1]]
            return [out]

        return v, l

    v, l = unpck32(True)
    _vector("x86_VPUNPCKL_8u32", 8, 32,
            [E(256, 0), E(256, 1)], [(8, 32), (8, 32)], v, l)
    v, l = unpck32(False)
    _vector("x86_VPUNPCKH_8u32", 8, 32,
            [E(256, 0), E(256, 1)], [(8, 32), (8, 32)], v, l)

    m64 = (1 << 64) - 1

    def unpck64(lo):
        off = 0 if lo else 1

        def v(a, *, off=off):
            x, y = a
            r = 0
            for h in (0, 128):
                xd = (x >> (h + 64 * off)) & m64
                yd = (y >> (h + 64 * off)) & m64
                r |= xd << h
                r |= yd << (h + 64)
            return [r]

        def l(a, *, off=off):
            x, y = a
            return [[x[off], y[off], x[2 + off], y[2 + off]]]

        return v, l

    v, l = unpck64(True)
    _vector("x86_VPUNPCKL_4u64", 4, 64,
            [E(256, 0), E(256, 1)], [(4, 64), (4, 64)], v, l)
    v, l = unpck64(False)
    _vector("x86_VPUNPCKH_4u64", 4, 64,
            [E(256, 0), E(256, 1)], [(4, 64), (4, 64)], v, l)

    # 128-bit-lane permutes / extract / insert
    m128 = (1 << 128) - 1

    def perm2i_v(a):
        x, y, imm = a
        halves = [x & m128, x >> 128, y & m128, y >> 128]
        lo = 0 if imm & 0x08 else halves[imm & 3]
        hi = 0 if imm & 0x80 else halves[(imm >> 4) & 3]
        return [lo | (hi << 128)]

    def perm2i_l(a):
        x, y, imm = a
        halves = [x[0], x[1], y[0], y[1]]
        lo = 0 if imm & 0x08 else halves[imm & 3]
        hi = 0 if imm & 0x80 else halves[(imm >> 4) & 3]
        return [[lo, hi]]

    register(
        Descriptor(
            name="x86_VPERM2I128",
            sources=(E(256, 0), E(256, 1), E(8, 2)),
            destinations=(E(256, 0),),
            oshape=("oprd", "oprd", "imm8"),
            mnemonic="VPERM2I128",
            sem=perm2i_v,
            size=128,
            lanes=(2, 128),
            sem_lanes=perm2i_l,
            src_lanes=((2, 128), (2, 128), None),
            dst_lanes=((2, 128),),
        )
    )

    def permq_v(a):
        x, imm = a
        r = 0
        for i in range(4):
            r |= ((x >> (64 * ((imm >> (2 * i)) & 3))) & m64) << (64 * i)
        return [r]

    def permq_l(a):
        x, imm = a
        return [[x[(imm >> (2 * i)) & 3] for i in range(4)]]

    _vector("x86_VPERMQ_4u64", 4, 64,
            [E(256, 0), E(8, 1)], [(4, 64), None], permq_v, permq_l,
            oshape=("oprd", "imm8"))

    def extract_v(a):
        x, imm = a
        return [(x >> 128) & m128 if imm & 1 else x & m128]

    def extract_l(a):
        x, imm = a
        return [x[imm & 1]]

    register(
        Descriptor(
            name="x86_VEXTRACTI128",
            sources=(E(256, 0), E(8, 1)),
            destinations=(E(128, 0),),
            oshape=("oprd", "imm8"),
            mnemonic="VEXTRACTI128",
            sem=extract_v,
            size=128,
            lanes=(2, 128),
            sem_lanes=extract_l,
            src_lanes=((2, 128), None),
            dst_lanes=(None,),
        )
    )

    def insert_v(a):
        x, y, imm = a
        if imm & 1:
            return [(x & m128) | (y << 128)]
        return [(x & (m128 << 128)) | y]

    def insert_l(a):
        x, y, imm = a
        return [[x[0], y] if imm & 1 else [y, x[1]]]

    register(
        Descriptor(
            name="x86_VINSERTI128",
            sources=(E(256, 0), E(128, 1), E(8, 2)),
            destinations=(E(256, 0),),
            oshape=("oprd", "oprd", "imm8"),
            mnemonic="VINSERTI128",
            sem=insert_v,
            size=128,
            lanes=(2, 128),
            sem_lanes=insert_l,
            src_lanes=((2, 128), None, None),
            dst_lanes=((2, 128),),
        )
    )


_build_vectors()
