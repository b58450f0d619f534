"""Static memory-range and safety analysis by abstract interpretation.

For each pointer-typed input the analyzer infers a symbolic range of
byte offsets the program may access relative to that input, producing
the memory calling contract (`range(in) = in + [0; inlen)` style).
Scalars are tracked as affine expressions over symbols: the initial
values of the entry parameters plus fresh symbols introduced at join
points.  Every symbol denotes an unsigned quantity.

A symbol's interval keeps small *sets* of lower and upper bounds, each
affine in the parameters: a loop guard often supplies a symbolic bound
(j < inlen) while an enclosing test supplies a constant one (j < 16),
and both are needed, one for the access ranges and one for array
bounds.  An empty upper set means unbounded; lower sets always contain
0.

Joins look for affine relations between variables that changed on the
two sides (a lightweight affine-hull step): when variables move in
lockstep through a loop, relations such as pointer offset =
inlen0 - inlen survive the fixpoint and produce the paper-style
[0; inlen) ranges.  Unstable loop bounds are widened after a few
iterations (upper bounds drop away, lower bounds fall back to 0).

Arithmetic is modeled over the integers; 64-bit wraparound is not
represented.  The dynamic cross-check in the test-suite exercises the
reported ranges against instrumented executions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .ir import (
    ArrayTy,
    EArr,
    EBin,
    EBool,
    ECall,
    ECast,
    EInt,
    EIntr,
    EMem,
    EUn,
    EVar,
    EVecImm,
    LArr,
    LIgnore,
    LMem,
    LVar,
    Program,
    SAssign,
    SDecl,
    SFor,
    SIf,
    SReturn,
    SWhile,
    WordTy,
)

UNROLL_BEFORE_WIDEN = 4
UNSTABLE_BEFORE_WIDEN = 3
MAX_ITERATIONS = 64
MAX_BOUNDS = 3


class AnalysisFailure(Exception):
    """The program is outside the analyzable fragment at some site."""


# ----------------------------------------------------------------- Aff


class Aff:
    """Affine expression c0 + sum(ci * sym_i) with rational coefficients.

    Symbols are ("p", name) for the initial value of an entry parameter
    or ("s", k) for a fresh symbol; all symbols denote unsigned values,
    so a combination with nonnegative coefficients and constant is
    provably nonnegative.
    """

    __slots__ = ("const", "terms")

    def __init__(self, const=0, terms=()):
        self.const = Fraction(const)
        self.terms = tuple(sorted((s, Fraction(c)) for s, c in terms if c != 0))

    @staticmethod
    def of_sym(sym) -> "Aff":
        return Aff(0, ((sym, 1),))

    def __eq__(self, other):
        return (
            isinstance(other, Aff)
            and self.const == other.const
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.const, self.terms))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            return Aff(self.const + other, self.terms)
        d = dict(self.terms)
        for s, c in other.terms:
            d[s] = d.get(s, 0) + c
        return Aff(self.const + other.const, d.items())

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            return Aff(self.const - other, self.terms)
        d = dict(self.terms)
        for s, c in other.terms:
            d[s] = d.get(s, 0) - c
        return Aff(self.const - other.const, d.items())

    def scale(self, k) -> "Aff":
        k = Fraction(k)
        return Aff(self.const * k, ((s, c * k) for s, c in self.terms))

    def is_const(self) -> bool:
        return not self.terms

    def syms(self):
        return [s for s, _ in self.terms]

    def coeff(self, sym) -> Fraction:
        for s, c in self.terms:
            if s == sym:
                return c
        return Fraction(0)

    def nonneg(self) -> bool:
        """Provably >= 0 given that all symbols are >= 0."""
        return self.const >= 0 and all(c >= 0 for _, c in self.terms)

    def is_integral(self) -> bool:
        return self.const.denominator == 1 and all(
            c.denominator == 1 for _, c in self.terms
        )

    def __repr__(self):
        return f"Aff({self.render()})"

    def render(self) -> str:
        parts = []
        if self.const or not self.terms:
            c = self.const
            parts.append(str(int(c)) if c.denominator == 1 else str(c))
        for s, c in self.terms:
            name = s[1] if s[0] == "p" else f"s{s[1]}"
            if c == 1:
                parts.append(str(name))
            else:
                cc = str(int(c)) if c.denominator == 1 else f"({c})"
                parts.append(f"{cc}*{name}")
        return " + ".join(parts)


ZERO = Aff(0)


def _le(a: Aff, b: Aff) -> bool:
    """Provably a <= b (symbols unsigned)."""
    return (b - a).nonneg()


# Bound sets.  Lower bounds: the value is >= every member (tightest is
# the max).  Upper bounds: the value is <= every member; an empty upper
# set means unbounded above.


def _add_lo(bounds: tuple, a: Aff) -> tuple:
    kept = []
    for b in bounds:
        if _le(a, b):
            return bounds  # an existing bound is at least as tight
        if not _le(b, a):
            kept.append(b)
    kept.append(a)
    if len(kept) > MAX_BOUNDS:
        kept = sorted(kept, key=lambda x: (not x.is_const(), x.render()))[:MAX_BOUNDS]
        if not any(x.is_const() for x in kept):
            kept[-1] = ZERO
    return tuple(kept)


def _add_hi(bounds: tuple, a: Aff) -> tuple:
    kept = []
    for b in bounds:
        if _le(b, a):
            return bounds
        if not _le(a, b):
            kept.append(b)
    kept.append(a)
    if len(kept) > MAX_BOUNDS:
        kept = sorted(kept, key=lambda x: (not x.is_const(), x.render()))[:MAX_BOUNDS]
    return tuple(kept)


def _join_los(A: tuple, B: tuple) -> tuple:
    out: tuple = ()
    for a in A:
        if any(_le(a, b) for b in B):  # valid on the B side too
            out = _add_lo(out, a)
    for b in B:
        if any(_le(b, a) for a in A):
            out = _add_lo(out, b)
    if not out:
        out = (ZERO,)  # unsigned floor always holds
    return out


def _join_his(A: tuple, B: tuple) -> tuple:
    out: tuple = ()
    for a in A:
        if any(_le(b, a) for b in B):
            out = _add_hi(out, a)
    for b in B:
        if any(_le(a, b) for a in A):
            out = _add_hi(out, b)
    return out


@dataclass(frozen=True)
class Interval:
    los: tuple = (ZERO,)
    his: tuple = ()

    def join(self, other: "Interval") -> "Interval":
        return Interval(_join_los(self.los, other.los), _join_his(self.his, other.his))

    def meet_lo(self, bound: Aff) -> "Interval":
        return Interval(_add_lo(self.los, bound), self.his)

    def meet_hi(self, bound: Aff) -> "Interval":
        return Interval(self.los, _add_hi(self.his, bound))

    def widen_from(self, old: "Interval", thresholds: tuple = ()) -> "Interval":
        los = tuple(a for a in self.los if any(_le(o, a) for o in old.los))
        his = tuple(a for a in self.his if any(_le(a, o) for o in old.his))
        for t in thresholds:
            his = _add_hi(his, t)
        return Interval(los if los else (ZERO,), his)

    def lo_best(self):
        """Tightest (largest) lower bound for display, preferring 0/const."""
        if not self.los:
            return None
        for b in self.los:
            if all(_le(o, b) for o in self.los):
                return b
        return sorted(self.los, key=lambda x: (not x.is_const(), x.render()))[0]

    def hi_best(self):
        if not self.his:
            return None
        for b in self.his:
            if all(_le(b, o) for o in self.his):
                return b
        # incomparable: prefer a parameter-bearing (relational) bound
        return sorted(self.his, key=lambda x: (x.is_const(), x.render()))[0]


TOP = Interval()


def _width_interval(bits: int) -> Interval:
    return Interval((ZERO,), (Aff((1 << bits) - 1),))


def _iv_add(a: Interval, b: Interval) -> Interval:
    los: tuple = ()
    for x in a.los:
        for y in b.los:
            los = _add_lo(los, x + y)
    his: tuple = ()
    for x in a.his:
        for y in b.his:
            his = _add_hi(his, x + y)
    return Interval(los, his)


def _iv_sub(a: Interval, b: Interval) -> Interval:
    los: tuple = ()
    for x in a.los:
        for y in b.his:
            los = _add_lo(los, x - y)
    his: tuple = ()
    for x in a.his:
        for y in b.los:
            his = _add_hi(his, x - y)
    return Interval(los, his)


def _iv_mul(a: Interval, b: Interval) -> Interval:
    ah, bh = a.hi_best(), b.hi_best()
    if (
        all(x.nonneg() for x in a.los)
        and all(x.nonneg() for x in b.los)
        and ah is not None
        and bh is not None
        and ah.is_const()
        and bh.is_const()
    ):
        return Interval((ZERO,), (Aff(ah.const * bh.const),))
    return Interval((ZERO,), ())


def _scaled_bound(b: Aff, k: Fraction, is_lo: bool) -> Aff:
    """Sound bound for floor(x * k) given a bound for x (k > 0)."""
    a = b.scale(k)
    if a.is_integral():
        return a
    return a - 1 if is_lo else a


# ---------------------------------------------------------------- state


class AbsState:
    __slots__ = ("vals", "intervals")

    def __init__(self, vals=None, intervals=None):
        self.vals: dict[str, Aff] = vals if vals is not None else {}
        self.intervals: dict[object, Interval] = (
            intervals if intervals is not None else {}
        )

    def copy(self) -> "AbsState":
        return AbsState(dict(self.vals), dict(self.intervals))

    def prune(self) -> "AbsState":
        """Drop interval entries for symbols no value refers to."""
        live = set()
        for a in self.vals.values():
            live.update(a.syms())
        self.intervals = {s: iv for s, iv in self.intervals.items() if s in live}
        return self

    def __eq__(self, other):
        return (
            isinstance(other, AbsState)
            and self.vals == other.vals
            and self.intervals == other.intervals
        )

    def resolve_bounds(self, a: Aff, is_lo: bool) -> tuple:
        """Parameter-affine bounds for an affine value.

        Fresh symbols are substituted by their stored bounds whole, so
        that a symbolic bound like (lam - 1) cancels against a -lam
        term in the value before anything is approximated.  The search
        is a small breadth-limited frontier over the bound sets.
        """
        frontier = [(a, 0)]
        results: tuple = ()
        while frontier:
            x, depth = frontier.pop()
            sub = next((s for s in x.syms() if s[0] == "s"), None)
            if sub is None:
                results = _add_lo(results, x) if is_lo else _add_hi(results, x)
                continue
            if depth > 16 or len(frontier) > 64:
                continue  # drop this candidate (sound: fewer bounds)
            c = x.coeff(sub)
            base = x - Aff.of_sym(sub).scale(c)
            iv = self.intervals.get(sub, TOP)
            want_lo = is_lo if c > 0 else not is_lo
            for side in iv.los if want_lo else iv.his:
                frontier.append((base + side.scale(c), depth + 1))
        return results

    def interval_of(self, a: Aff) -> Interval:
        los = self.resolve_bounds(a, True)
        his = self.resolve_bounds(a, False)
        return Interval(los, his)


_sym_counter = [0]


def _fresh_sym():
    _sym_counter[0] += 1
    return ("s", _sym_counter[0])


# ------------------------------------------------------------- findings


@dataclass(frozen=True)
class Finding:
    kind: str  # div-by-zero | array-bounds | maybe-uninit | analysis
    where: str
    detail: str

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.detail}"


def _site(node) -> str:
    loc = getattr(node, "loc", None)
    return f"{loc[0]}:{loc[1]}" if loc else "?"


# --------------------------------------------------------------- report


@dataclass
class RangeReport:
    """Per-input access ranges; a None entry means the input is never
    used as a base (printed "empty")."""

    order: list
    ranges: dict  # name -> (lo Aff|None, hi Aff|None) or None
    failures: list = field(default_factory=list)

    def machine_lines(self) -> list[str]:
        out = []
        for name in self.order:
            r = self.ranges.get(name)
            if r is None:
                out.append(f"range({name}) = empty")
            else:
                lo, hi = r
                out.append(
                    f"range({name}) = {name} + [{_render_bound(lo)}; {_render_bound(hi)})"
                )
        return out

    def text_lines(self) -> list[str]:
        out = []
        for name in self.order:
            r = self.ranges.get(name)
            if r is None:
                out.append(f"range({name}) : ∅")
            else:
                lo, hi = r
                out.append(
                    f"range({name}) : {name} + [{_render_bound(lo)}; {_render_bound(hi)}["
                )
        return out

    def bound_range(self, base: str, params: dict):
        """Concretize the range for `base` under parameter values."""
        r = self.ranges.get(base)
        if r is None:
            return None
        lo, hi = r
        return (_eval_bound(lo, params, -1), _eval_bound(hi, params, +1))


def _eval_bound(b: Aff | None, params: dict, inf_sign: int):
    if b is None:
        return inf_sign * float("inf")
    v = b.const
    for s, c in b.terms:
        if s[0] != "p":
            return inf_sign * float("inf")
        v += c * params[s[1]]
    return v


def _render_bound(b: Aff | None) -> str:
    return "inf" if b is None else b.render()


# ------------------------------------------------------------- analyzer


class _Analyzer:
    def __init__(self, p: Program, entry: str, pointers, tracked):
        self.p = p
        self.fn = p.func(entry)
        param_names = [q.name for q in self.fn.params]
        for n in list(pointers) + list(tracked):
            if n not in param_names:
                raise AnalysisFailure(f"{n!r} is not a parameter of {entry}")
        self.pointers = set(pointers)
        self.tracked = set(tracked)
        self.param_names = param_names
        self.psym = {n: ("p", n) for n in param_names}
        self.accesses: dict[str, tuple[tuple, tuple]] = {}  # base -> (los, his)
        self.failures: list[str] = []
        self.findings: list[Finding] = []
        self.recording = False
        self.loop_syms: dict[tuple[int, str], object] = {}
        self.widen_state: dict[int, int] = {}

    # ---------------------------------------------------- expressions

    def eval(self, st: AbsState, e) -> tuple[Aff | None, Interval]:
        kind = type(e)
        if kind is EInt:
            a = Aff(e.value)
            return a, Interval((a,), (a,))
        if kind is EVar:
            a = st.vals.get(e.name)
            if a is None:
                return None, _opaque_interval(e)
            return a, st.interval_of(a)
        if kind is ECast:
            a, iv = self.eval(st, e.arg)
            wiv = _width_interval(e.width)
            if a is not None and _contained(iv, wiv):
                return a, iv
            return None, wiv
        if kind is EBin:
            return self.eval_bin(st, e)
        if kind is EUn:
            self.eval(st, e.arg)
            return None, _opaque_interval(e)
        if kind is EMem:
            a, _ = self.eval(st, e.addr)
            self.record_access(st, e, a, (e.width or 64) // 8)
            return None, _width_interval(e.width or 64)
        if kind is EArr:
            self.check_index(st, e, e.name, e.index, e.width, e.byte_mode)
            return None, _opaque_interval(e)
        if kind is EIntr:
            return self.eval_intr(st, e)
        if kind is EVecImm or kind is EBool:
            return None, TOP
        if kind is ECall:
            raise AnalysisFailure(
                f"{_site(e)}: calls are not analyzable; expand the program first"
            )
        raise TypeError(f"not an expression: {e!r}")

    def eval_bin(self, st: AbsState, e: EBin) -> tuple[Aff | None, Interval]:
        op = e.op
        la, liv = self.eval(st, e.left)
        ra, riv = self.eval(st, e.right)
        if op == "/" or op == "%":
            if self.recording and not _excludes_zero(riv):
                self.findings.append(
                    Finding("div-by-zero", _site(e), "divisor may be zero")
                )
            if op == "%" and ra is not None and ra.is_const() and ra.const > 0:
                return None, Interval((ZERO,), (Aff(ra.const - 1),))
            if op == "/" and ra is not None and ra.is_const() and ra.const > 0:
                k = Fraction(1, int(ra.const))
                return None, Interval(
                    tuple(_scaled_bound(b, k, True) for b in liv.los),
                    tuple(_scaled_bound(b, k, False) for b in liv.his),
                )
            return None, Interval((ZERO,), liv.his)
        if e.lanes:
            return None, _width_interval(e.lanes[0] * e.lanes[1])
        if op == "+":
            if la is not None and ra is not None:
                a = la + ra
                return a, st.interval_of(a)
            return None, _iv_add(liv, riv)
        if op == "-":
            if la is not None and ra is not None:
                a = la - ra
                return a, st.interval_of(a)
            return None, _iv_sub(liv, riv)
        if op == "*":
            if la is not None and la.is_const() and ra is not None:
                a = ra.scale(la.const)
                return a, st.interval_of(a)
            if ra is not None and ra.is_const() and la is not None:
                a = la.scale(ra.const)
                return a, st.interval_of(a)
            return None, _iv_mul(liv, riv)
        if op == "<<":
            if ra is not None and ra.is_const() and la is not None:
                a = la.scale(1 << int(ra.const))
                return a, st.interval_of(a)
            return None, _opaque_interval(e)
        if op == ">>":
            if ra is not None and ra.is_const():
                k = Fraction(1, 1 << int(ra.const))
                return None, Interval(
                    tuple(_scaled_bound(b, k, True) for b in liv.los),
                    tuple(_scaled_bound(b, k, False) for b in liv.his),
                )
            return None, _opaque_interval(e)
        if op == "&":
            his: tuple = ()
            for b in liv.his + riv.his:
                his = _add_hi(his, b)
            if not his:
                his = _opaque_interval(e).his
            return None, Interval((ZERO,), his)
        # |, ^, rotates, comparisons, booleans
        return None, _opaque_interval(e)

    def eval_intr(self, st: AbsState, e: EIntr):
        from . import isa

        d = isa.lookup(e.name)
        for a in e.args:
            self.eval(st, a)
        if d.mnemonic == "DIV" and self.recording:
            _, div_iv = self.eval(st, e.args[2])
            if not _excludes_zero(div_iv):
                self.findings.append(
                    Finding("div-by-zero", _site(e), "divisor may be zero")
                )
        return None, _opaque_interval(e)

    def _eval_cond(self, st: AbsState, cond):
        """Evaluate a condition's operands for their side findings."""
        if isinstance(cond, EBin):
            if cond.op in ("&&", "||"):
                self._eval_cond(st, cond.left)
                self._eval_cond(st, cond.right)
            else:
                self.eval(st, cond.left)
                self.eval(st, cond.right)
        elif isinstance(cond, EUn):
            self._eval_cond(st, cond.arg)

    # ------------------------------------------------- access recording

    def record_access(self, st: AbsState, node, addr: Aff | None, nbytes: int):
        if not self.recording:
            return
        if addr is None:
            self.failures.append(
                f"{_site(node)}: unresolvable address (not affine in tracked inputs)"
            )
            return
        bases = [s for s in addr.syms() if s[0] == "p" and s[1] in self.pointers]
        if len(bases) != 1 or addr.coeff(bases[0]) != 1:
            self.failures.append(
                f"{_site(node)}: address mixes bases or has no pointer base "
                f"({addr.render()})"
            )
            return
        base = bases[0][1]
        off = addr - Aff.of_sym(bases[0])
        iv = st.interval_of(off)
        los: tuple = ()
        for b in iv.los:
            sb = self._sanitize(b, is_lo=True)
            if sb is not None:
                los = _add_lo(los, sb)
        his: tuple = ()
        for b in iv.his:
            sb = self._sanitize(b + nbytes, is_lo=False)
            if sb is not None:
                his = _add_hi(his, sb)
        old = self.accesses.get(base)
        if old is None:
            self.accesses[base] = (los, his)
        else:
            self.accesses[base] = (_join_los(old[0], los), _join_his(old[1], his))

    def _sanitize(self, b: Aff, is_lo: bool) -> Aff | None:
        """Keep only tracked-parameter symbols in a reported bound."""
        const = b.const
        terms = []
        for s, c in b.terms:
            if s[0] == "p" and s[1] in self.tracked:
                terms.append((s, c))
                continue
            if s[0] == "p":
                # untracked parameter, known range [0, inf)
                if (c > 0) == (not is_lo):
                    return None  # the bound escapes to +/- infinity
                continue  # its minimal contribution is 0
            return None  # leftover fresh symbol: not expressible
        return Aff(const, terms)

    # ------------------------------------------------- index findings

    def check_index(self, st: AbsState, node, name, index, width, byte_mode):
        _, iv = self.eval(st, index)
        if not self.recording:
            return
        ty = self.fn.envtypes.get(name, (None, None))[1]
        if not isinstance(ty, ArrayTy):
            return
        elem_bytes = (width or ty.bits) // 8
        total = ty.length * ty.bits // 8
        step = 1 if byte_mode else elem_bytes
        limit = (total - elem_bytes) // step if step else 0
        ok_lo = any(b.nonneg() for b in iv.los)
        ok_hi = any(_le(b, Aff(limit)) for b in iv.his)
        if not (ok_lo and ok_hi):
            self.findings.append(
                Finding(
                    "array-bounds",
                    _site(node),
                    f"index into {name} may leave its bounds",
                )
            )

    # ------------------------------------------------------ statements

    def transfer_block(self, st: AbsState, stmts) -> AbsState:
        for s in stmts:
            st = self.transfer(st, s)
        return st

    def assign_var(self, st: AbsState, name, aff: Aff | None, iv: Interval):
        if aff is not None:
            st.vals[name] = aff
            return
        sym = _fresh_sym()
        st.intervals[sym] = iv
        st.vals[name] = Aff.of_sym(sym)

    def transfer(self, st: AbsState, s) -> AbsState:
        kind = type(s)
        if kind is SAssign:
            return self.t_assign(st, s)
        if kind is SDecl:
            for nm in s.names:
                st.vals.pop(nm, None)
            if s.init is not None and isinstance(s.ty, WordTy):
                a, iv = self.eval(st, s.init)
                self.assign_var(st, s.names[0], a, iv)
            return st
        if kind is SIf:
            self._eval_cond(st, s.cond)
            then_st = self.refine(st.copy(), s.cond, True)
            else_st = self.refine(st.copy(), s.cond, False)
            then_out = self.transfer_block(then_st, s.then)
            else_out = self.transfer_block(else_st, s.els)
            return self.join(id(s), then_out, else_out)
        if kind is SWhile:
            return self.t_while(st, s)
        if kind is SReturn:
            for v in s.values:
                self.eval(st, v)
            return st
        if kind is SFor:
            raise AnalysisFailure(
                f"{_site(s)}: for loops must be expanded before analysis"
            )
        raise TypeError(f"not a statement: {s!r}")

    def t_assign(self, st: AbsState, s: SAssign) -> AbsState:
        if isinstance(s.rhs, ECall):
            raise AnalysisFailure(
                f"{_site(s)}: calls are not analyzable; expand the program first"
            )
        if isinstance(s.rhs, EIntr) and len(s.dests) != 1:
            from . import isa

            self.eval_intr(st, s.rhs)
            d = isa.lookup(s.rhs.name)
            for lv, w in zip(s.dests, d.dst_widths):
                if isinstance(lv, LVar) and w != "flag":
                    self.assign_var(st, lv.name, None, _width_interval(w))
                elif not isinstance(lv, (LIgnore, LVar)):
                    self.write_other(st, lv)
            return st
        if s.op:
            lv = s.dests[0]
            if isinstance(lv, LVar):
                cur = EVar(lv.name)
                cur.ty = lv.ty
            else:
                cur = _arr_read(lv)
            expr = EBin(s.op, cur, s.rhs, s.lanes)
            expr.ty = getattr(lv, "ty", None)
            expr.loc = getattr(s, "loc", None)
            a, iv = self.eval_bin(st, expr)
            if isinstance(lv, LVar):
                self.assign_var(st, lv.name, a, iv)
            else:
                self.write_other(st, lv)
            return st
        a, iv = self.eval(st, s.rhs)
        if s.cond is not None:
            self._eval_cond(st, s.cond)
            lv = s.dests[0]
            if isinstance(lv, LVar):
                taken = st.copy()
                self.assign_var(taken, lv.name, a, iv)
                return self.join(id(s), st, taken)
            return st
        for lv in s.dests:
            if isinstance(lv, LVar):
                if isinstance(getattr(lv, "ty", None), WordTy):
                    self.assign_var(st, lv.name, a, iv)
                else:
                    st.vals.pop(lv.name, None)
            else:
                self.write_other(st, lv)
        return st

    def write_other(self, st: AbsState, lv):
        if isinstance(lv, LIgnore):
            return
        if isinstance(lv, LMem):
            aa, _ = self.eval(st, lv.addr)
            self.record_access(st, lv, aa, (lv.width or 64) // 8)
            return
        if isinstance(lv, LArr):
            self.check_index(st, lv, lv.name, lv.index, lv.width, lv.byte_mode)
            return
        raise TypeError(f"not an lvalue: {lv!r}")

    # -------------------------------------------------------- loops

    def t_while(self, st: AbsState, s: SWhile) -> AbsState:
        entry = st.copy()
        head = st
        key = id(s)
        was_recording = self.recording
        self.recording = False  # fixpoint iterations see transient bounds
        try:
            for it in range(MAX_ITERATIONS):
                body_in = self.refine(head.copy(), s.cond, True)
                body_out = self.transfer_block(body_in, s.body)
                new_head = self.join(key, head, body_out)
                if it >= UNROLL_BEFORE_WIDEN:
                    if self.widen_state.get(key, 0) >= UNSTABLE_BEFORE_WIDEN:
                        new_head = self.widen(
                            key, head, new_head, entry, body_out, s.cond
                        )
                if new_head == head:
                    break
                if it >= UNROLL_BEFORE_WIDEN:
                    self.widen_state[key] = self.widen_state.get(key, 0) + 1
                head = new_head
            else:
                raise AnalysisFailure(f"{_site(s)}: loop analysis did not stabilize")
        finally:
            self.recording = was_recording
        if self.recording:
            self._eval_cond(head, s.cond)
            body_in = self.refine(head.copy(), s.cond, True)
            self.transfer_block(body_in, s.body)
        return self.refine(head.copy(), s.cond, False)

    def widen(self, key, old: AbsState, new: AbsState, entry: AbsState,
              body_out: AbsState, cond) -> AbsState:
        out = new.copy()
        rev = {sym: var for (k, var), sym in self.loop_syms.items() if k == key}
        candidates = self._guard_thresholds(new, cond)
        for sym, iv in new.intervals.items():
            o = old.intervals.get(sym)
            if o is None or o == iv:
                continue
            ths: tuple = ()
            var = rev.get(sym)
            if var is not None:
                for t in candidates:
                    if sym in t.syms():
                        continue
                    if self._inductive_hi(t, var, entry, body_out):
                        ths = ths + (t,)
            out.intervals[sym] = iv.widen_from(o, ths)
        return out

    def _inductive_hi(self, t: Aff, var: str, entry: AbsState,
                      body_out: AbsState) -> bool:
        """Does `var <= t` hold at loop entry and after the body?"""
        for st in (entry, body_out):
            a = st.vals.get(var)
            if a is None:
                return False
            iv = _raw_interval(st, a, None)
            if not any(_le(h, t) for h in iv.his + st.interval_of(a).his):
                return False
        return True

    def _guard_thresholds(self, st: AbsState, cond) -> tuple:
        """Affine guard bounds used as widening thresholds."""
        out: list = []

        def visit(c):
            if isinstance(c, EUn) and c.op == "!":
                visit(c.arg)
            elif isinstance(c, EBin) and c.op in ("&&", "||"):
                visit(c.left)
                visit(c.right)
            elif isinstance(c, EBin) and c.op in ("<", "<=", ">", ">=", "=="):
                for side in (c.left, c.right):
                    a, _ = self.eval(st, side)
                    if a is not None:
                        out.append(a)
                        out.append(a + 1)

        visit(cond)
        return tuple(out)

    # --------------------------------------------------------- joins

    def join(self, key: int, a: AbsState, b: AbsState) -> AbsState:
        if a == b:
            return a.copy()
        out = AbsState()
        for sym in set(a.intervals) | set(b.intervals):
            ia = a.intervals.get(sym)
            ib = b.intervals.get(sym)
            if ia is None:
                out.intervals[sym] = ib
            elif ib is None:
                out.intervals[sym] = ia
            else:
                out.intervals[sym] = ia.join(ib)
        names = [n for n in a.vals if n in b.vals]
        changed = [n for n in names if a.vals[n] != b.vals[n]]
        for n in names:
            if n not in changed:
                out.vals[n] = a.vals[n]
        if not changed:
            return out.prune()
        # pick the driver that relates the most other changed variables,
        # preferring one free of pointer symbols so relations stay
        # expressed over the pointer bases
        clean = [
            n
            for n in changed
            if not any(
                s[0] == "p" and s[1] in self.pointers
                for s in a.vals[n].syms() + b.vals[n].syms()
            )
        ]
        candidates = (clean or changed)[:8]
        driver = candidates[0]
        if len(candidates) > 1 and len(changed) > 1:
            best = -1
            for cand in candidates:
                du_c = a.vals[cand] - b.vals[cand]
                score = 0
                for n in changed:
                    if n == cand:
                        continue
                    if _ratio(a.vals[n] - b.vals[n], du_c) is not None:
                        score += 1
                if score > best:
                    best = score
                    driver = cand
        du = a.vals[driver] - b.vals[driver]
        lam = self.loop_syms.setdefault((key, driver), _fresh_sym())
        ia = _raw_interval(a, a.vals[driver], lam)
        ib = _raw_interval(b, b.vals[driver], lam)
        out.intervals[lam] = ia.join(ib)
        out.vals[driver] = Aff.of_sym(lam)
        for n in changed:
            if n == driver:
                continue
            dv = a.vals[n] - b.vals[n]
            c = _ratio(dv, du)
            if c is not None:
                r = a.vals[n] - a.vals[driver].scale(c)
                rb = b.vals[n] - b.vals[driver].scale(c)
                if r == rb and lam not in r.syms():
                    out.vals[n] = Aff.of_sym(lam).scale(c) + r
                    continue
            sym = self.loop_syms.setdefault((key, n), _fresh_sym())
            iv = _raw_interval(a, a.vals[n], sym).join(
                _raw_interval(b, b.vals[n], sym)
            )
            out.intervals[sym] = iv
            out.vals[n] = Aff.of_sym(sym)
        return out.prune()

    # --------------------------------------------------- refinement

    def refine(self, st: AbsState, cond, taken: bool) -> AbsState:
        kind = type(cond)
        if kind is EUn and cond.op == "!":
            return self.refine(st, cond.arg, not taken)
        if kind is EBin and cond.op == "&&" and taken:
            st = self.refine(st, cond.left, True)
            return self.refine(st, cond.right, True)
        if kind is EBin and cond.op == "||" and not taken:
            st = self.refine(st, cond.left, False)
            return self.refine(st, cond.right, False)
        if kind is not EBin or cond.op not in ("<", "<=", ">", ">=", "=="):
            return st
        op = cond.op
        if not taken:
            op = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!="}[op]
            if op == "!=":
                return st
        left, right = cond.left, cond.right
        if op == ">":
            left, right, op = right, left, "<"
        elif op == ">=":
            left, right, op = right, left, "<="
        la, liv = self.eval(st, left)
        ra, riv = self.eval(st, right)
        # prefer the other side's exact affine form (it may mention
        # fresh symbols that cancel at resolution time), falling back
        # to its resolved interval bounds
        r_his = (ra,) if ra is not None else riv.his
        r_los = (ra,) if ra is not None else riv.los
        l_his = (la,) if la is not None else liv.his
        l_los = (la,) if la is not None else liv.los
        if op == "==":
            for b in r_los:
                self._bound_sym(st, la, b, None)
            for b in r_his:
                self._bound_sym(st, la, None, b)
            for b in l_los:
                self._bound_sym(st, ra, b, None)
            for b in l_his:
                self._bound_sym(st, ra, None, b)
            return st
        delta = 1 if op == "<" else 0
        for b in r_his:
            self._bound_sym(st, la, None, b - delta)
        for b in l_los:
            self._bound_sym(st, ra, b + delta, None)
        return st

    def _bound_sym(self, st: AbsState, a: Aff | None, lo: Aff | None, hi: Aff | None):
        """Refine the interval of the single fresh symbol of `a`."""
        if a is None:
            return
        frees = [s for s in a.syms() if s[0] == "s"]
        if len(frees) != 1:
            return
        sym = frees[0]
        if (lo is not None and sym in lo.syms()) or (
            hi is not None and sym in hi.syms()
        ):
            return  # self-referential bound
        c = a.coeff(sym)
        rest = a - Aff.of_sym(sym).scale(c)
        iv = st.intervals.get(sym, TOP)
        rest_iv = st.interval_of(rest)
        # a = c*sym + rest and lo <= a <= hi
        if c == 1:
            if lo is not None:
                for rb in rest_iv.his:
                    iv = iv.meet_lo(lo - rb)
            if hi is not None:
                for rb in rest_iv.los:
                    iv = iv.meet_hi(hi - rb)
        elif c == -1:
            if hi is not None:
                for rb in rest_iv.los:
                    iv = iv.meet_lo(rb - hi)
            if lo is not None:
                for rb in rest_iv.his:
                    iv = iv.meet_hi(rb - lo)
        else:
            return
        st.intervals[sym] = iv

    # ------------------------------------------------------- driver

    def initial_state(self) -> AbsState:
        st = AbsState()
        for q in self.fn.params:
            if isinstance(q.ty, WordTy):
                st.vals[q.name] = Aff.of_sym(self.psym[q.name])
        return st

    def run_ranges(self) -> RangeReport:
        st = self.initial_state()
        self.recording = True
        self.transfer_block(st, self.fn.body)
        order = [n for n in self.param_names if n in self.pointers or n in self.tracked]
        ranges = {}
        for n in order:
            if n in self.pointers and n in self.accesses:
                los, his = self.accesses[n]
                ranges[n] = (
                    Interval(los, ()).lo_best(),
                    Interval((), his).hi_best(),
                )
            else:
                ranges[n] = None
        return RangeReport(order=order, ranges=ranges, failures=self.failures)


def _raw_interval(st: AbsState, a: Aff, target_sym) -> Interval:
    """Interval of an affine value that preserves symbolic bounds when
    the value is a single fresh symbol plus a parameter-affine offset
    (resolution would erase relations needed for join stability)."""
    frees = [s for s in a.syms() if s[0] == "s"]
    if len(frees) == 1 and a.coeff(frees[0]) == 1:
        sym = frees[0]
        rest = a - Aff.of_sym(sym)
        if all(s[0] == "p" for s in rest.syms()):
            iv = st.intervals.get(sym, TOP)
            los = tuple(b + rest for b in iv.los if target_sym not in b.syms())
            his = tuple(b + rest for b in iv.his if target_sym not in b.syms())
            if not los and rest.nonneg():
                los = (ZERO,)
            return Interval(los, his)
    return st.interval_of(a)


def _arr_read(lv: LArr) -> EArr:
    e = EArr(lv.name, lv.index, lv.width, lv.byte_mode)
    e.ty = getattr(lv, "ty", None)
    e.loc = getattr(lv, "loc", None)
    return e


def _expr_bits(e) -> int | None:
    ty = getattr(e, "ty", None)
    if isinstance(ty, WordTy):
        return ty.bits
    return None


def _opaque_interval(e) -> Interval:
    w = _expr_bits(e)
    return _width_interval(w) if w else TOP


def _contained(inner: Interval, outer: Interval) -> bool:
    lo_ok = any(any(_le(L, l) for L in outer.los) for l in inner.los)
    hi_ok = any(any(_le(h, H) for H in outer.his) for h in inner.his)
    return lo_ok and hi_ok


def _excludes_zero(iv: Interval) -> bool:
    return any(_le(Aff(1), b) for b in iv.los) or any(
        _le(b, Aff(-1)) for b in iv.his
    )


def _ratio(dv: Aff, du: Aff) -> Fraction | None:
    """The constant c with dv == c*du, if one exists."""
    if du.is_const() and du.const == 0:
        return None
    if du.const != 0:
        c = dv.const / du.const
    else:
        s, k = du.terms[0]
        c = dv.coeff(s) / k
    return c if dv == du.scale(c) else None


# ----------------------------------------------------------- public API


def analyze(p: Program, entry: str, pointers, tracked) -> RangeReport:
    """Infer per-pointer symbolic access ranges (the calling contract)."""
    return _Analyzer(p, entry, pointers, tracked).run_ranges()


def check_safety(p: Program, entry: str, pointers=(), tracked=()) -> list[Finding]:
    """Static findings: possible division by zero, array indices out of
    bounds, and scalar variables possibly read before assignment."""
    an = _Analyzer(p, entry, pointers, tracked)
    st = an.initial_state()
    an.recording = True
    try:
        an.transfer_block(st, an.fn.body)
    except AnalysisFailure as exc:
        an.findings.append(Finding("analysis", "?", str(exc)))
    an.findings.extend(_init_findings(p.func(entry)))
    return an.findings


def _init_findings(fn) -> list[Finding]:
    findings = []
    reported = set()
    envtypes = getattr(fn, "envtypes", {})

    def reads(e, assigned):
        for v in _expr_vars(e):
            if v not in envtypes:
                continue  # globals are always defined
            if isinstance(envtypes.get(v, (None, None))[1], ArrayTy):
                continue  # arrays are checked per element at run time
            if v not in assigned and v not in reported:
                reported.add(v)
                findings.append(
                    Finding(
                        "maybe-uninit",
                        _site(e),
                        f"{v} may be read before assignment",
                    )
                )

    def walk(stmts, assigned: set) -> set:
        for s in stmts:
            if isinstance(s, SDecl):
                if s.init is not None:
                    reads(s.init, assigned)
                    assigned |= set(s.names)
                else:
                    assigned -= set(s.names)
            elif isinstance(s, SAssign):
                reads(s.rhs, assigned)
                if s.cond is not None:
                    reads(s.cond, assigned)
                for lv in s.dests:
                    if isinstance(lv, LArr):
                        reads(lv.index, assigned)
                    elif isinstance(lv, LMem):
                        reads(lv.addr, assigned)
                    if s.op and isinstance(lv, LVar):
                        reads(EVar(lv.name), assigned)
                for lv in s.dests:
                    if isinstance(lv, LVar):
                        assigned.add(lv.name)
            elif isinstance(s, SIf):
                reads(s.cond, assigned)
                a = walk(s.then, set(assigned))
                b = walk(s.els, set(assigned))
                assigned.clear()
                assigned.update(a & b)
            elif isinstance(s, SWhile):
                reads(s.cond, assigned)
                walk(s.body, set(assigned))
            elif isinstance(s, SFor):
                walk(s.body, set(assigned) | {s.var})
            elif isinstance(s, SReturn):
                for v in s.values:
                    reads(v, assigned)
        return assigned

    params = {q.name for q in fn.params}
    walk(fn.body, set(params))
    return findings


def _expr_vars(e):
    kind = type(e)
    if kind is EVar:
        yield e.name
    elif kind is EBin:
        yield from _expr_vars(e.left)
        yield from _expr_vars(e.right)
    elif kind in (EUn, ECast):
        yield from _expr_vars(e.arg)
    elif kind is EArr:
        yield from _expr_vars(e.index)
    elif kind is EMem:
        yield from _expr_vars(e.addr)
    elif kind in (EIntr, ECall):
        for a in e.args:
            yield from _expr_vars(a)


def preanalyze(p: Program, entry: str) -> set:
    """Suggest parameters worth tracking: scalars that flow into loop
    bounds (and, through them, into address arithmetic)."""
    fn = p.func(entry)
    seeds: set[str] = set()
    defs: dict[str, set] = {}

    def collect(stmts):
        for s in stmts:
            if isinstance(s, SWhile):
                seeds.update(_expr_vars(s.cond))
                collect(s.body)
            elif isinstance(s, SIf):
                collect(s.then)
                collect(s.els)
            elif isinstance(s, SFor):
                collect(s.body)
            elif isinstance(s, SAssign):
                srcs = set(_expr_vars(s.rhs))
                if s.cond is not None:
                    srcs.update(_expr_vars(s.cond))
                for lv in s.dests:
                    if isinstance(lv, LVar):
                        defs.setdefault(lv.name, set()).update(srcs)
            elif isinstance(s, SDecl) and s.init is not None:
                for nm in s.names:
                    defs.setdefault(nm, set()).update(_expr_vars(s.init))

    collect(fn.body)
    closure = set(seeds)
    frontier = list(seeds)
    while frontier:
        v = frontier.pop()
        for src in defs.get(v, ()):
            if src not in closure:
                closure.add(src)
                frontier.append(src)
    return {q.name for q in fn.params} & closure
