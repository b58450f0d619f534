"""Typed AST of the DSL.

Nodes are plain dataclasses compared structurally; source locations and
type annotations are attached as non-field attributes (`loc`, `ty`) so
they never participate in equality.  `print_program` is the canonical
formatter: parse(print_program(parse(text))) equals parse(text).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class BoolTy:
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class IntTy:
    """Compile-time unbounded integer (inline-only)."""

    def __str__(self):
        return "int"


@dataclass(frozen=True)
class WordTy:
    bits: int

    def __str__(self):
        return f"u{self.bits}"


@dataclass(frozen=True)
class ArrayTy:
    bits: int
    length: object  # Expr before expansion, int after

    def __str__(self):
        return f"u{self.bits}[{fmt_expr(self.length) if not isinstance(self.length, int) else self.length}]"


Ty = Union[BoolTy, IntTy, WordTy, ArrayTy]

STORAGE_CLASSES = ("reg", "stack", "inline", "global")

# ----------------------------------------------------------- expressions


@dataclass
class EInt:
    value: int


@dataclass
class EBool:
    value: bool


@dataclass
class EVar:
    name: str


@dataclass
class EArr:
    """Array read: x[i], (uW)x[i] (element view) or (uW)x.[i] (byte view)."""

    name: str
    index: "Expr"
    width: Optional[int] = None
    byte_mode: bool = False


@dataclass
class EMem:
    """Memory load [addr]; width defaults to 64 when not annotated."""

    addr: "Expr"
    width: Optional[int] = None


@dataclass
class EUn:
    op: str  # ! ~ -
    arg: "Expr"


@dataclass
class EBin:
    op: str
    left: "Expr"
    right: "Expr"
    lanes: Optional[tuple[int, int]] = None  # (n, m) for e.g. +4u64


@dataclass
class EIntr:
    name: str  # without the leading '#'
    args: tuple


@dataclass
class ECall:
    name: str
    args: tuple


@dataclass
class EVecImm:
    """Immediate vector (NuM)[v0, ...]: v0 in the least significant bits."""

    n: int
    m: int
    values: tuple


@dataclass
class ECast:
    """Zero-extending / truncating resize to `width` bits."""

    width: int
    arg: "Expr"


Expr = Union[EInt, EBool, EVar, EArr, EMem, EUn, EBin, EIntr, ECall, EVecImm, ECast]

# -------------------------------------------------------------- lvalues


@dataclass
class LVar:
    name: str


@dataclass
class LArr:
    name: str
    index: Expr
    width: Optional[int] = None
    byte_mode: bool = False


@dataclass
class LMem:
    addr: Expr
    width: Optional[int] = None


@dataclass
class LIgnore:
    pass


Lval = Union[LVar, LArr, LMem, LIgnore]

# ------------------------------------------------------------ statements


@dataclass
class VarDecl:
    storage: str
    ty: Ty
    name: str


@dataclass
class SDecl:
    storage: str
    ty: Ty
    names: tuple
    init: Optional[Expr] = None


@dataclass
class SAssign:
    dests: tuple  # of Lval; empty for a bare call statement
    op: Optional[str]  # compound-assignment operator, None for plain '='
    rhs: Expr
    lanes: Optional[tuple[int, int]] = None
    cond: Optional[Expr] = None  # `x = e if c;`


@dataclass
class SIf:
    cond: Expr
    then: tuple
    els: tuple


@dataclass
class SWhile:
    cond: Expr
    body: tuple


@dataclass
class SFor:
    """Unrollable loop; iterates var = lo, lo+1, ..., hi (inclusive)."""

    var: str
    lo: Expr
    hi: Expr
    body: tuple


@dataclass
class SReturn:
    values: tuple


Stmt = Union[SDecl, SAssign, SIf, SWhile, SFor, SReturn]

# ------------------------------------------------------------- toplevel


@dataclass
class ParamDecl:
    name: str
    value: Expr


@dataclass
class GlobalDecl:
    name: str
    ty: Ty
    init: object  # Expr, or tuple of Expr for arrays


@dataclass
class FuncDecl:
    name: str
    inline: bool
    params: tuple  # of VarDecl
    rets: tuple  # of (storage, Ty)
    body: tuple


@dataclass
class Program:
    params: tuple  # of ParamDecl
    globals: tuple  # of GlobalDecl
    funcs: tuple  # of FuncDecl

    def func(self, name: str) -> FuncDecl:
        for f in self.funcs:
            if f.name == name:
                return f
        raise KeyError(f"no function named {name!r}")

    def func_names(self) -> list[str]:
        return [f.name for f in self.funcs]


# ---------------------------------------------------------- formatting

_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "|": 5,
    "^": 6,
    "&": 7,
    "<<": 8,
    ">>": 8,
    "<<r": 8,
    ">>r": 8,
    ">>s": 8,
    "+": 9,
    "-": 9,
    "*": 10,
    "/": 10,
    "%": 10,
}


def _fmt_int(v: int) -> str:
    return str(v) if -65536 < v < 65536 else hex(v)


def _op_text(op: str, lanes) -> str:
    return f"{op}{lanes[0]}u{lanes[1]}" if lanes else op


def fmt_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, EInt):
        return _fmt_int(e.value)
    if isinstance(e, EBool):
        return "true" if e.value else "false"
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, EArr):
        idx = fmt_expr(e.index)
        dot = "." if e.byte_mode else ""
        if e.width is None:
            return f"{e.name}{dot}[{idx}]"
        return f"(u{e.width}){e.name}{dot}[{idx}]"
    if isinstance(e, EMem):
        w = f"(u{e.width})" if e.width is not None else ""
        return f"{w}[{fmt_expr(e.addr)}]"
    if isinstance(e, EUn):
        return f"{e.op}{fmt_expr(e.arg, 99)}"
    if isinstance(e, EBin):
        p = _PREC[e.op]
        s = f"{fmt_expr(e.left, p)} {_op_text(e.op, e.lanes)} {fmt_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, EIntr):
        return f"#{e.name}(" + ", ".join(fmt_expr(a) for a in e.args) + ")"
    if isinstance(e, ECall):
        return f"{e.name}(" + ", ".join(fmt_expr(a) for a in e.args) + ")"
    if isinstance(e, EVecImm):
        return f"({e.n}u{e.m})[" + ", ".join(fmt_expr(v) for v in e.values) + "]"
    if isinstance(e, ECast):
        return f"(u{e.width})({fmt_expr(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def fmt_lval(lv: Lval) -> str:
    if isinstance(lv, LVar):
        return lv.name
    if isinstance(lv, LArr):
        return fmt_expr(EArr(lv.name, lv.index, lv.width, lv.byte_mode))
    if isinstance(lv, LMem):
        return fmt_expr(EMem(lv.addr, lv.width))
    if isinstance(lv, LIgnore):
        return "_"
    raise TypeError(f"not an lvalue: {lv!r}")


def _fmt_ty(ty: Ty) -> str:
    return str(ty)


def _fmt_block(stmts, indent: int) -> list[str]:
    out = []
    pad = "  " * indent
    for s in stmts:
        out.extend(_fmt_stmt(s, indent, pad))
    return out


def _fmt_stmt(s: Stmt, indent: int, pad: str) -> list[str]:
    if isinstance(s, SDecl):
        init = f" = {fmt_expr(s.init)}" if s.init is not None else ""
        return [f"{pad}{s.storage} {_fmt_ty(s.ty)} {', '.join(s.names)}{init};"]
    if isinstance(s, SAssign):
        rhs = fmt_expr(s.rhs)
        guard = f" if {fmt_expr(s.cond)}" if s.cond is not None else ""
        if not s.dests:
            return [f"{pad}{rhs};"]
        dests = ", ".join(fmt_lval(d) for d in s.dests)
        eq = f"{_op_text(s.op, s.lanes)}=" if s.op else "="
        return [f"{pad}{dests} {eq} {rhs}{guard};"]
    if isinstance(s, SIf):
        out = [f"{pad}if ({fmt_expr(s.cond)}) {{"]
        out += _fmt_block(s.then, indent + 1)
        if s.els:
            out.append(f"{pad}}} else {{")
            out += _fmt_block(s.els, indent + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, SWhile):
        out = [f"{pad}while ({fmt_expr(s.cond)}) {{"]
        out += _fmt_block(s.body, indent + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, SFor):
        out = [f"{pad}for {s.var} = {fmt_expr(s.lo)} to {fmt_expr(s.hi)} {{"]
        out += _fmt_block(s.body, indent + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, SReturn):
        vals = ", ".join(fmt_expr(v) for v in s.values)
        return [f"{pad}return{' ' + vals if vals else ''};"]
    raise TypeError(f"not a statement: {s!r}")


def print_program(p: Program) -> str:
    lines = []
    for pd in p.params:
        lines.append(f"param int {pd.name} = {fmt_expr(pd.value)};")
    for g in p.globals:
        if isinstance(g.init, tuple):
            init = "{" + ", ".join(fmt_expr(v) for v in g.init) + "}"
        else:
            init = fmt_expr(g.init)
        lines.append(f"global {_fmt_ty(g.ty)} {g.name} = {init};")
    for f in p.funcs:
        if lines:
            lines.append("")
        kw = "inline fn" if f.inline else "fn"
        args = ", ".join(f"{a.storage} {_fmt_ty(a.ty)} {a.name}" for a in f.params)
        rets = ""
        if f.rets:
            rets = " -> " + ", ".join(f"{st} {_fmt_ty(t)}" for st, t in f.rets)
        lines.append(f"{kw} {f.name}({args}){rets} {{")
        lines += _fmt_block(f.body, 1)
        lines.append("}")
    return "\n".join(lines) + "\n"
