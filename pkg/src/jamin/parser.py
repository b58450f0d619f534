"""Lexer and parser for the DSL (`.jz` files).

The grammar follows the conventions of the language reference in
docs/lang.md: `;`-terminated statements, braced blocks, `#`-prefixed
intrinsics, vector lane annotations (`4u64`) on operators, and
immediate-vector literals `(4u2)[a, b, c, d]`.
"""

from __future__ import annotations

import re

from . import ir
from .ir import (
    ArrayTy,
    BoolTy,
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
    FuncDecl,
    GlobalDecl,
    IntTy,
    LArr,
    LIgnore,
    LMem,
    LVar,
    ParamDecl,
    Program,
    SAssign,
    SDecl,
    SFor,
    SIf,
    SReturn,
    SWhile,
    VarDecl,
    WordTy,
)

KEYWORDS = {
    "fn",
    "inline",
    "return",
    "if",
    "else",
    "while",
    "for",
    "to",
    "param",
    "global",
    "reg",
    "stack",
    "true",
    "false",
}

WIDTH_NAMES = {f"u{w}": w for w in (8, 16, 32, 64, 128, 256)}


class ParseError(SyntaxError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN_RES = [
    ("WS", re.compile(r"[ \t\r\n]+")),
    ("COMMENT", re.compile(r"//[^\n]*|/\*.*?\*/", re.S)),
    ("ARROW", re.compile(r"->")),
    ("DOTLBRACK", re.compile(r"\.\[")),
    ("LANES", re.compile(r"\d+u\d+")),
    ("INT", re.compile(r"0x[0-9a-fA-F_]+|0b[01_]+|\d+")),
    ("IDENT", re.compile(r"[A-Za-z_][A-Za-z0-9_]*")),
    (
        "OP",
        re.compile(
            r"(?P<op><<r|<<|>>s|>>r|>>|\+|-|\*|/|%|&&|\|\||&|\||\^)"
            r"(?P<lanes>\d+u\d+)?(?P<assign>=(?!=))?"
        ),
    ),
    ("CMP", re.compile(r"==|!=|<=|>=|<|>")),
    ("EQUALS", re.compile(r"=")),
    ("BANG", re.compile(r"!")),
    ("TILDE", re.compile(r"~")),
    ("PUNCT", re.compile(r"[()\[\]{},;#_]")),
]


class Token:
    __slots__ = ("kind", "text", "line", "col", "op", "lanes", "assign")

    def __init__(self, kind, text, line, col, op=None, lanes=None, assign=False):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col
        self.op = op
        self.lanes = lanes
        self.assign = assign

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r})"


def _parse_lanes(text: str) -> tuple[int, int]:
    n, m = text.split("u")
    return int(n), int(m)


def tokenize(text: str) -> list[Token]:
    toks = []
    pos, line, col = 0, 1, 1
    n = len(text)
    while pos < n:
        for kind, rx in _TOKEN_RES:
            m = rx.match(text, pos)
            if not m:
                continue
            lexeme = m.group(0)
            if kind == "OP":
                tok = Token(
                    "OP",
                    lexeme,
                    line,
                    col,
                    op=m.group("op"),
                    lanes=_parse_lanes(m.group("lanes")) if m.group("lanes") else None,
                    assign=bool(m.group("assign")),
                )
                toks.append(tok)
            elif kind == "CMP":
                toks.append(Token("OP", lexeme, line, col, op=lexeme))
            elif kind not in ("WS", "COMMENT"):
                toks.append(Token(kind, lexeme, line, col))
            nl = lexeme.count("\n")
            if nl:
                line += nl
                col = len(lexeme) - lexeme.rfind("\n")
            else:
                col += len(lexeme)
            pos = m.end()
            break
        else:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


class Parser:
    def __init__(self, text: str, known_intrinsics=None):
        self.toks = tokenize(text)
        self.pos = 0
        if known_intrinsics is None:
            from . import isa

            known_intrinsics = set(isa.registry())
        self.known_intrinsics = known_intrinsics

    # ------------------------------------------------- token plumbing

    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            self.error(f"expected {want!r}, found {t.text!r}")
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    def at_ident(self, *names: str) -> bool:
        t = self.peek()
        return t.kind == "IDENT" and t.text in names

    def _loc(self, node, tok):
        node.loc = (tok.line, tok.col)
        return node

    # ------------------------------------------------------ programs

    def parse_program(self) -> Program:
        params, globs, funcs = [], [], []
        seen = set()
        while self.peek().kind != "EOF":
            t = self.peek()
            if self.at_ident("param"):
                params.append(self.parse_param())
                name = params[-1].name
            elif self.at_ident("global"):
                globs.append(self.parse_global())
                name = globs[-1].name
            elif self.at_ident("fn", "inline"):
                funcs.append(self.parse_func())
                name = funcs[-1].name
            else:
                self.error(f"expected declaration, found {t.text!r}")
            if name in seen:
                self.error(f"duplicate name {name!r}", t)
            seen.add(name)
        return Program(tuple(params), tuple(globs), tuple(funcs))

    def parse_param(self) -> ParamDecl:
        tok = self.expect("IDENT", "param")
        self.expect("IDENT", "int")
        name = self.expect("IDENT").text
        self.expect("EQUALS")
        value = self.parse_expr()
        self.expect("PUNCT", ";")
        return self._loc(ParamDecl(name, value), tok)

    def parse_global(self) -> GlobalDecl:
        tok = self.expect("IDENT", "global")
        ty = self.parse_type()
        name = self.expect("IDENT").text
        self.expect("EQUALS")
        if self.accept("PUNCT", "{"):
            vals = [self.parse_expr()]
            while self.accept("PUNCT", ","):
                vals.append(self.parse_expr())
            self.expect("PUNCT", "}")
            init: object = tuple(vals)
        else:
            init = self.parse_expr()
        self.expect("PUNCT", ";")
        return self._loc(GlobalDecl(name, ty, init), tok)

    def parse_func(self) -> FuncDecl:
        tok = self.peek()
        inline = bool(self.accept("IDENT", "inline"))
        self.expect("IDENT", "fn")
        name = self.expect("IDENT").text
        self.expect("PUNCT", "(")
        params = []
        if not self.accept("PUNCT", ")"):
            while True:
                params.append(self.parse_vardecl())
                if not self.accept("PUNCT", ","):
                    break
            self.expect("PUNCT", ")")
        rets = []
        if self.accept("ARROW"):
            while True:
                storage = self.parse_storage()
                rets.append((storage, self.parse_type()))
                if not self.accept("PUNCT", ","):
                    break
        body = self.parse_block()
        f = FuncDecl(name, inline, tuple(params), tuple(rets), body)
        self._check_local_dups(f)
        return self._loc(f, tok)

    def _check_local_dups(self, f: FuncDecl):
        seen = {p.name for p in f.params}
        if len(seen) != len(f.params):
            self.error(f"duplicate parameter name in {f.name!r}")

        def walk(stmts):
            for s in stmts:
                if isinstance(s, SDecl):
                    for nm in s.names:
                        if nm in seen:
                            raise ParseError(
                                f"duplicate name {nm!r} in {f.name!r}", *s.loc
                            )
                        seen.add(nm)
                elif isinstance(s, SIf):
                    walk(s.then)
                    walk(s.els)
                elif isinstance(s, (SWhile, SFor)):
                    walk(s.body)

        walk(f.body)

    def parse_storage(self) -> str:
        t = self.peek()
        if t.kind == "IDENT" and t.text in ir.STORAGE_CLASSES:
            return self.next().text
        self.error(f"expected storage class, found {t.text!r}")

    def parse_vardecl(self) -> VarDecl:
        storage = self.parse_storage()
        ty = self.parse_type()
        name = self.expect("IDENT").text
        return VarDecl(storage, ty, name)

    def parse_type(self):
        t = self.expect("IDENT")
        if t.text == "bool":
            return BoolTy()
        if t.text == "int":
            return IntTy()
        if t.text in WIDTH_NAMES:
            bits = WIDTH_NAMES[t.text]
            if self.accept("PUNCT", "["):
                length = self.parse_expr()
                self.expect("PUNCT", "]")
                return ArrayTy(bits, length)
            return WordTy(bits)
        self.error(f"unknown type {t.text!r}", t)

    # ---------------------------------------------------- statements

    def parse_block(self) -> tuple:
        self.expect("PUNCT", "{")
        stmts = []
        while not self.accept("PUNCT", "}"):
            stmts.append(self.parse_stmt())
        return tuple(stmts)

    def parse_stmt(self):
        t = self.peek()
        if t.kind == "IDENT" and t.text in ir.STORAGE_CLASSES:
            return self.parse_decl_stmt()
        if self.at_ident("if"):
            return self.parse_if()
        if self.at_ident("while"):
            self.next()
            self.expect("PUNCT", "(")
            cond = self.parse_expr()
            self.expect("PUNCT", ")")
            return self._loc(SWhile(cond, self.parse_block()), t)
        if self.at_ident("for"):
            self.next()
            var = self.expect("IDENT").text
            self.expect("EQUALS")
            lo = self.parse_expr()
            self.expect("IDENT", "to")
            hi = self.parse_expr()
            return self._loc(SFor(var, lo, hi, self.parse_block()), t)
        if self.at_ident("return"):
            self.next()
            values = []
            if not (self.peek().kind == "PUNCT" and self.peek().text == ";"):
                values.append(self.parse_expr())
                while self.accept("PUNCT", ","):
                    values.append(self.parse_expr())
            self.expect("PUNCT", ";")
            return self._loc(SReturn(tuple(values)), t)
        return self.parse_assign_or_call()

    def parse_decl_stmt(self):
        tok = self.peek()
        storage = self.parse_storage()
        ty = self.parse_type()
        names = [self.expect("IDENT").text]
        while self.accept("PUNCT", ","):
            names.append(self.expect("IDENT").text)
        init = None
        if self.accept("EQUALS"):
            if len(names) != 1:
                self.error("an initializer requires a single declared name", tok)
            init = self.parse_expr()
        self.expect("PUNCT", ";")
        return self._loc(SDecl(storage, ty, tuple(names), init), tok)

    def parse_if(self):
        tok = self.expect("IDENT", "if")
        self.expect("PUNCT", "(")
        cond = self.parse_expr()
        self.expect("PUNCT", ")")
        then = self.parse_block()
        els: tuple = ()
        if self.accept("IDENT", "else"):
            if self.at_ident("if"):
                els = (self.parse_if(),)
            else:
                els = self.parse_block()
        return self._loc(SIf(cond, then, els), tok)

    def parse_assign_or_call(self):
        tok = self.peek()
        # bare call statement: f(...);
        if (
            tok.kind == "IDENT"
            and tok.text not in KEYWORDS
            and self.peek(1).kind == "PUNCT"
            and self.peek(1).text == "("
        ):
            name = self.next().text
            args = self.parse_call_args()
            self.expect("PUNCT", ";")
            return self._loc(SAssign((), None, ECall(name, args)), tok)

        dests = [self.parse_lval()]
        while self.accept("PUNCT", ","):
            dests.append(self.parse_lval())
        op_tok = self.peek()
        op = None
        lanes = None
        if op_tok.kind == "OP" and op_tok.assign:
            self.next()
            op, lanes = op_tok.op, op_tok.lanes
        else:
            self.expect("EQUALS")
        rhs = self.parse_expr()
        cond = None
        if self.accept("IDENT", "if"):
            cond = self.parse_expr()
        self.expect("PUNCT", ";")
        return self._loc(SAssign(tuple(dests), op, rhs, lanes, cond), tok)

    def parse_lval(self):
        t = self.peek()
        if t.kind == "IDENT" and t.text == "_":
            self.next()
            return LIgnore()
        if t.kind == "PUNCT" and t.text == "[":
            self.next()
            addr = self.parse_expr()
            self.expect("PUNCT", "]")
            return LMem(addr, None)
        if t.kind == "PUNCT" and t.text == "(":
            width = self.parse_width_annot()
            u = self.peek()
            if u.kind == "PUNCT" and u.text == "[":
                self.next()
                addr = self.parse_expr()
                self.expect("PUNCT", "]")
                return LMem(addr, width)
            name = self.expect("IDENT").text
            byte_mode = bool(self.accept("DOTLBRACK"))
            if not byte_mode:
                self.expect("PUNCT", "[")
            idx = self.parse_expr()
            self.expect("PUNCT", "]")
            return LArr(name, idx, width, byte_mode)
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            name = self.next().text
            if self.accept("DOTLBRACK"):
                idx = self.parse_expr()
                self.expect("PUNCT", "]")
                return LArr(name, idx, None, True)
            if self.accept("PUNCT", "["):
                idx = self.parse_expr()
                self.expect("PUNCT", "]")
                return LArr(name, idx, None, False)
            return LVar(name)
        self.error(f"expected assignment destination, found {t.text!r}")

    def parse_width_annot(self) -> int:
        """Consume `(uW)`; the caller has seen the `(` but not taken it."""
        self.expect("PUNCT", "(")
        t = self.expect("IDENT")
        if t.text not in WIDTH_NAMES:
            self.error(f"expected a width, found {t.text!r}", t)
        self.expect("PUNCT", ")")
        return WIDTH_NAMES[t.text]

    def parse_call_args(self) -> tuple:
        self.expect("PUNCT", "(")
        args = []
        if not self.accept("PUNCT", ")"):
            while True:
                args.append(self.parse_expr())
                if not self.accept("PUNCT", ","):
                    break
            self.expect("PUNCT", ")")
        return tuple(args)

    # --------------------------------------------------- expressions

    def parse_expr(self, min_prec: int = 1):
        lhs = self.parse_unary()
        while True:
            t = self.peek()
            if t.kind != "OP" or t.assign or t.op not in ir._PREC:
                return lhs
            prec = ir._PREC[t.op]
            if prec < min_prec:
                return lhs
            self.next()
            rhs = self.parse_expr(prec + 1)
            lhs = self._loc(EBin(t.op, lhs, rhs, t.lanes), t)

    def parse_unary(self):
        t = self.peek()
        if t.kind == "BANG":
            self.next()
            return self._loc(EUn("!", self.parse_unary()), t)
        if t.kind == "TILDE":
            self.next()
            return self._loc(EUn("~", self.parse_unary()), t)
        if t.kind == "OP" and t.op == "-" and not t.assign and t.lanes is None:
            self.next()
            return self._loc(EUn("-", self.parse_unary()), t)
        return self.parse_primary()

    def parse_primary(self):
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return self._loc(EInt(int(t.text.replace("_", ""), 0)), t)
        if t.kind == "IDENT" and t.text in ("true", "false"):
            self.next()
            return self._loc(EBool(t.text == "true"), t)
        if t.kind == "PUNCT" and t.text == "#":
            self.next()
            name = self.expect("IDENT").text
            if name not in self.known_intrinsics:
                self.error(f"unknown intrinsic #{name}", t)
            args = self.parse_call_args()
            return self._loc(EIntr(name, args), t)
        if t.kind == "PUNCT" and t.text == "[":
            self.next()
            addr = self.parse_expr()
            self.expect("PUNCT", "]")
            return self._loc(EMem(addr, None), t)
        if t.kind == "PUNCT" and t.text == "(":
            nxt = self.peek(1)
            if nxt.kind == "LANES" and self.peek(2).text == ")":
                self.next(), self.next(), self.next()
                n, m = _parse_lanes(nxt.text)
                self.expect("PUNCT", "[")
                vals = [self.parse_expr()]
                while self.accept("PUNCT", ","):
                    vals.append(self.parse_expr())
                self.expect("PUNCT", "]")
                return self._loc(EVecImm(n, m, tuple(vals)), t)
            if (
                nxt.kind == "IDENT"
                and nxt.text in WIDTH_NAMES
                and self.peek(2).text == ")"
            ):
                width = self.parse_width_annot()
                u = self.peek()
                if u.kind == "PUNCT" and u.text == "[":
                    self.next()
                    addr = self.parse_expr()
                    self.expect("PUNCT", "]")
                    return self._loc(EMem(addr, width), t)
                if u.kind == "IDENT" and u.text not in KEYWORDS:
                    if self.peek(1).kind == "DOTLBRACK":
                        name = self.next().text
                        self.next()
                        idx = self.parse_expr()
                        self.expect("PUNCT", "]")
                        return self._loc(EArr(name, idx, width, True), t)
                    if self.peek(1).kind == "PUNCT" and self.peek(1).text == "[":
                        name = self.next().text
                        self.next()
                        idx = self.parse_expr()
                        self.expect("PUNCT", "]")
                        return self._loc(EArr(name, idx, width, False), t)
                return self._loc(ECast(width, self.parse_unary()), t)
            self.next()
            e = self.parse_expr()
            self.expect("PUNCT", ")")
            return e
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.next()
            if self.peek().kind == "PUNCT" and self.peek().text == "(":
                return self._loc(ECall(t.text, self.parse_call_args()), t)
            if self.accept("DOTLBRACK"):
                idx = self.parse_expr()
                self.expect("PUNCT", "]")
                return self._loc(EArr(t.text, idx, None, True), t)
            if self.peek().kind == "PUNCT" and self.peek().text == "[":
                self.next()
                idx = self.parse_expr()
                self.expect("PUNCT", "]")
                return self._loc(EArr(t.text, idx, None, False), t)
            return self._loc(EVar(t.text), t)
        self.error(f"expected expression, found {t.text!r}")


def parse(text: str, known_intrinsics=None) -> Program:
    """Parse DSL source text into an untyped Program."""
    return Parser(text, known_intrinsics).parse_program()
