import pytest

from jamin import ir
from jamin.ir import print_program
from jamin.parser import ParseError, parse
from jamin.typecheck import TypecheckError, typecheck

SHUFFLE_FIG = """
fn shuffle_state(reg u256[4] k) -> reg u256[4] {
  k[1] = #x86_VPSHUFD_256(k[1], (4u2)[ 0, 3, 2, 1]);
  k[2] = #x86_VPSHUFD_256(k[2], (4u2)[ 1, 0, 3, 2]);
  k[3] = #x86_VPSHUFD_256(k[3], (4u2)[ 2, 1, 0, 3]);
  return k;
}
"""


def roundtrip(text):
    p = parse(text)
    printed = print_program(p)
    assert parse(printed) == p
    return p


def test_minimal_function():
    p = roundtrip("fn f(reg u64 x) -> reg u64 { x = x; return x; }")
    assert p.func_names() == ["f"]


def test_shuffle_figure_parses():
    p = roundtrip(SHUFFLE_FIG)
    typecheck(p)
    stmt = p.func("shuffle_state").body[0]
    imm = stmt.rhs.args[1]
    assert (imm.n, imm.m) == (4, 2)
    assert [v.value for v in imm.values] == [0, 3, 2, 1]


def test_vector_assignment_sugar():
    p = roundtrip("fn g(reg u256 x, reg u256 z) { x +4u64= z; }")
    s = p.func("g").body[0]
    assert s.op == "+" and s.lanes == (4, 64)
    typecheck(p)


def test_lane_annotated_infix():
    p = roundtrip("fn g(reg u256 x, reg u256 z) -> reg u256 { x = x +4u64 z; return x; }")
    typecheck(p)


def test_memory_and_views():
    p = roundtrip(
        """
fn h(reg u64 p) {
  stack u8[16] a;
  reg u64 t;
  t = [p + 8];
  t = (u8)[p + 1];
  (u8)a[3] = t;
  (u8)a.[5] = t;
  t = (u64)a.[0];
  [p + 0] = t;
}
"""
    )
    typecheck(p)


def test_conditional_assignment_and_flags():
    p = roundtrip(
        """
fn f(reg u64 a, reg u64 b) -> reg u64 {
  reg bool of, cf, sf, pf, zf;
  reg u64 r;
  of, cf, sf, pf, zf, r = #x86_ADD_64(a, b);
  r = a if cf;
  return r;
}
"""
    )
    typecheck(p)


def test_params_globals_for():
    p = roundtrip(
        """
param int N = 4;
global u32 magic = 0x9e377900;
fn f() -> reg u32 {
  reg u32[4] x;
  reg u32 acc;
  acc = magic;
  for i = 0 to N - 1 { x[i] = i; acc = acc + x[i]; }
  return acc;
}
"""
    )
    typecheck(p)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as err:
        parse("fn f( { }")
    assert err.value.line == 1


def test_duplicate_names_rejected():
    with pytest.raises(ParseError):
        parse("fn f() { } fn f() { }")
    with pytest.raises(ParseError):
        parse("fn f(reg u64 x) { reg u64 x; }")


def test_unknown_intrinsic_rejected():
    with pytest.raises(ParseError):
        parse("fn f(reg u64 x) { x = #nope(x); }")


def test_comments_and_hex():
    p = parse(
        """
// line comment
fn f(reg u64 x) -> reg u64 {
  /* block
     comment */
  x = x & 0x0ffffffc0fffffff;
  return x;
}
"""
    )
    typecheck(p)


def test_typecheck_truncating_cast_inserted():
    p = parse("fn f(reg u64 y) -> reg u32 { reg u32 x; x = y; return x; }")
    typecheck(p)
    assign = p.func("f").body[1]
    assert isinstance(assign.rhs, ir.ECast)
    assert assign.rhs.width == 32


def test_typecheck_register_array_runtime_index_rejected():
    src = """
fn f(reg u64 i) -> reg u64 {
  reg u64[4] x;
  x[0] = 1; x[1] = 2; x[2] = 3; x[3] = 4;
  return x[i];
}
"""
    with pytest.raises(TypecheckError, match="compile-time"):
        typecheck(parse(src))


def test_typecheck_stack_array_runtime_index_allowed():
    src = """
fn f(reg u64 i) -> reg u64 {
  stack u8[16] s;
  (u8)s[0] = 1;
  reg u64 t;
  t = (u8)s[i];
  return t;
}
"""
    typecheck(parse(src))


def test_typecheck_write_to_global_rejected():
    src = "global u64 g = 3; fn f() { g = 4; }"
    with pytest.raises(TypecheckError, match="global"):
        typecheck(parse(src))


def test_typecheck_recursion_rejected():
    src = """
fn f(reg u64 x) -> reg u64 { reg u64 r; r = g(x); return r; }
fn g(reg u64 x) -> reg u64 { reg u64 r; r = f(x); return r; }
"""
    with pytest.raises(TypecheckError, match="recursive"):
        typecheck(parse(src))


def test_views_only_on_stack_arrays():
    src = """
fn f() -> reg u64 {
  reg u64[2] x;
  x[0] = 1; x[1] = 2;
  reg u64 t;
  t = (u8)x[0];
  return t;
}
"""
    with pytest.raises(TypecheckError, match="stack"):
        typecheck(parse(src))


def test_corpus_roundtrips():
    from jamin.primitives.corpus import PROGRAMS, load_source

    for name in PROGRAMS:
        roundtrip(load_source(name))
