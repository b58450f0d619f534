import random

import pytest

from jamin import interp, leakage, memory
from jamin.expand import expand
from jamin.leakage import (
    Len,
    LeakAddr,
    LeakBranch,
    PublicSpec,
    Ptr,
    Val,
    ct_check,
    covered_by,
    infer_public,
    run_instrumented,
)
from jamin.parser import parse
from jamin.typecheck import typecheck


def prep(text):
    return expand(typecheck(parse(text)))


STORE2 = prep(
    """
fn store2(reg u64 p, reg u64[2] x) {
  [p + 0] = x[0];
  [p + 8] = x[1];
}
"""
)


def test_store2_trace_matches_instrumented_semantics():
    rng = random.Random(0)
    for _ in range(100):
        p = rng.randrange(0x1000, 0xFFFF) & ~0xF
        m = memory.add_region(memory.Memory(), p, 16)
        _, _, tr = run_instrumented(STORE2, "store2", [p, [7, 9]], m)
        assert tr.events == [
            LeakAddr(0),
            LeakAddr(p + 0),
            LeakAddr(1),
            LeakAddr(p + 8),
        ]


def test_branch_events():
    p = prep(
        """
fn f(reg u64 x) -> reg u64 {
  reg u64 r;
  r = 0;
  if (x == 0) { r = 1; }
  return r;
}
"""
    )
    _, _, tr = run_instrumented(p, "f", [0], memory.Memory())
    assert LeakBranch(True) in tr.events
    _, _, tr = run_instrumented(p, "f", [5], memory.Memory())
    assert LeakBranch(False) in tr.events


def test_straight_line_trace_is_input_independent():
    p = prep(
        """
fn f(reg u64 a, reg u64 b) -> reg u64 {
  a = a + b;
  a = a * 31;
  a = a ^ b;
  return a;
}
"""
    )
    traces = []
    for args in ([1, 2], [2**64 - 1, 12345]):
        _, _, tr = run_instrumented(p, "f", args, memory.Memory())
        traces.append(tr.events)
    assert traces[0] == traces[1] == []


def test_instrumentation_transparency():
    p = prep(
        """
fn f(reg u64 p) -> reg u64 {
  reg u64 t;
  t = [p + 0];
  t = t + 1;
  [p + 0] = t;
  return t;
}
"""
    )
    m = memory.add_region(memory.Memory(), 64, 8)
    m = memory.store_bytes(m, 64, (41).to_bytes(8, "little"))
    plain = interp.run(p, "f", [64], m)
    inst = run_instrumented(p, "f", [64], m)
    assert plain[0] == inst[0]
    assert memory.dump(plain[1]) == memory.dump(inst[1])


SECRET_BRANCH = prep(
    """
fn f(reg u64 s, reg u64 p) -> reg u64 {
  reg u64 r;
  r = 0;
  if (s == 0) { r = 1; }
  return r;
}
"""
)


def test_ct_check_catches_secret_branch():
    spec = PublicSpec.of(["p"])
    shape = {"s": Val(64), "p": Val(64)}
    v = ct_check(SECRET_BRANCH, "f", spec, trials=1000, seed=3, shape=shape)
    assert v.kind == "insecure"
    assert v.witness is not None
    assert v.witness.events[0] != v.witness.events[1]
    assert "s" in infer_public(SECRET_BRANCH, "f")


def test_ct_check_catches_secret_address():
    p = prep(
        """
fn f(reg u64 base, reg u64 s) -> reg u64 {
  reg u64 r;
  r = (u8)[base + (s & 0xf)];
  return r;
}
"""
    )
    spec = PublicSpec.of(["base"], public_regions=["base"])
    shape = {"base": Ptr(16), "s": Val(64)}
    v = ct_check(p, "f", spec, trials=1000, seed=3, shape=shape)
    assert v.kind == "insecure"
    assert "s" in infer_public(p, "f")


def test_ct_check_secure_program_and_coverage_link():
    p = prep(
        """
fn f(reg u64 p, reg u64 s) {
  [p + 0] = s;
}
"""
    )
    spec = PublicSpec.of(["p"])
    shape = {"p": Ptr(8), "s": Val(64)}
    inferred = infer_public(p, "f")
    assert covered_by(inferred, spec)
    v = ct_check(p, "f", spec, trials=2000, seed=9, shape=shape)
    assert v.secure


def test_secret_memory_contents_as_address_detected():
    p = prep(
        """
fn f(reg u64 tab, reg u64 key) -> reg u64 {
  reg u64 i, r;
  i = (u8)[key + 0];
  r = (u8)[tab + (i & 0x7)];
  return r;
}
"""
    )
    # contents of the key region are secret; its address is public
    spec = PublicSpec.of(["tab", "key"], public_regions=["tab"])
    shape = {"tab": Ptr(8), "key": Ptr(1)}
    inferred = infer_public(p, "f")
    assert "mem[key]" in inferred
    assert not covered_by(inferred, spec)
    v = ct_check(p, "f", spec, trials=1000, seed=11, shape=shape)
    assert v.kind == "insecure"


def test_len_like_loop_is_public_secret_data_fine():
    p = prep(
        """
fn f(reg u64 src, reg u64 n, reg u64 acc) -> reg u64 {
  while (0 < n) {
    reg u64 t;
    t = (u8)[src + 0];
    acc = acc + t;
    src = src + 1;
    n = n - 1;
  }
  return acc;
}
"""
    )
    inferred = infer_public(p, "f")
    assert inferred == frozenset({"src", "n"})
    spec = PublicSpec.of(["src", "n"])
    shape = {"src": Ptr("n"), "n": Len(max=64), "acc": Val(64)}
    v = ct_check(p, "f", spec, trials=500, seed=13, shape=shape)
    assert v.secure


def test_cmov_does_not_leak():
    p = prep(
        """
fn f(reg u64 s, reg u64 a, reg u64 b) -> reg u64 {
  reg bool c;
  reg u64 r;
  c = s == 0;
  r = a;
  r = b if c;
  return r;
}
"""
    )
    assert infer_public(p, "f") == frozenset()
    spec = PublicSpec.of([])
    shape = {"s": Val(64), "a": Val(64), "b": Val(64)}
    v = ct_check(p, "f", spec, trials=500, seed=17, shape=shape)
    assert v.secure


def test_verdict_reports_safety_error():
    p = prep("fn f(reg u64 s) -> reg u64 { s = 1 / (s & 1); return s; }")
    v = ct_check(p, "f", PublicSpec.of([]), trials=50, seed=1, shape={"s": Val(64)})
    assert v.kind == "error"
    assert "DivByZero" in v.error


def test_corpus_declared_specs_inferred_and_covered():
    from jamin.primitives.corpus import PROGRAMS, load_program

    for name, info in PROGRAMS.items():
        p = load_program(name)
        inferred = infer_public(p, info.entry)
        assert covered_by(inferred, info.public), (name, inferred)
        # key and message bytes never reach the trace
        assert not any(t.startswith("mem[") for t in inferred), (name, inferred)
