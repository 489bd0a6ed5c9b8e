import random

import pytest
from hypothesis import given, settings, strategies as st

from lambdasx import stdlib
from lambdasx.harness import GenConfig, gen_open, gen_typed
from lambdasx.parser import parse_term as T, parse_type as Ty
from lambdasx.subtyping import enumerate_types, is_subtype
from lambdasx.syntax import free_vars, is_base_type
from lambdasx.typecheck import (
    AppRule, ErrorKind, TypingContext, TypingError, check, choose_app_rule, has_type, infer,
)

GOLDEN = ["H", "H_X", "H_S", "CNOT", "BELL", "BELL_X", "CNOT3_12", "TELEPORT"]


def kind(src, ctx=None):
    with pytest.raises(TypingError) as e:
        infer(TypingContext.of(ctx), T(src))
    return e.value.kind


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_typing(name):
    assert infer(None, stdlib.term(name)).type == stdlib.stated_type(name)


@pytest.mark.parametrize("name", ["NOT", "BELL_RT", "H3_1", "Z", "CZ", "BOB", "ALICE"])
def test_helper_typing(name):
    assert infer(None, stdlib.term(name)).type == stdlib.stated_type(name)


def test_cnot_over_x_only_reaches_nested_span():
    ty = infer(None, stdlib.term("CNOT_X")).type
    assert ty == Ty("X * B => S(B * S(B))")
    assert not is_subtype(ty, stdlib.stated_type("CNOT_X"))


def test_infer_examples():
    assert infer(None, T(r"\x:B. if x then |-> else |+>")).type == Ty("B => X")
    assert infer(None, T(r"\x:X. (\y:B. y (x) y) (cast x)")).type == Ty("X => S(B * B)")
    assert infer(None, T("|0> + |1>")).type == Ty("S(B)")


def test_error_kinds():
    assert kind("x (x) x", {"x": Ty("S(B)")}) is ErrorKind.LinearityViolation
    assert kind(r"\x:S(B). |0>") is ErrorKind.LinearityViolation
    assert kind("y") is ErrorKind.UnboundVar
    assert kind("|0> |1>") is ErrorKind.NotAFunction
    assert kind("pi 3 (|0> (x) |1>)") is ErrorKind.MeasureArity
    assert kind("head |0>") is ErrorKind.ProductShape


def test_check():
    assert check(None, T("|0>"), Ty("S(X)"))
    with pytest.raises(TypingError) as e:
        check(None, T("|+>"), Ty("B"))
    assert e.value.kind is ErrorKind.ArgMismatch
    assert check(None, stdlib.term("TELEPORT"), Ty("S(B) => B * B * S(B)"))


def test_choose_app_rule():
    assert choose_app_rule(Ty("B => X"), Ty("B"))[0] is AppRule.ElimPlain
    assert choose_app_rule(Ty("B => X"), Ty("S(B)")) == (AppRule.ElimSpan, Ty("S(X)"))
    with pytest.raises(TypingError) as e:
        choose_app_rule(Ty("B * B"), Ty("B"))
    assert e.value.kind is ErrorKind.NotAFunction


def test_base_duplication():
    r = infer(TypingContext.of({"x": Ty("B")}), T("x (x) x"))
    assert r.type == Ty("B * B")
    assert r.usage["x"] == 2


def test_measurement_types():
    assert infer(None, T("pi 1 (|0> (x) |+>)")).type == Ty("B * S(X)")
    assert infer(None, T("pi 2 (|0> (x) |1>)")).type == Ty("B * B")
    assert infer(None, T("pix 1 |+>")).type == Ty("X")


def test_err_is_below_everything():
    assert check(None, T("err"), Ty("B * X"))
    assert check(None, T("err"), Ty("S(B) => B"))


def _corpus(n, seed):
    rng = random.Random(seed)
    cfg = GenConfig(max_depth=4, seed=seed)
    return [gen_typed(cfg, rng) for _ in range(n)]


def test_generated_terms_check_at_goal():
    for ctx, t, goal in _corpus(200, 5):
        assert check(ctx, t, goal)


def test_usage_covers_free_vars_and_linearity():
    rng = random.Random(6)
    cfg = GenConfig(max_depth=4, seed=6)
    for _ in range(200):
        x, a, t, _ = gen_open(cfg, rng)
        r = infer(TypingContext.of({x: a}), t)
        assert set(free_vars(t)) <= set(r.usage)
        if not is_base_type(a):
            assert r.usage[x] == 1


def test_minimality():
    targets = [ty for ty in enumerate_types(4)]
    for ctx, t, _ in _corpus(80, 7):
        a = infer(ctx, t).type
        for b in targets:
            if has_type(t, b, ctx):
                assert is_subtype(a, b)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["B", "X", "B * B"]))
def test_weakening_with_base_variable(seed, m):
    ctx, t, _ = gen_typed(GenConfig(max_depth=4, seed=seed), random.Random(seed))
    tc = TypingContext.of(ctx)
    fresh = "w" + str(seed)
    assert fresh not in free_vars(t)
    assert infer(tc.extend(fresh, Ty(m)), t).type == infer(tc, t).type
