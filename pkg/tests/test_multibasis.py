import random

import pytest

from lambdasx import stdlib
from lambdasx.bases import (
    BasisDef, Mode, NotUnitary, OverlapViolation, UnknownBasis, Vec2, cast_const, qgen_subtype,
    register_basis, scoped_registry,
)
from lambdasx.evaluator import distribution, normalize
from lambdasx.measurement import to_basis
from lambdasx.parser import parse, parse_term as T, parse_type as Ty
from lambdasx.syntax import Atom, Ket, Meas, QGen, Scale, Tensor, plus, tensor
from lambdasx.typecheck import infer

S2 = 2 ** -0.5
HADAMARD_B1 = BasisDef("B1", Vec2(S2, S2), Vec2(S2, -S2))
RENAME = {"up1": "+", "dn1": "-"}


def random_vector(rng: random.Random):
    n = rng.randint(1, 3)
    parts = []
    for _ in range(rng.randint(1, 3)):
        amp = rng.choice([1, -1, 0.5, 0.6, 0.8, 1j, S2])
        parts.append(Scale(amp, tensor(*(Ket(rng.choice("01+-")) for _ in range(n)))))
    t = plus(*parts)
    if to_basis(t).norm2() < 1e-9:
        t = plus(t, tensor(*(Ket("0") for _ in range(n))))
    return t, n


def split(t):
    items = t.items if isinstance(t, Tensor) else (t,)
    return items


def same_distribution(d1, d2, m):
    if len(d1.outcomes) != len(d2.outcomes):
        return False
    key = lambda o: tuple(RENAME.get(k.label, k.label) for k in split(o[0])[:m])
    for (t1, p1), (t2, p2) in zip(sorted(d1.outcomes, key=key), sorted(d2.outcomes, key=key)):
        if key((t1, p1)) != key((t2, p2)) or abs(p1 - p2) > 1e-9:
            return False
        r1, r2 = split(t1)[m:], split(t2)[m:]
        if r1 and not to_basis(tensor(*r1)).close_to(to_basis(tensor(*r2))):
            return False
    return True


def test_hadamard_as_b1_matches_x():
    register_basis(HADAMARD_B1, Mode.STRICT)
    rng = random.Random(7)
    for _ in range(200):
        t, n = random_vector(rng)
        m = rng.randint(1, n)
        d1 = distribution(Meas(m, "B1", t))
        dx = distribution(Meas(m, "X", t))
        assert same_distribution(d1, dx, m)


def test_registration_modes():
    with pytest.raises(OverlapViolation):
        register_basis(stdlib.ZBASIS, Mode.STRICT)
    assert register_basis(stdlib.ZBASIS, Mode.OVERLAPPING) == "B1"


def test_hadamard_may_coincide_with_x_in_strict_mode():
    assert register_basis(HADAMARD_B1, "strict") == "B1"


def test_not_unitary():
    with pytest.raises(NotUnitary):
        register_basis(BasisDef("B2", Vec2(1, 0), Vec2(1, 0)))
    with pytest.raises(NotUnitary):
        register_basis(BasisDef("B2", Vec2(1, 1), Vec2(1, -1)))


def test_qgen_subtype():
    register_basis(stdlib.ZBASIS, Mode.OVERLAPPING)
    assert qgen_subtype(QGen((1, 0)), Atom("B"))
    assert qgen_subtype(QGen((1, 0)), Atom("B1"))
    assert not qgen_subtype(QGen((S2, S2)), Atom("B"))


def test_cast_const():
    register_basis(HADAMARD_B1, Mode.STRICT)
    assert cast_const(Ket("up1")) == T("isqrt2 . |0> + isqrt2 . |1>")
    assert cast_const(Ket("0")) == Ket("0")
    with scoped_registry():
        register_basis(stdlib.ZBASIS, Mode.OVERLAPPING)
        assert cast_const(Ket("dn1")) == T("-1 . |1>")
    with pytest.raises(UnknownBasis):
        cast_const(Ket("up7"))


def test_choice_example():
    register_basis(stdlib.ZBASIS, Mode.OVERLAPPING)
    assert infer(None, stdlib.choice_term()).type == stdlib.choice_type()
    assert stdlib.choice_type() == Ty("B => Q[|0>] => S(B)")


def test_basis_header_in_source():
    sf = parse("basis B1 = up(isqrt2, isqrt2), down(isqrt2, -isqrt2) overlap\nmain pi[1] 1 (|+>)")
    assert infer(None, sf.main).type == Ty("B1")
    d = distribution(sf.main)
    assert [(k, round(p, 12)) for k, p in d.outcomes] == [(Ket("up1"), 1.0)]


def test_conditional_and_measurement_in_declared_basis():
    register_basis(stdlib.ZBASIS, Mode.OVERLAPPING)
    t = T("if1 |dn1> then |0> else |1>")
    assert normalize(t).final == Ket("1")
    assert infer(None, T("pi[1] 1 (|0> (x) |1>)")).type == Ty("B1 * S(B)")
