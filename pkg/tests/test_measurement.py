import cmath
import json
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lambdasx.bases import BasisDef, Mode, Vec2, register_basis
from lambdasx.measurement import (
    ArityError, NotAVectorValue, VectorForm, branches, measure, outcome_set, to_basis, to_term,
)
from lambdasx.parser import parse_term as T
from lambdasx.syntax import ERR, Ket, Scale, Zero, plus, tensor

ORACLES = Path(__file__).parent / "oracles"
CASES = json.loads((ORACLES / "measurement_cases.json").read_text())
EXAMPLE = json.loads((ORACLES / "example_measurement.json").read_text())
S2 = 2 ** -0.5


def agrees(outs, want, tol=1e-9):
    if sorted(o.k for o in outs) != sorted(want):
        return False
    for o in outs:
        p, res = want[o.k]
        if abs(o.probability - p) > tol:
            return False
        ref = VectorForm({s: complex(*a) for s, a in res.items()}, o.residual.arity, o.residual.basis)
        if not o.residual.close_to(ref, tol):
            return False
    return True


def test_to_basis_examples():
    assert to_basis(T("|+>")).close_to(VectorForm({"0": S2, "1": S2}, 1))
    assert to_basis(T("|0>")) == VectorForm({"0": 1}, 1)
    a, b = 0.6, 0.8
    got = to_basis(T(f"{a} . |0+10> + {b} . |10-0>"))
    want = {"0010": a * S2, "0110": a * S2, "1000": b * S2, "1010": -b * S2}
    assert got.close_to(VectorForm(want, 4))


def test_to_basis_rejects_non_kets():
    with pytest.raises(NotAVectorValue):
        to_basis(T(r"\x:B. x"))


def test_outcome_set_examples():
    outs = outcome_set(T("isqrt2 . |00> + isqrt2 . |11>"), 1)
    assert [(o.k, o.probability) for o in outs] == [("0", pytest.approx(0.5)), ("1", pytest.approx(0.5))]
    assert [to_term(o.residual) for o in outs] == [Ket("0"), Ket("1")]
    (o,) = outcome_set(T("|+> (x) |0>"), 1, "X")
    assert o.k == "0" and o.probability == pytest.approx(1)
    assert to_basis(to_term(o.residual)).close_to(VectorForm({"0": 1}, 1))
    assert [o.probability for o in outcome_set(T("|+>"), 1)] == [pytest.approx(0.5)] * 2


def test_measure_examples():
    assert measure(Zero(), 1, "B", random.Random(0)) == (ERR, 1.0)
    assert measure(T("|1> (x) |0>"), 1, "B", random.Random(0)) == (tensor(Ket("1"), Ket("0")), 1.0)
    assert branches(T("err"), 1) == [(1.0, ERR)]
    with pytest.raises(ArityError):
        outcome_set(T("|0>"), 2)


def test_example_follows_formulas():
    a, b = EXAMPLE["alpha"], EXAMPLE["beta"]
    outs = outcome_set(T(f"{a} . |0+10> + {b} . |10-0>"), 2)
    assert agrees(outs, EXAMPLE["first"])
    (o,) = [o for o in outs if o.k == "10"]
    assert o.probability == pytest.approx(b**2 / (a**2 + b**2), abs=1e-12)
    assert o.residual.close_to(VectorForm({"00": S2, "10": -S2}, 2))


def test_example_terms_are_equivalent():
    a, b = EXAMPLE["alpha"], EXAMPLE["beta"]
    first = outcome_set(T(f"{a} . |0+10> + {b} . |10-0>"), 2)
    second = outcome_set(T(f"{a} . isqrt2 . |0010> + {a} . isqrt2 . |0110> + {b} . isqrt2 . |1000> + -{b} . isqrt2 . |1010>"), 2)
    assert agrees(second, EXAMPLE["second"])
    assert [(o.k, round(o.probability, 12)) for o in first] == [(o.k, round(o.probability, 12)) for o in second]
    assert all(x.residual.close_to(y.residual) for x, y in zip(first, second))


def test_frozen_oracle_cases():
    bad = [c["term"] for c in CASES if not agrees(outcome_set(T(c["term"]), c["m"], c["basis"]), c["outcomes"])]
    assert not bad


def test_frozen_probabilities_sum_to_one():
    for c in CASES:
        total = sum(o.probability for o in outcome_set(T(c["term"]), c["m"], c["basis"]))
        assert abs(total - 1) < 1e-9


words = st.text("01+-", min_size=1, max_size=3)
amps = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False).filter(lambda z: abs(z) > 0.05)


@st.composite
def vector_terms(draw):
    n = draw(st.integers(1, 3))
    k = draw(st.integers(1, 4))
    parts = [Scale(draw(amps), tensor(*(Ket(c) for c in draw(st.text("01+-", min_size=n, max_size=n)))))
             for _ in range(k)]
    t = plus(*parts)
    if to_basis(t).norm2() < 1e-6:
        t = plus(t, tensor(*(Ket("0") for _ in range(n))))
    return t, n


def _dense(v: VectorForm) -> np.ndarray:
    psi = np.zeros(2 ** v.arity, dtype=complex)
    for bits, a in v.entries.items():
        psi[int(bits, 2)] = a
    return psi


@settings(max_examples=150, deadline=None)
@given(vector_terms(), st.data())
def test_probabilities_match_dense_model(tn, data):
    t, n = tn
    m = data.draw(st.integers(1, n))
    psi = _dense(to_basis(t))
    grid = psi.reshape(2 ** m, -1)
    z = np.vdot(psi, psi).real
    for o in outcome_set(t, m):
        row = grid[int(o.k, 2)]
        assert abs(o.probability - np.vdot(row, row).real / z) < 1e-9


@settings(max_examples=150, deadline=None)
@given(vector_terms(), st.floats(0, 2 * cmath.pi), st.floats(0.1, 5), st.data())
def test_phase_and_scale_invariance(tn, theta, c, data):
    t, n = tn
    m = data.draw(st.integers(1, n))
    base = [(o.k, o.probability) for o in outcome_set(t, m)]
    for s in (cmath.exp(1j * theta), c):
        other = [(o.k, o.probability) for o in outcome_set(Scale(s, t), m)]
        assert [k for k, _ in other] == [k for k, _ in base]
        assert all(abs(p - q) < 1e-9 for (_, p), (_, q) in zip(other, base))


@settings(max_examples=150, deadline=None)
@given(vector_terms(), st.sampled_from(["B", "X"]), st.data())
def test_residual_norm_and_total(tn, basis, data):
    t, n = tn
    m = data.draw(st.integers(1, n))
    outs = outcome_set(t, m, basis)
    assert abs(sum(o.probability for o in outs) - 1) < 1e-9
    for o in outs:
        assert abs(o.residual.norm2() - 1) < 1e-9


@settings(max_examples=150, deadline=None)
@given(st.dictionaries(st.text("01", min_size=2, max_size=2), amps, min_size=1),
       st.sampled_from(["B", "X", "B1"]))
def test_basis_round_trip(entries, basis):
    register_basis(BasisDef("B1", Vec2(0.6, 0.8), Vec2(0.8, -0.6)), Mode.STRICT)
    v = VectorForm(entries, 2, basis)
    assert to_basis(to_term(v), basis).close_to(v)
