"""Partial measurement of vector values in a product basis."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .bases import registry
from .syntax import (
    EPS, ERR, Err, Ket, Scale, Sum, Tensor, Term, Zero, plus, snap, tensor,
)


class NotAVectorValue(Exception):
    pass


class ArityError(Exception):
    pass


@dataclass(frozen=True)
class VectorForm:
    """Sum of amplitude times product-basis ket, keyed by bitstring."""

    entries: dict = field(default_factory=dict)
    arity: int = 0
    basis: str = "B"

    def __post_init__(self):
        clean = {k: complex(v) for k, v in self.entries.items() if abs(v) >= EPS}
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def norm2(self) -> float:
        return sum(abs(a) ** 2 for a in self.entries.values())

    def amplitude(self, bits: str) -> complex:
        return self.entries.get(bits, 0j)

    def close_to(self, other: "VectorForm", tol: float = 1e-9) -> bool:
        keys = set(self.entries) | set(other.entries)
        return self.arity == other.arity and all(
            abs(self.amplitude(k) - other.amplitude(k)) <= tol for k in keys)


@dataclass(frozen=True)
class MeasurementOutcome:
    k: str
    probability: float
    residual: VectorForm


def _ket_coords(label: str, basis: str) -> tuple:
    """Coordinates of a ket constant in the two-element target basis."""
    vec = registry().ket_info(label)[1]
    e0, e1 = registry().bit_vectors(basis)
    return (e0.inner(vec), e1.inner(vec))


def _expand(t: Term, basis: str) -> tuple:
    """(arity, {bits: amplitude}) of a linear combination of ket tensors."""
    match t:
        case Zero():
            return None, {}
        case Ket(label):
            c0, c1 = _ket_coords(label, basis)
            return 1, {"0": c0, "1": c1}
        case Tensor(items):
            acc = {"": 1 + 0j}
            for it in items:
                if not isinstance(it, Ket):
                    raise NotAVectorValue(f"tensor item {it}")
                c = _ket_coords(it.label, basis)
                acc = {k + b: a * c[int(b)] for k, a in acc.items() for b in "01"}
            return len(items), acc
        case Scale(s, body):
            n, vec = _expand(body, basis)
            return n, {k: s * a for k, a in vec.items()}
        case Sum(children):
            n, acc = None, {}
            for c in children:
                m, vec = _expand(c, basis)
                if m is not None:
                    if n is not None and m != n:
                        raise NotAVectorValue("summands of different arity")
                    n = m
                for k, a in vec.items():
                    acc[k] = acc.get(k, 0j) + a
            return n, acc
    raise NotAVectorValue(str(t))


def is_vector_value(t: Term) -> bool:
    try:
        _expand(t, "B")
        return True
    except (NotAVectorValue, Exception):
        return False


def to_basis(t: Term, basis: str = "B") -> VectorForm:
    n, vec = _expand(t, basis)
    return VectorForm(vec, n or 0, basis)


def to_term(v: VectorForm) -> Term:
    """Linear combination of product kets representing v (0-vector for empty)."""
    labels = registry().bit_labels(v.basis)
    parts = []
    for bits, a in v.entries.items():
        kets = tensor(*(Ket(labels[int(b)]) for b in bits))
        a = snap(a)
        parts.append(kets if abs(a - 1) < EPS else Scale(a, kets))
    if not parts:
        return Zero()
    return plus(*parts)


def outcome_set(t: Term, m: int, basis: str = "B") -> list:
    """Every outcome with positive probability, sorted by bitstring."""
    v = to_basis(t, basis)
    if v.entries and m > v.arity:
        raise ArityError(f"measuring {m} of {v.arity} qubits")
    if m < 1:
        raise ArityError("m must be positive")
    z = v.norm2()
    if z < EPS * EPS:
        return []
    groups: dict = {}
    for bits, a in v.entries.items():
        groups.setdefault(bits[:m], {})[bits[m:]] = a
    out = []
    for k in sorted(groups):
        sub = groups[k]
        ell = sum(abs(a) ** 2 for a in sub.values())
        p = ell / z
        if p < EPS:
            continue
        r = math.sqrt(ell)
        out.append(MeasurementOutcome(k, p, VectorForm({s: a / r for s, a in sub.items()}, v.arity - m, basis)))
    return out


def outcome_term(o: MeasurementOutcome) -> Term:
    """The post-measurement term |k> (x) phi_k, or |k> alone for a full measurement."""
    labels = registry().bit_labels(o.residual.basis)
    head = [Ket(labels[int(b)]) for b in o.k]
    if o.residual.arity == 0:
        return tensor(*head)
    return tensor(*head, to_term(o.residual))


def branches(t: Term, m: int, basis: str = "B") -> list:
    """(probability, term) for each outcome; the error term if nothing survives."""
    if isinstance(t, (Zero, Err)):
        return [(1.0, ERR)]
    outs = outcome_set(t, m, basis)
    if not outs:
        return [(1.0, ERR)]
    return [(o.probability, outcome_term(o)) for o in outs]


def sample_index(probs: list, rng: random.Random) -> int:
    """Inverse-CDF draw over outcomes in their listed order."""
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def measure(t: Term, m: int, basis: str, rng: random.Random) -> tuple:
    bs = branches(t, m, basis)
    i = sample_index([p for p, _ in bs], rng)
    return bs[i][1], bs[i][0]
