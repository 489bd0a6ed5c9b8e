"""Registry of single-qubit measurement bases.

The computational basis B and the Hadamard basis X are built in. Further
bases B1, B2, ... are declared with their two kets over |0>, |1>.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from enum import Enum

from .syntax import EPS, ISQRT2, Atom, QGen, Ket, Scale, Term, plus, snap

TOL = 1e-9


class BasisError(Exception):
    pass


class NotUnitary(BasisError):
    pass


class OverlapViolation(BasisError):
    pass


class UnknownBasis(BasisError):
    pass


@dataclass(frozen=True)
class Vec2:
    a0: complex
    a1: complex

    def __post_init__(self):
        for a in (self.a0, self.a1):
            if not (math.isfinite(complex(a).real) and math.isfinite(complex(a).imag)):
                raise ValueError("non-finite amplitude")
        object.__setattr__(self, "a0", complex(self.a0))
        object.__setattr__(self, "a1", complex(self.a1))

    def norm2(self) -> float:
        return abs(self.a0) ** 2 + abs(self.a1) ** 2

    def inner(self, other: "Vec2") -> complex:
        return self.a0.conjugate() * other.a0 + self.a1.conjugate() * other.a1

    def parallel(self, other: "Vec2", tol: float = TOL) -> bool:
        """Equal up to a nonzero scalar multiple."""
        n = math.sqrt(self.norm2() * other.norm2())
        return n > 0 and abs(abs(self.inner(other)) - n) < tol * max(1.0, n)


class Mode(Enum):
    STRICT = "strict"
    OVERLAPPING = "overlap"


@dataclass(frozen=True)
class BasisDef:
    id: str
    up: Vec2
    down: Vec2
    up_label: str = ""
    down_label: str = ""

    def __post_init__(self):
        if not self.up_label:
            n = self.id[1:]
            object.__setattr__(self, "up_label", f"up{n}")
            object.__setattr__(self, "down_label", f"dn{n}")

    @property
    def kets(self) -> tuple:
        return (self.up, self.down)


COMP = BasisDef("B", Vec2(0, 1), Vec2(1, 0), "1", "0")
HAD = BasisDef("X", Vec2(ISQRT2, ISQRT2), Vec2(ISQRT2, -ISQRT2), "+", "-")


@dataclass
class Registry:
    bases: dict = field(default_factory=lambda: {"B": COMP, "X": HAD})

    def get(self, basis_id: str) -> BasisDef:
        try:
            return self.bases[basis_id]
        except KeyError:
            raise UnknownBasis(basis_id) from None

    def register(self, d: BasisDef, mode: Mode = Mode.STRICT) -> str:
        if d.id in ("B", "X"):
            raise BasisError(f"{d.id} is built in")
        if not (d.id.startswith("B") and d.id[1:].isdigit()):
            raise BasisError(f"basis ids look like B1, B2, ...: {d.id!r}")
        up, dn = d.up, d.down
        if abs(up.norm2() - 1) > TOL or abs(dn.norm2() - 1) > TOL or abs(up.inner(dn)) > TOL:
            raise NotUnitary(d.id)
        if mode is Mode.STRICT:
            # X is allowed to coincide with a declared basis
            others = [b for k, b in self.bases.items() if k not in ("X", d.id)]
            for other in others:
                for v in d.kets:
                    if any(v.parallel(w) for w in other.kets):
                        raise OverlapViolation(f"{d.id} shares a ket with {other.id}")
        self.bases[d.id] = d
        return d.id

    def ket_info(self, label: str) -> tuple:
        """(basis id, vector, is the 'then' ket) for a ket label."""
        for b in self.bases.values():
            if label == b.up_label:
                return b.id, b.up, True
            if label == b.down_label:
                return b.id, b.down, False
        raise UnknownBasis(f"|{label}>")

    def bit_labels(self, basis_id: str) -> tuple:
        """Ket labels for bit 0 and bit 1 of a measurement outcome."""
        b = self.get(basis_id)
        if basis_id == "B":
            return ("0", "1")
        return (b.up_label, b.down_label)

    def bit_vectors(self, basis_id: str) -> tuple:
        b = self.get(basis_id)
        return (b.down, b.up) if basis_id == "B" else (b.up, b.down)

    def then_label(self, basis_id: str) -> str:
        return self.get(basis_id).up_label

    def else_label(self, basis_id: str) -> str:
        return self.get(basis_id).down_label

    def atoms(self) -> list:
        return [Atom(k) for k in self.bases]

    def qgen_subtype(self, q: QGen, b: Atom) -> bool:
        if b.name not in self.bases:
            return False
        v = Vec2(*q.ket)
        return any(v.parallel(w) for w in self.get(b.name).kets)

    def qgen_in_some_basis(self, q: QGen) -> bool:
        return any(self.qgen_subtype(q, a) for a in self.atoms())

    def qgen_member(self, q: QGen) -> Ket | None:
        """The registered ket constant spanning q, preferring B."""
        v = Vec2(*q.ket)
        for b in self.bases.values():
            for label, w in ((b.up_label, b.up), (b.down_label, b.down)):
                if v.parallel(w):
                    return Ket(label)
        return None


_current = Registry()


def registry() -> Registry:
    return _current


@contextlib.contextmanager
def scoped_registry(reg: Registry | None = None):
    """Temporarily install a fresh registry (tests, CLI sessions)."""
    global _current
    saved = _current
    _current = reg if reg is not None else Registry()
    try:
        yield _current
    finally:
        _current = saved


def register_basis(d: BasisDef, mode: Mode | str = Mode.STRICT) -> str:
    return _current.register(d, Mode(mode) if isinstance(mode, str) else mode)


def qgen_subtype(q: QGen, b: Atom) -> bool:
    return _current.qgen_subtype(q, b)


def ket_basis(label: str) -> str:
    return _current.ket_info(label)[0]


def ket_vector(label: str) -> Vec2:
    return _current.ket_info(label)[1]


def _amp(a: complex, k: Term) -> Term | None:
    if abs(a) < EPS:
        return None
    return k if abs(a - 1) < EPS else Scale(snap(a), k)


def cast_const(k: Ket) -> Term:
    """Computational-basis expansion of a basis constant."""
    if k.label in ("0", "1"):
        return k
    v = ket_vector(k.label)
    parts = [t for t in (_amp(v.a0, Ket("0")), _amp(v.a1, Ket("1"))) if t is not None]
    return plus(*parts)
