"""Types and terms of the calculus, kept in AC-canonical form.

Sums are n-ary, flattened and sorted by a structural total order; tensors
and products are flat tuples (the list view of a right-nested product).
Scalars are Python complex numbers snapped to a 1e-12 grid so that
structural equality coincides with tolerance-based equality.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

EPS = 1e-12
ISQRT2 = 1 / math.sqrt(2)


def snap(z: complex) -> complex:
    """Round a scalar onto the EPS grid (and drop negative zeros)."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite scalar {z!r}")
    return complex(round(z.real, 12) + 0.0, round(z.imag, 12) + 0.0)


def scalar_eq(a: complex, b: complex, eps: float = EPS) -> bool:
    return abs(a.real - b.real) < eps and abs(a.imag - b.imag) < eps


def is_zero_scalar(a: complex) -> bool:
    return abs(a) < EPS


# ---------------------------------------------------------------- types


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Atom(Type):
    name: str


@dataclass(frozen=True)
class Prod(Type):
    """Flat product; never nested directly inside another Prod."""

    factors: tuple

    def __post_init__(self):
        assert len(self.factors) >= 2
        assert not any(isinstance(f, Prod) for f in self.factors)


@dataclass(frozen=True)
class Span(Type):
    inner: Type


@dataclass(frozen=True)
class Arrow(Type):
    dom: Type
    cod: Type


def _normalize_ket(a0: complex, a1: complex) -> tuple:
    n = math.sqrt(abs(a0) ** 2 + abs(a1) ** 2)
    if n < EPS:
        raise ValueError("generator ket must be nonzero")
    a0, a1 = a0 / n, a1 / n
    lead = a0 if abs(a0) > 1e-9 else a1
    phase = cmath.exp(-1j * cmath.phase(lead))
    return (snap(a0 * phase), snap(a1 * phase))


@dataclass(frozen=True)
class QGen(Type):
    """Generator type for the line spanned by a single-qubit ket.

    The ket is stored normalized with a fixed global phase, so structural
    equality is equality of the spanned subspace.
    """

    ket: tuple

    def __post_init__(self):
        object.__setattr__(self, "ket", _normalize_ket(*self.ket))


@dataclass(frozen=True)
class Bot(Type):
    """Type of the error term during inference; below every type."""


B = Atom("B")
X = Atom("X")


def prod(*factors: Type) -> Type:
    flat: list = []
    for f in factors:
        flat.extend(f.factors if isinstance(f, Prod) else (f,))
    if not flat:
        raise ValueError("empty product")
    return flat[0] if len(flat) == 1 else Prod(tuple(flat))


def factors(t: Type) -> tuple:
    return t.factors if isinstance(t, Prod) else (t,)


def power(a: Type, n: int) -> Type:
    return prod(*([a] * n))


def is_base_type(t: Type) -> bool:
    """Base types: atoms closed under products (duplicable data)."""
    return all(isinstance(f, Atom) for f in factors(t))


def is_qubit_type(t: Type) -> bool:
    match t:
        case Atom() | QGen() | Bot():
            return True
        case Prod(fs):
            return all(is_qubit_type(f) for f in fs)
        case Span(inner):
            return is_qubit_type(inner)
    return False


def is_well_formed(t: Type) -> bool:
    """First-order discipline: arrow domains and product factors are qubit types."""
    match t:
        case Arrow(dom, cod):
            return is_qubit_type(dom) and is_well_formed(cod)
        case Span(inner):
            return is_well_formed(inner)
        case _:
            return is_qubit_type(t)


def type_size(t: Type) -> int:
    match t:
        case Prod(fs):
            return sum(type_size(f) for f in fs) + len(fs) - 1
        case Span(inner):
            return 1 + type_size(inner)
        case Arrow(dom, cod):
            return 1 + type_size(dom) + type_size(cod)
    return 1


def product_count(t: Type) -> int:
    match t:
        case Prod(fs):
            return len(fs) - 1 + sum(product_count(f) for f in fs)
        case Span(inner):
            return product_count(inner)
        case Arrow(dom, cod):
            return product_count(dom) + product_count(cod)
    return 0


def atoms_of(t: Type) -> list:
    """Atomic types from left to right."""
    match t:
        case Atom():
            return [t]
        case Prod(fs):
            return [a for f in fs for a in atoms_of(f)]
        case Span(inner):
            return atoms_of(inner)
        case Arrow(dom, cod):
            return atoms_of(dom) + atoms_of(cod)
    return []


def contains_bot(t: Type) -> bool:
    match t:
        case Bot():
            return True
        case Prod(fs):
            return any(contains_bot(f) for f in fs)
        case Span(inner):
            return contains_bot(inner)
        case Arrow(dom, cod):
            return contains_bot(dom) or contains_bot(cod)
    return False


_KNOWN_KETS = {
    (1 + 0j, 0j): "|0>",
    (0j, 1 + 0j): "|1>",
    (snap(ISQRT2), snap(ISQRT2)): "|+>",
    (snap(ISQRT2), snap(-ISQRT2)): "|->",
}


def show_type(t: Type, level: int = 0) -> str:
    # levels: 0 arrow, 1 product, 2 atomic
    match t:
        case Atom(name):
            return name
        case Bot():
            return "_"
        case QGen(ket):
            named = _KNOWN_KETS.get(ket)
            body = named if named else f"{show_scalar(ket[0])}, {show_scalar(ket[1])}"
            return f"Q[{body}]"
        case Span(inner):
            return f"S({show_type(inner)})"
        case Prod(fs):
            s = " * ".join(show_type(f, 2) for f in fs)
            return f"({s})" if level > 1 else s
        case Arrow(dom, cod):
            s = f"{show_type(dom, 1)} => {show_type(cod, 0)}"
            return f"({s})" if level > 0 else s
    raise TypeError(t)


# ---------------------------------------------------------------- terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Lam(Term):
    var: str
    annot: Type
    body: Term


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class Ket(Term):
    """A basis constant: 0, 1, +, -, or upN / dnN for a declared basis BN."""

    label: str


@dataclass(frozen=True)
class If(Term):
    """The conditional constant over a basis; applied to its condition."""

    basis: str
    then: Term
    other: Term


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class Err(Term):
    pass


@dataclass(frozen=True)
class Sum(Term):
    children: tuple

    def __post_init__(self):
        assert len(self.children) >= 2


@dataclass(frozen=True)
class Scale(Term):
    s: complex
    body: Term

    def __post_init__(self):
        object.__setattr__(self, "s", snap(self.s))


@dataclass(frozen=True)
class Meas(Term):
    m: int
    basis: str
    body: Term


@dataclass(frozen=True)
class Tensor(Term):
    items: tuple

    def __post_init__(self):
        assert len(self.items) >= 2


@dataclass(frozen=True)
class Head(Term):
    body: Term


@dataclass(frozen=True)
class Tail(Term):
    body: Term


@dataclass(frozen=True)
class CastL(Term):
    body: Term


@dataclass(frozen=True)
class CastR(Term):
    body: Term


Cast = Union[CastL, CastR]
CASTS = (CastL, CastR)
ZERO = Zero()
ERR = Err()

_TAGS = {cls: i for i, cls in enumerate(
    [Var, Ket, Zero, Err, Lam, If, App, Scale, Sum, Tensor, Meas, Head, Tail, CastL, CastR])}


def _type_key(t: Type) -> tuple:
    match t:
        case Atom(name):
            return (0, name)
        case QGen(ket):
            return (1, ket[0].real, ket[0].imag, ket[1].real, ket[1].imag)
        case Prod(fs):
            return (2, tuple(_type_key(f) for f in fs))
        case Span(inner):
            return (3, _type_key(inner))
        case Arrow(dom, cod):
            return (4, _type_key(dom), _type_key(cod))
    return (5,)


def sort_key(t: Term) -> tuple:
    """Deterministic structural total order used for canonical sums."""
    tag = _TAGS[type(t)]
    match t:
        case Var(name):
            return (tag, name)
        case Ket(label):
            return (tag, label)
        case Zero() | Err():
            return (tag,)
        case Lam(var, annot, body):
            return (tag, var, _type_key(annot), sort_key(body))
        case If(basis, then, other):
            return (tag, basis, sort_key(then), sort_key(other))
        case App(fun, arg):
            return (tag, sort_key(fun), sort_key(arg))
        case Scale(s, body):
            return (tag, sort_key(body), s.real, s.imag)
        case Sum(children) | Tensor(children):
            return (tag, tuple(sort_key(c) for c in children))
        case Meas(m, basis, body):
            return (tag, m, basis, sort_key(body))
        case Head(body) | Tail(body) | CastL(body) | CastR(body):
            return (tag, sort_key(body))
    raise TypeError(t)


def plus(*terms: Term) -> Term:
    """Build a flattened, sorted sum (no merging of equal summands)."""
    flat: list = []
    for t in terms:
        flat.extend(t.children if isinstance(t, Sum) else (t,))
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(sorted(flat, key=sort_key)))


def tensor(*terms: Term) -> Term:
    flat: list = []
    for t in terms:
        flat.extend(t.items if isinstance(t, Tensor) else (t,))
    return flat[0] if len(flat) == 1 else Tensor(tuple(flat))


def scale(s: complex, body: Term) -> Scale:
    return Scale(s, body)


def ite(cond: Term, then: Term, other: Term, basis: str = "B") -> App:
    """`ite c t r` is shorthand for `(ite{} t r) c`."""
    return App(If(basis, then, other), cond)


def kets(word: str) -> Term:
    """`kets('0+1')` is |0> (x) |+> (x) |1>."""
    return tensor(*(Ket(c) for c in word))


def rebuild(t: Term, f) -> Term:
    """Apply f to every immediate subterm and rebuild through smart constructors."""
    match t:
        case Var() | Ket() | Zero() | Err():
            return t
        case Lam(var, annot, body):
            return Lam(var, annot, f(body))
        case If(basis, then, other):
            return If(basis, f(then), f(other))
        case App(fun, arg):
            return App(f(fun), f(arg))
        case Scale(s, body):
            return Scale(s, f(body))
        case Sum(children):
            return plus(*(f(c) for c in children))
        case Tensor(items):
            return tensor(*(f(c) for c in items))
        case Meas(m, basis, body):
            return Meas(m, basis, f(body))
        case Head(body):
            return Head(f(body))
        case Tail(body):
            return Tail(f(body))
        case CastL(body):
            return CastL(f(body))
        case CastR(body):
            return CastR(f(body))
    raise TypeError(t)


def children(t: Term) -> tuple:
    match t:
        case Lam(_, _, body) | Scale(_, body) | Meas(_, _, body):
            return (body,)
        case Head(body) | Tail(body) | CastL(body) | CastR(body):
            return (body,)
        case If(_, then, other):
            return (then, other)
        case App(fun, arg):
            return (fun, arg)
        case Sum(cs) | Tensor(cs):
            return cs
    return ()


def canonicalize(t: Term) -> Term:
    return rebuild(t, canonicalize)


def free_vars(t: Term) -> frozenset:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(var, _, body):
            return free_vars(body) - {var}
    out: frozenset = frozenset()
    for c in children(t):
        out |= free_vars(c)
    return out


def term_size(t: Term) -> int:
    return 1 + sum(term_size(c) for c in children(t))


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def subst(t: Term, x: str, r: Term) -> Term:
    """Capture-avoiding substitution t<r/x>."""
    fv_r = free_vars(r)

    def go(t: Term) -> Term:
        match t:
            case Var(name):
                return r if name == x else t
            case Lam(var, annot, body):
                if var == x or x not in free_vars(body):
                    return t
                if var in fv_r:
                    new = fresh_name(var, fv_r | free_vars(body) | {x})
                    body = subst(body, var, Var(new))
                    var = new
                return Lam(var, annot, go(body))
        return rebuild(t, go)

    return go(t)


def is_base_term(t: Term) -> bool:
    match t:
        case Ket():
            return True
        case Tensor(items):
            return all(isinstance(i, Ket) for i in items)
    return False


def is_value(t: Term) -> bool:
    """Values; the conditional constants count as values (they are functions)."""
    match t:
        case Var() | Lam() | Ket() | Zero() | If():
            return True
        case Sum(cs) | Tensor(cs):
            return all(is_value(c) for c in cs)
        case Scale(_, body):
            return is_value(body)
    return False


# ---------------------------------------------------------------- printing


def show_scalar(s: complex) -> str:
    s = snap(s)
    if scalar_eq(s, ISQRT2):
        return "isqrt2"
    if scalar_eq(s, -ISQRT2):
        return "-isqrt2"

    def num(x: float) -> str:
        r = repr(float(x))
        return r[:-2] if r.endswith(".0") else r

    if s.imag == 0:
        return num(s.real)
    if s.real == 0:
        return f"{num(s.imag)}i"
    sign = "+" if s.imag >= 0 else "-"
    return f"({num(s.real)}{sign}{num(abs(s.imag))}i)"


def _if_keyword(basis: str) -> str:
    if basis == "B":
        return "if"
    if basis == "X":
        return "ifx"
    return "if" + basis[1:]


def _meas_keyword(m: int, basis: str) -> str:
    if basis == "B":
        return f"pi {m}"
    if basis == "X":
        return f"pix {m}"
    return f"pi[{basis[1:]}] {m}"


# precedence levels: 0 open (lambda, if, sum), 1 scale, 2 tensor, 3 application, 4 atom
def show(t: Term, level: int = 0) -> str:
    def paren(s: str, own: int) -> str:
        return f"({s})" if level > own else s

    match t:
        case Var(name):
            return name
        case Ket(label):
            return f"|{label}>"
        case Zero():
            return "zero"
        case Err():
            return "err"
        case If(basis, then, other):
            kw = "ite" if basis == "B" else "itex" if basis == "X" else "ite" + basis[1:]
            return f"{kw}({show(then)}, {show(other)})"
        case Lam(var, annot, body):
            return paren(f"\\{var}:{show_type(annot)}. {show(body)}", 0)
        case App(If(basis, then, other), cond):
            s = f"{_if_keyword(basis)} {show(cond)} then {show(then)} else {show(other)}"
            return paren(s, 0)
        case App(fun, arg):
            return paren(f"{show(fun, 3)} {show(arg, 4)}", 3)
        case Sum(cs):
            return paren(" + ".join(show(c, 1) for c in cs), 0)
        case Scale(s, body):
            return paren(f"{show_scalar(s)} . {show(body, 1)}", 1)
        case Tensor(items):
            return paren(" (x) ".join(show(i, 3) for i in items), 2)
        case Meas(m, basis, body):
            return paren(f"{_meas_keyword(m, basis)} {show(body, 4)}", 3)
        case Head(body):
            return paren(f"head {show(body, 4)}", 3)
        case Tail(body):
            return paren(f"tail {show(body, 4)}", 3)
        case CastL(body):
            return paren(f"castl {show(body, 4)}", 3)
        case CastR(body):
            return paren(f"castr {show(body, 4)}", 3)
    raise TypeError(t)
