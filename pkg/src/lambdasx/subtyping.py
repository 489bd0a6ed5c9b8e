"""Subtyping: span normalization plus a structural decision procedure.

`subtype` is the algorithm used everywhere else; `declarative_search`
replays the one-step rules with explicit transitivity and serves as an
independent oracle.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .bases import registry
from .syntax import (
    Arrow, Atom, Bot, Prod, QGen, Span, Type, atoms_of, factors, is_qubit_type, prod,
    product_count, type_size,
)


@dataclass(frozen=True)
class SubtypeVerdict:
    holds: bool
    witness: tuple = field(default=())

    def __bool__(self) -> bool:
        return self.holds


def min_s(a: Type) -> Type:
    """Collapse nested spans; the result is equivalent to the input."""
    match a:
        case Span(inner):
            inner = min_s(inner)
            return inner if isinstance(inner, Span) else Span(inner)
        case Prod(fs):
            return prod(*(min_s(f) for f in fs))
        case Arrow(dom, cod):
            return Arrow(min_s(dom), min_s(cod))
    return a


def strip_span(a: Type) -> Type:
    return a.inner if isinstance(a, Span) else a


def leaf_count(a: Type) -> int:
    match a:
        case Prod(fs):
            return sum(leaf_count(f) for f in fs)
        case Span(inner):
            return leaf_count(inner)
        case Arrow(dom, cod):
            return leaf_count(dom) + leaf_count(cod)
    return 1


def _is_leaf(a: Type) -> bool:
    return isinstance(a, (Atom, QGen, Bot))


class _Decider:
    def __init__(self):
        self.reg = registry()
        self.trace: list = []

    def note(self, rule: str) -> bool:
        self.trace.append(rule)
        return True

    def sub(self, a: Type, b: Type) -> bool:
        if isinstance(a, Bot):
            return self.note("bot")
        match a, b:
            case Span(a1), Span(b1):
                return self.below_span(a1, b1) and self.note("S-cong")
            case _, Span(b1):
                return self.below_span(a, b1)
            case Span(), _:
                return False
        return self.plain(a, b)

    def leaf_below(self, x: Type, y: Type) -> bool:
        match x, y:
            case Bot(), _:
                return True
            case _ if x == y:
                return self.note("refl")
            case QGen(), Atom():
                return self.reg.qgen_subtype(x, y) and self.note("qgen")
        return False

    def plain(self, x: Type, y: Type) -> bool:
        """x below y, both without an outer span."""
        if _is_leaf(x) or _is_leaf(y):
            return self.leaf_below(x, y)
        match x, y:
            case Arrow(d1, c1), Arrow(d2, c2):
                return self.sub(d2, d1) and self.sub(c1, c2) and self.note("arrow")
            case Prod(xs), Prod(ys):
                groups = self.group(xs, ys)
                if groups is None:
                    return False
                return all(self.sub(prod(*g), yj) for g, yj in zip(groups, ys)) and self.note("prod")
        return False

    @staticmethod
    def group(xs: tuple, ys: tuple):
        """Split xs into consecutive blocks whose product counts match ys."""
        out, i = [], 0
        for y in ys:
            want = product_count(y)
            if i >= len(xs):
                return None
            block, have = [xs[i]], product_count(xs[i])
            i += 1
            while have < want and i < len(xs):
                have += 1 + product_count(xs[i])
                block.append(xs[i])
                i += 1
            if have != want:
                return None
            out.append(block)
        return out if i == len(xs) else None

    def below_span(self, x: Type, y: Type) -> bool:
        """x below S(y), where neither x nor y has an outer span."""
        if isinstance(x, Bot):
            return True
        if self.plain(x, y):
            return self.note("S-intro")
        leaves = factors(x)
        if all(_is_leaf(f) for f in leaves):
            rest = self.absorb(list(leaves), y)
            return rest == [] and self.note("atomic")
        return False

    def absorb(self, leaves: list, y: Type):
        """Consume leaves matching the atom skeleton of y; None on mismatch."""
        match y:
            case Atom():
                if not leaves:
                    return None
                x, rest = leaves[0], leaves[1:]
                match x:
                    case Atom() | Bot():
                        return rest
                    case QGen():
                        return rest if self.reg.qgen_in_some_basis(x) else None
                return None
            case QGen():
                if leaves and leaves[0] in (y, Bot()):
                    return leaves[1:]
                return None
            case Span(inner):
                return self.absorb(leaves, inner)
            case Prod(fs):
                for f in fs:
                    leaves = self.absorb(leaves, f)
                    if leaves is None:
                        return None
                return leaves
        return None


def subtype(a: Type, b: Type) -> SubtypeVerdict:
    d = _Decider()
    holds = d.sub(min_s(a), min_s(b))
    return SubtypeVerdict(holds, tuple(d.trace) if holds else ())


def is_subtype(a: Type, b: Type) -> bool:
    return _Decider().sub(min_s(a), min_s(b))


def type_equiv(a: Type, b: Type) -> bool:
    return is_subtype(a, b) and is_subtype(b, a)


def _replace_atoms(t: Type, seq: list) -> Type:
    it = iter(seq)

    def go(t: Type) -> Type:
        match t:
            case Atom():
                return next(it)
            case Prod(fs):
                return prod(*(go(f) for f in fs))
            case Span(inner):
                return Span(go(inner))
            case Arrow(dom, cod):
                return Arrow(go(dom), go(cod))
        return t

    return go(t)


def similar(g1: Type, g2: Type) -> bool:
    """Some relabelling of the atoms of g1 is equivalent to g2."""
    n = len(atoms_of(g1))
    if n != len(atoms_of(g2)):
        return False
    if type_equiv(_replace_atoms(g1, atoms_of(g2)), g2):
        return True
    pool = sorted(set(atoms_of(g1)) | set(atoms_of(g2)) | set(registry().atoms()), key=lambda a: a.name)
    if len(pool) ** n > 4096:
        return False
    return any(type_equiv(_replace_atoms(g1, list(seq)), g2) for seq in itertools.product(pool, repeat=n))


def lub(a: Type, b: Type, spanned: bool = False) -> Type | None:
    """A minimal common supertype among structural candidates, or None.

    With spanned, bounds are compared after wrapping them in a span, as a sum does.
    """
    a, b = min_s(a), min_s(b)
    if is_subtype(a, b):
        return b
    if is_subtype(b, a):
        return a
    candidates: list = []
    match a, b:
        case Arrow(d1, c1), Arrow(d2, c2):
            dom = d1 if is_subtype(d1, d2) else d2 if is_subtype(d2, d1) else None
            cod = lub(c1, c2)
            if dom is not None and cod is not None:
                candidates.append(Arrow(dom, cod))
        case Prod(xs), Prod(ys) if len(xs) == len(ys):
            parts = [lub(x, y) for x, y in zip(xs, ys)]
            if None not in parts:
                candidates.append(prod(*parts))
    sa, sb = strip_span(a), strip_span(b)
    candidates += [Span(sa), Span(sb)]
    inner = None if (sa, sb) == (a, b) else lub(sa, sb)
    if inner is not None:
        candidates.append(Span(strip_span(inner)))
    bounds = []
    for c in map(min_s, candidates):
        if c not in bounds and is_subtype(a, c) and is_subtype(b, c):
            bounds.append(c)
    key = (lambda c: min_s(Span(c))) if spanned else (lambda c: c)

    def below(c, d):
        return is_subtype(key(c), key(d))

    # prefer a bound below all the others, else a minimal one, flat products first
    for c in bounds:
        if all(below(c, d) for d in bounds):
            return c
    minimal = [c for c in bounds if not any(below(d, c) and not below(c, d) for d in bounds)]
    minimal.sort(key=lambda c: not all(_is_leaf(f) for f in factors(strip_span(c))))
    return minimal[0] if minimal else None


# ------------------------------------------------------------ declarative oracle


def _atom_words(n: int, atoms: list) -> list:
    return [prod(*w) for w in itertools.product(atoms, repeat=n)]


def _steps(t: Type, pos: bool, atoms: list):
    """One-step rewrites: successors (pos) or predecessors (not pos) of t."""
    if pos:
        yield Span(t)
        if isinstance(t, Span) and isinstance(t.inner, Span):
            yield t.inner
        if isinstance(t, Atom):
            for a in atoms:
                yield Span(a)
    else:
        if isinstance(t, Span):
            yield t.inner
            yield Span(t)
            inner = t.inner
            if all(isinstance(f, Atom) for f in factors(inner)):
                yield from _atom_words(len(factors(inner)), atoms)
    match t:
        case Span(inner):
            for s in _steps(inner, pos, atoms):
                yield Span(s)
        case Arrow(dom, cod):
            for s in _steps(dom, not pos, atoms):
                yield Arrow(s, cod)
            for s in _steps(cod, pos, atoms):
                yield Arrow(dom, s)
        case Prod(fs):
            n = len(fs)
            for i in range(n):
                for s in _steps(fs[i], pos, atoms):
                    yield prod(*fs[:i], s, *fs[i + 1:])
            if pos:
                for i in range(n):
                    for j in range(i + 2, n + 1):
                        block = fs[i:j]
                        yield prod(*fs[:i], Span(prod(*block)), *fs[j:])
                        if all(isinstance(f, Atom) for f in block):
                            for w in _atom_words(j - i, atoms):
                                yield prod(*fs[:i], Span(w), *fs[j:])


def reachable(a: Type, depth: int = 12, max_size: int = 10, atoms=None) -> set:
    """Types derivably above a, within the step and size bounds."""
    atoms = atoms or [Atom("B"), Atom("X")]
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        t, d = frontier.popleft()
        if d == depth:
            continue
        for s in _steps(t, True, atoms):
            if s not in seen and type_size(s) <= max_size:
                seen.add(s)
                frontier.append((s, d + 1))
    return seen


def declarative_search(a: Type, b: Type, depth: int = 12, max_size: int | None = None) -> bool:
    if depth < 1:
        raise ValueError("depth must be positive")
    if a == b:
        return True
    bound = max_size if max_size is not None else max(type_size(a), type_size(b)) + 4
    return b in reachable(a, depth, bound)


def enumerate_types(max_size: int, atoms=None) -> list:
    """All well-formed types up to a node-count size (products kept flat)."""
    atoms = atoms or [Atom("B"), Atom("X")]
    qubit: dict = {1: list(atoms)}
    full: dict = {1: list(atoms)}
    for n in range(2, max_size + 1):
        q: set = set()
        f: set = set()
        for inner in qubit[n - 1]:
            q.add(Span(inner))
        for inner in full[n - 1]:
            if not is_qubit_type(inner):
                f.add(Span(inner))
        for k in range(1, n - 1):
            for left in qubit[k]:
                for right in qubit[n - 1 - k]:
                    q.add(prod(left, right))
                for cod in full[n - 1 - k]:
                    f.add(Arrow(left, cod))
        qubit[n] = sorted(q, key=str)
        full[n] = sorted(q | f, key=str)
    return [t for n in range(1, max_size + 1) for t in full[n]]
