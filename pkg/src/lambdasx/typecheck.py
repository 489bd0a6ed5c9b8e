"""Type inference and checking with base-only sharing of variables.

Inference synthesizes a minimal type bottom-up. Instead of splitting
contexts, each judgment returns how often every variable was used: base
variables may be shared or dropped, all others must be used exactly once.
The two branches of a conditional share their context.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .bases import registry
from .subtyping import is_subtype, lub, min_s, strip_span
from .syntax import (
    Arrow, Atom, Bot, CastL, CastR, Err, Head, If, Ket, Lam, Meas, Prod, QGen, Scale, Span,
    Sum, Tail, Tensor, Term, Type, Var, Zero, App, factors, is_base_type, is_qubit_type,
    is_well_formed, power, prod,
)


class ErrorKind(Enum):
    UnboundVar = "UnboundVar"
    NotAFunction = "NotAFunction"
    ArgMismatch = "ArgMismatch"
    LinearityViolation = "LinearityViolation"
    MeasureArity = "MeasureArity"
    CastShape = "CastShape"
    ProductShape = "ProductShape"


class TypingError(Exception):
    def __init__(self, kind: ErrorKind, location: tuple, detail: str):
        super().__init__(f"{kind.value} at {list(location)}: {detail}")
        self.kind = kind
        self.location = location
        self.detail = detail


class AppRule(Enum):
    ElimPlain = "ElimPlain"
    ElimSpan = "ElimSpan"


@dataclass(frozen=True)
class TypingContext:
    bindings: tuple = ()

    def __post_init__(self):
        names = [n for n, _ in self.bindings]
        if len(names) != len(set(names)):
            raise ValueError("duplicate names in context")

    @classmethod
    def of(cls, ctx: "TypingContext | Mapping | Iterable | None") -> "TypingContext":
        if ctx is None:
            return cls()
        if isinstance(ctx, TypingContext):
            return ctx
        if isinstance(ctx, Mapping):
            return cls(tuple(ctx.items()))
        return cls(tuple(ctx))

    def lookup(self, name: str) -> Type | None:
        for n, t in self.bindings:
            if n == name:
                return t
        return None

    def extend(self, name: str, ty: Type) -> "TypingContext":
        return TypingContext(tuple((n, t) for n, t in self.bindings if n != name) + ((name, ty),))


@dataclass(frozen=True)
class TypedTerm:
    term: Term
    type: Type
    usage: Mapping = field(default_factory=dict)


def _err(kind: ErrorKind, path: tuple, detail: str):
    raise TypingError(kind, path, detail)


def ket_type(k: Ket) -> Atom:
    return Atom(registry().ket_info(k.label)[0])


def fits(term: Term, ty: Type, target: Type) -> bool:
    """ty is below target, or term is a ket constant spanning a generator in target."""
    if is_subtype(ty, target):
        return True
    if isinstance(term, Ket):
        vec = registry().ket_info(term.label)[1]
        return is_subtype(QGen((vec.a0, vec.a1)), target)
    return False


def choose_app_rule(fun_type: Type, arg_type: Type, arg: Term | None = None):
    """Pick the elimination rule; returns (rule, result type)."""
    f = min_s(fun_type)

    def ok(target: Type) -> bool:
        return fits(arg, arg_type, target) if arg is not None else is_subtype(arg_type, target)

    match f:
        case Bot():
            return AppRule.ElimPlain, Bot()
        case Span(Bot()):
            return AppRule.ElimSpan, Span(Bot())
        case Arrow(dom, cod):
            if ok(dom):
                return AppRule.ElimPlain, cod
            if ok(Span(dom)):
                return AppRule.ElimSpan, min_s(Span(cod))
            _err(ErrorKind.ArgMismatch, (), f"argument {arg_type} does not fit {dom}")
        case Span(Arrow(dom, cod)):
            if ok(Span(dom)):
                return AppRule.ElimSpan, min_s(Span(cod))
            _err(ErrorKind.ArgMismatch, (), f"argument {arg_type} does not fit S({dom})")
    _err(ErrorKind.NotAFunction, (), f"{fun_type} is not a function type")


def _basis_atom(leaf: Type) -> Type | None:
    """The atomic type standing for one measured leaf."""
    match leaf:
        case Atom() | Bot():
            return leaf
        case QGen():
            for a in registry().atoms():
                if registry().qgen_subtype(leaf, a):
                    return a
    return None


def _atomic_leaves(ty: Type) -> list | None:
    out = []
    for f in factors(ty):
        a = _basis_atom(f)
        if a is None:
            return None
        out.append(a)
    return out


def _add(u1: Counter, u2: Counter) -> Counter:
    out = Counter(u1)
    out.update(u2)
    return out


class _Checker:
    def __init__(self, ctx: TypingContext):
        self.ctx = ctx

    def is_linear(self, env: TypingContext, name: str) -> bool:
        ty = env.lookup(name)
        return ty is not None and not is_base_type(ty)

    def infer(self, t: Term, env: TypingContext, path: tuple) -> tuple:
        match t:
            case Var(name):
                ty = env.lookup(name)
                if ty is None:
                    _err(ErrorKind.UnboundVar, path, f"unbound variable {name}")
                return ty, Counter({name: 1})
            case Ket():
                try:
                    return ket_type(t), Counter()
                except Exception as e:
                    _err(ErrorKind.UnboundVar, path, str(e))
            case Zero():
                return Span(Bot()), Counter()
            case Err():
                return Bot(), Counter()
            case Lam(var, annot, body):
                if not is_qubit_type(annot) or not is_well_formed(annot):
                    _err(ErrorKind.ArgMismatch, path, f"binder type {annot} is not a qubit type")
                ty, use = self.infer(body, env.extend(var, annot), path + (0,))
                n = use.pop(var, 0)
                if not is_base_type(annot) and n != 1:
                    _err(ErrorKind.LinearityViolation, path, f"{var} : {annot} used {n} times")
                return Arrow(annot, ty), use
            case App(fun, arg):
                ft, u1 = self.infer(fun, env, path + (0,))
                at, u2 = self.infer(arg, env, path + (1,))
                try:
                    _, res = choose_app_rule(ft, at, arg)
                except TypingError as e:
                    _err(e.kind, path, e.detail)
                return res, self.merge(_add(u1, u2), env, path)
            case If(basis, then, other):
                t1, u1 = self.infer(then, env, path + (0,))
                t2, u2 = self.infer(other, env, path + (1,))
                lin1 = {n for n in u1 if self.is_linear(env, n)}
                lin2 = {n for n in u2 if self.is_linear(env, n)}
                if lin1 != lin2 or any(u1[n] != u2[n] for n in lin1):
                    _err(ErrorKind.LinearityViolation, path, "branches use different linear variables")
                c = lub(t1, t2)
                if c is None:
                    _err(ErrorKind.ArgMismatch, path, f"branch types {t1} and {t2} have no common supertype")
                return Arrow(Atom(basis), c), u1 | u2
            case Sum(cs):
                tys, use = [], Counter()
                for i, c in enumerate(cs):
                    ty, u = self.infer(c, env, path + (i,))
                    tys.append(ty)
                    use = _add(use, u)
                # err sits below every summand type
                tys = [ty for ty in tys if not isinstance(ty, Bot)] or [Bot()]
                acc = tys[0]
                for ty in tys[1:]:
                    acc = lub(acc, ty, spanned=True)
                    if acc is None:
                        _err(ErrorKind.ArgMismatch, path, "summands have no common type")
                return min_s(Span(acc)), self.merge(use, env, path)
            case Scale(_, body):
                ty, use = self.infer(body, env, path + (0,))
                return min_s(Span(ty)), use
            case Tensor(items):
                tys, use = [], Counter()
                for i, c in enumerate(items):
                    ty, u = self.infer(c, env, path + (i,))
                    if not is_qubit_type(ty):
                        _err(ErrorKind.ProductShape, path + (i,), f"tensor item of type {ty}")
                    tys.append(ty)
                    use = _add(use, u)
                # an erroneous factor makes the whole tensor erroneous
                if any(isinstance(ty, Bot) for ty in tys):
                    return Bot(), self.merge(use, env, path)
                return prod(*tys), self.merge(use, env, path)
            case Meas(m, basis, body):
                ty, use = self.infer(body, env, path + (0,))
                return self.meas_type(m, basis, ty, path), use
            case Head(body) | Tail(body):
                ty, use = self.infer(body, env, path + (0,))
                return self.proj_type(isinstance(t, Head), ty, path), use
            case CastL(body) | CastR(body):
                ty, use = self.infer(body, env, path + (0,))
                return self.cast_type(isinstance(t, CastL), ty, path), use
        raise AssertionError(t)

    def merge(self, use: Counter, env: TypingContext, path: tuple) -> Counter:
        for n, k in use.items():
            if k > 1 and self.is_linear(env, n):
                _err(ErrorKind.LinearityViolation, path, f"{n} : {env.lookup(n)} used {k} times")
        return use

    def meas_type(self, m: int, basis: str, ty: Type, path: tuple) -> Type:
        registry().get(basis)
        inner = strip_span(min_s(ty))
        if isinstance(inner, Bot):
            # measuring the null vector always fails
            return Bot()
        leaves = _atomic_leaves(inner)
        if leaves is None or isinstance(inner, Arrow):
            _err(ErrorKind.ProductShape, path, f"cannot measure a term of type {ty}")
        n = len(leaves)
        if not 0 < m <= n:
            _err(ErrorKind.MeasureArity, path, f"pi {m} on {n} qubits")
        measured = power(Atom(basis), m)
        if m == n:
            return measured
        rest = [Atom("B") if isinstance(a, Bot) else a for a in leaves[m:]]
        return prod(measured, Span(prod(*rest)))

    def proj_type(self, is_head: bool, ty: Type, path: tuple) -> Type:
        t = min_s(ty)
        if isinstance(t, Bot):
            return Bot()
        leaves = _atomic_leaves(t) if isinstance(t, Prod) else None
        if leaves is None:
            _err(ErrorKind.ProductShape, path, f"head/tail need a base product, got {ty}")
        return leaves[0] if is_head else prod(*leaves[1:])

    def cast_type(self, left: bool, ty: Type, path: tuple) -> Type:
        t = min_s(ty)
        match t:
            case Bot() | Span(Bot()):
                # the dist rules may pull scalars out before the error surfaces
                return Span(Bot())
            case Atom() | QGen():
                if is_subtype(t, Atom("B")):
                    return Atom("B")
                if _basis_atom(t) is not None:
                    return Span(Atom("B"))
                _err(ErrorKind.CastShape, path, f"cannot cast {ty}")
        inner = strip_span(t)
        if not isinstance(inner, Prod):
            _err(ErrorKind.CastShape, path, f"cast needs a product under a span, got {ty}")
        fs = inner.factors
        if left:
            rest, pivot = fs[:-1], fs[-1]
            return min_s(Span(prod(*rest, strip_span(pivot))))
        pivot, rest = fs[0], fs[1:]
        return min_s(Span(prod(strip_span(pivot), *rest)))


def infer(ctx, t: Term) -> TypedTerm:
    ctx = TypingContext.of(ctx)
    ty, use = _Checker(ctx).infer(t, ctx, ())
    for name, ann in ctx.bindings:
        if not is_base_type(ann) and use.get(name, 0) != 1:
            _err(ErrorKind.LinearityViolation, (), f"{name} : {ann} used {use.get(name, 0)} times")
    return TypedTerm(t, ty, dict(use))


def check(ctx, t: Term, a: Type) -> TypedTerm:
    tt = infer(ctx, t)
    if not fits(t, tt.type, a):
        _err(ErrorKind.ArgMismatch, (), f"{tt.type} is not a subtype of {a}")
    return tt


def type_of(t: Term, ctx=None) -> Type | None:
    """Inferred type or None when the term does not typecheck."""
    try:
        return infer(ctx, t).type
    except TypingError:
        return None


def has_type(t: Term, a: Type, ctx=None) -> bool:
    try:
        check(ctx, t, a)
        return True
    except TypingError:
        return False
