"""Integer termination measure on terms, and its check along traces."""

from __future__ import annotations

from dataclasses import dataclass, field

from .evaluator import BETA_RULES, Trace
from .syntax import (
    App, CastL, CastR, Err, Head, If, Ket, Lam, Meas, Scale, Sum, Tail, Tensor, Term, Var,
    Zero, canonicalize, plus, show,
)

CASTS = (CastL, CastR)


def _cast_body(t: Term) -> Term | None:
    """Body of a summand shaped like a cast or a scaled cast."""
    match t:
        case CastL(body) | CastR(body):
            return body
        case Scale(_, CastL(body) | CastR(body)):
            return body
    return None


def measure_size(t: Term) -> int:
    match t:
        case Var() | Zero() | Err() | Ket():
            return 0
        case Lam(_, _, body):
            return measure_size(body)
        case App(fun, arg):
            return (3 * measure_size(fun) + 2) * (3 * measure_size(arg) + 2)
        case Tensor(items):
            return sum(measure_size(i) for i in items) + len(items) - 1
        case CastL(body) | CastR(body):
            return measure_size(body) + 5
        case Scale(_, CastL() | CastR() as c):
            return measure_size(c)
        case Scale(_, body):
            return 2 * measure_size(body) + 1
        case Sum(cs):
            # flatten and sort, so hand-built sums get the same value as canonical ones
            return _sum_size(plus(*cs).children)
        case Head(body) | Tail(body):
            return measure_size(body) + 1
        case If(_, then, other):
            return measure_size(then) + measure_size(other)
        case Meas(m, _, body):
            return measure_size(body) + m
    raise TypeError(t)


def _sum_size(cs: tuple) -> int:
    # left fold over the canonical order; only the first pair can be two casts
    first, second = cs[0], cs[1]
    b1, b2 = _cast_body(first), _cast_body(second)
    if b1 is not None and b2 is not None:
        acc = max(measure_size(b1), measure_size(b2))
    else:
        acc = measure_size(first) + measure_size(second) + 2
    for c in cs[2:]:
        acc = acc + measure_size(c) + 2
    return acc


@dataclass(frozen=True)
class MeasureEntry:
    rule: str
    before: Term
    after: Term
    size_before: int
    size_after: int
    ok: bool

    def __str__(self) -> str:
        tag = "OK" if self.ok else "VIOLATION"
        return f"{self.rule} {show(self.before)} -> {show(self.after)} {tag}"


@dataclass(frozen=True)
class MeasureReport:
    entries: tuple = ()
    violations: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def check_step(rule: str, before: Term, after: Term) -> MeasureEntry:
    sb, sa = measure_size(before), measure_size(after)
    ok = rule in BETA_RULES or sa < sb
    return MeasureEntry(rule, before, after, sb, sa, ok)


def check_trace(trace: Trace) -> MeasureReport:
    entries = []
    violations = []
    for s in trace.steps:
        e = check_step(s.rule, s.before, s.after)
        entries.append(e)
        if not e.ok:
            violations.append(e)
        for t in (s.before, s.after):
            canon = canonicalize(t)
            if measure_size(canon) != measure_size(t):
                violations.append(MeasureEntry("ac", t, canon, measure_size(t), measure_size(canon), False))
    return MeasureReport(tuple(entries), tuple(violations))
