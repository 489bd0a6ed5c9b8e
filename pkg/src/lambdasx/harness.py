"""Type-directed random terms and end-to-end checks of the metatheory."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field

from .evaluator import FuelExhausted, _replace, normalize
from .measure import check_trace
from .subtyping import is_subtype, strip_span
from .syntax import (
    B, App, Atom, CastL, CastR, Err, Head, If, Ket, Lam, Meas, Prod, Scale, Span, Sum, Tail,
    Tensor,
    Term, Type, Var, Zero, children, factors, is_base_type, is_value, power, prod,
    plus, show, show_type, subst, tensor,
)
from .typecheck import TypingContext, TypingError, check, infer

SCALARS = (1, -1, 2, 0.5, 0.6, 0.8, 1j, -1j, 2 ** -0.5, -(2 ** -0.5), 0)
KETS = {"B": ("0", "1"), "X": ("+", "-")}
PROPERTIES = ("subject_reduction", "progress", "linear_casting", "measure", "termination",
              "substitution")


@dataclass(frozen=True)
class GenConfig:
    max_depth: int = 5
    max_arity: int = 3
    scalars: tuple = SCALARS
    bases: tuple = ("B", "X")
    seed: int = 0
    err_rate: float = 0.02

    def __post_init__(self):
        if not 0 <= self.max_depth <= 8:
            raise ValueError("max_depth must be in 0..8")
        if not 1 <= self.max_arity <= 4:
            raise ValueError("max_arity must be in 1..4")


class _Gen:
    def __init__(self, cfg: GenConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    # -- types

    def atom(self) -> Atom:
        return Atom(self.rng.choice(self.cfg.bases))

    def base_type(self, width: int | None = None) -> Type:
        n = width or self.rng.randint(1, self.cfg.max_arity)
        return prod(*(self.atom() for _ in range(n)))

    def goal_type(self) -> Type:
        t = self.base_type()
        return Span(t) if self.rng.random() < 0.5 else t

    # -- closed terms of a goal type

    def const(self, goal: Type) -> Term:
        match goal:
            case Atom(name):
                return Ket(self.rng.choice(KETS[name]))
            case Prod(fs):
                return tensor(*(self.const(f) for f in fs))
            case Span(inner):
                return self.const(inner)
        raise ValueError(goal)

    def gen(self, goal: Type, d: int) -> Term:
        if d <= 0:
            return self.const(goal)
        if not isinstance(goal, Prod) and self.rng.random() < self.cfg.err_rate:
            return Err()
        match goal:
            case Atom():
                return self.gen_atom(goal, d)
            case Prod():
                return self.gen_prod(goal, d)
            case Span():
                return self.gen_span(goal, d)
        raise ValueError(goal)

    def gen_ite(self, goal: Type, d: int) -> Term:
        a = self.atom()
        return App(If(a.name, self.gen(goal, d - 1), self.gen(goal, d - 1)), self.gen(a, d - 1))

    def gen_beta(self, goal: Type, d: int) -> Term:
        a = self.goal_type()
        return App(self.gen_fun(a, goal, d - 1), self.gen(a, d - 1))

    def gen_atom(self, goal: Atom, d: int) -> Term:
        r = self.rng.randrange(6)
        match r:
            case 0:
                return self.const(goal)
            case 1:
                return self.gen_ite(goal, d)
            case 2:
                return self.gen_beta(goal, d)
            case 3:
                return Head(self.gen(prod(goal, self.base_type(self.rng.randint(1, 2))), d - 1))
            case 4:
                return Tail(self.gen(prod(self.atom(), goal), d - 1))
        src = Span(self.base_type(1))
        return Meas(1, goal.name, self.gen(src, d - 1))

    def gen_prod(self, goal: Prod, d: int) -> Term:
        fs = goal.factors
        r = self.rng.randrange(6)
        match r:
            case 0 | 1:
                cut = self.rng.randint(1, len(fs) - 1)
                return tensor(self.gen(prod(*fs[:cut]), d - 1), self.gen(prod(*fs[cut:]), d - 1))
            case 2:
                return self.gen_ite(goal, d)
            case 3:
                return self.gen_beta(goal, d)
            case 4:
                return Tail(self.gen(prod(self.atom(), *fs), d - 1))
        if len(set(fs)) == 1:
            src = Span(self.base_type(len(fs)))
            return Meas(len(fs), fs[0].name, self.gen(src, d - 1))
        return tensor(self.gen(fs[0], d - 1), self.gen(prod(*fs[1:]), d - 1))

    def gen_span(self, goal: Span, d: int) -> Term:
        inner = goal.inner
        fs = factors(inner)
        r = self.rng.randrange(10)
        match r:
            case 0:
                return self.gen(inner, d - 1)
            case 1 | 2:
                return plus(self.gen(goal, d - 1), self.gen(goal, d - 1))
            case 3:
                return Scale(self.rng.choice(self.cfg.scalars), self.gen(goal, d - 1))
            case 4:
                return self.gen_beta(goal, d)
            case 5:
                # a base function applied to a superposition
                a = self.base_type(self.rng.randint(1, 2))
                return App(self.gen_fun(a, goal, d - 1), self.gen(Span(a), d - 1))
            case 6:
                return self.gen_ite(goal, d)
            case 7 | 8:
                return self.gen_cast(goal, d)
        if all(f == B for f in fs) and len(fs) >= 1:
            n = len(fs)
            k = self.rng.randint(1, n + 1)
            if k <= n - 1:
                return CastL(Meas(k, "B", self.gen(Span(power(B, n)), d - 1)))
        return Zero() if self.rng.random() < 0.3 else self.gen(inner, d - 1)

    def gen_cast(self, goal: Span, d: int) -> Term:
        fs = factors(goal.inner)
        if len(fs) == 1:
            if fs[0] == B:
                return CastL(self.gen(Atom("X"), d - 1)) if "X" in self.cfg.bases else self.const(goal)
            return self.gen(goal.inner, d - 1)
        if self.rng.random() < 0.5:
            rest = [self.gen(f, d - 1) for f in fs[:-1]]
            body = tensor(*rest, self.gen(Span(fs[-1]), d - 1))
            return CastL(body)
        body = tensor(self.gen(Span(fs[0]), d - 1), *(self.gen(f, d - 1) for f in fs[1:]))
        return CastR(body)

    # -- functions and open terms

    def gen_fun(self, dom: Type, cod: Type, d: int) -> Term:
        if isinstance(dom, Atom) and self.rng.random() < 0.3:
            return If(dom.name, self.gen(cod, d - 1), self.gen(cod, d - 1))
        x = self.fresh()
        return Lam(x, dom, self.gen_using(cod, x, dom, d))

    def consume(self, goal: Type, x: str, a: Type, d: int) -> Term:
        """A term of the goal type that uses x once by branching on its measurement."""
        n = len(factors(strip_span(a)))
        cond = Meas(n, "B", Var(x)) if not is_base_type(a) else Var(x)
        if is_base_type(a):
            basis = factors(a)[0].name
            cond = Var(x) if n == 1 else Head(Var(x))
        else:
            basis = "B"
            cond = cond if n == 1 else Head(cond)
        return App(If(basis, self.gen(goal, d - 1), self.gen(goal, d - 1)), cond)

    def gen_using(self, goal: Type, x: str, a: Type, d: int) -> Term:
        if d <= 0:
            return Var(x) if is_subtype(a, goal) else self.consume(goal, x, a, 0)
        choices = ["consume", "beta"]
        if is_subtype(a, goal):
            choices += ["var", "var"]
        inner = strip_span(goal)
        if len(factors(inner)) >= 2:
            choices.append("tensor")
        if isinstance(goal, Span):
            choices += ["sum", "scale"]
        match self.rng.choice(choices):
            case "var":
                return Var(x)
            case "consume":
                return self.consume(goal, x, a, d)
            case "beta":
                b = self.goal_type()
                y = self.fresh()
                fun = Lam(y, b, self.gen_using(goal, y, b, d - 1))
                return App(fun, self.gen_using(b, x, a, d - 1))
            case "tensor":
                fs = factors(inner)
                i = self.rng.randrange(len(fs))
                items = [self.gen_using(f, x, a, d - 1) if j == i else self.gen(f, d - 1)
                         for j, f in enumerate(fs)]
                return tensor(*items)
            case "sum":
                return plus(self.gen_using(goal, x, a, d - 1), self.gen(goal, d - 1))
            case "scale":
                return Scale(self.rng.choice(self.cfg.scalars), self.gen_using(goal, x, a, d - 1))
        raise AssertionError


def gen_typed(cfg: GenConfig, rng: random.Random | None = None) -> tuple:
    """(context, term, goal type) with the inferred type below the goal."""
    rng = rng if rng is not None else random.Random(cfg.seed)
    g = _Gen(cfg, rng)
    goal = g.goal_type()
    t = g.gen(goal, cfg.max_depth)
    ctx = TypingContext()
    ty = infer(ctx, t).type
    assert is_subtype(ty, goal), f"{show(t)} : {show_type(ty)} not below {show_type(goal)}"
    return ctx, t, goal


def gen_open(cfg: GenConfig, rng: random.Random) -> tuple:
    """(x, A, t, r) with x:A ⊢ t and ⊢ r : A."""
    g = _Gen(cfg, rng)
    a, goal = g.goal_type(), g.goal_type()
    x = g.fresh()
    t = g.gen_using(goal, x, a, cfg.max_depth)
    r = g.gen(a, max(cfg.max_depth - 2, 0))
    return x, a, t, r


def coverage(t: Term, acc: Counter | None = None) -> Counter:
    acc = acc if acc is not None else Counter()
    acc[type(t).__name__] += 1
    for c in children(t):
        coverage(c, acc)
    return acc


# ---------------------------------------------------------------- properties


def _is_comp_combination(t: Term) -> bool:
    match t:
        case Ket(label):
            return label in ("0", "1")
        case Zero() | Err():
            return True
        case Sum(cs) | Tensor(cs):
            return all(_is_comp_combination(c) for c in cs)
        case Scale(_, body):
            return _is_comp_combination(body)
    return False


def _is_comp_span(ty: Type) -> bool:
    return isinstance(ty, Span) and all(f == B for f in factors(ty.inner))


def violations(t: Term, seed: int = 0, fuel: int = 2000) -> dict:
    """Property name -> detail for every theorem that fails on one seeded run of t."""
    out = {}
    ty = infer(None, t).type
    try:
        trace = normalize(t, random.Random(seed), fuel)
    except FuelExhausted as e:
        return {"termination": str(e)}
    for s in trace.steps:
        try:
            check(None, s.after, ty)
        except TypingError as e:
            out["subject_reduction"] = f"{s.rule}: {show(s.after)} ({e})"
            break
    final = trace.final
    if not (is_value(final) or isinstance(final, Err)):
        out["progress"] = f"stuck at {show(final)}"
    if isinstance(t, (CastL, CastR)) and _is_comp_span(ty) and not _is_comp_combination(final):
        out["linear_casting"] = f"normal form {show(final)}"
    report = check_trace(trace)
    if not report.ok:
        out["measure"] = str(report.violations[0])
    return out


def substitution_violation(x: str, a: Type, t: Term, r: Term) -> str | None:
    ty = infer({x: a}, t).type
    u = subst(t, x, r)
    try:
        check(None, u, ty)
    except TypingError as e:
        return f"{show(u)} not of type {show_type(ty)} ({e})"
    return None


def _paths(t: Term, path: tuple = ()):
    yield path, t
    for i, c in enumerate(children(t)):
        yield from _paths(c, path + (i,))


def _closed_const(t: Term) -> Term | None:
    try:
        ty = infer(None, t).type
    except TypingError:
        return None
    inner = strip_span(ty)
    if all(isinstance(f, Atom) for f in factors(inner)):
        return _Gen(GenConfig(), random.Random(0)).const(inner)
    return None


def shrink(t: Term, still_fails, limit: int = 200) -> Term:
    """Greedy one-node shrinking; each accepted candidate is re-checked with still_fails."""
    changed = True
    while changed and limit > 0:
        changed = False
        for path, node in list(_paths(t)):
            cands = list(children(node))
            c = _closed_const(node)
            if c is not None and c != node:
                cands.append(c)
            for cand in cands:
                new = _replace(t, path, cand)
                if len(show(new)) >= len(show(t)):
                    continue
                limit -= 1
                try:
                    infer(None, new)
                except TypingError:
                    continue
                if still_fails(new):
                    t, changed = new, True
                    break
            if changed or limit <= 0:
                break
    return t


# ---------------------------------------------------------------- corpus runs


@dataclass
class Report:
    checked: int = 0
    counts: Counter = field(default_factory=Counter)
    coverage: Counter = field(default_factory=Counter)
    examples: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    def merge(self, other: "Report") -> "Report":
        ex = dict(other.examples)
        ex.update(self.examples)
        return Report(self.checked + other.checked, self.counts + other.counts,
                      self.coverage + other.coverage, ex, self.log + other.log)

    @property
    def ok(self) -> bool:
        return not self.counts

    def summary(self) -> str:
        lines = [f"checked {self.checked}"]
        for p in PROPERTIES:
            lines.append(f"{p} {self.counts.get(p, 0)}")
        for p, ex in sorted(self.examples.items()):
            lines.append(f"example {p}: {ex}")
        return "\n".join(lines)


def _record(rep: Report, prop: str, seed: int, index: int, term: Term, shrunk: Term, detail: str):
    rep.counts[prop] += 1
    entry = {"property": prop, "seed": seed, "index": index,
             "term": show(term), "shrunk": show(shrunk), "detail": detail}
    rep.log.append(entry)
    rep.examples.setdefault(prop, show(shrunk))


def check_theorems(corpus_size: int, cfg: GenConfig, shrink_limit: int = 3,
                   subst_every: int = 4) -> Report:
    """Deterministic per cfg.seed; only the first shrink_limit hits per property are shrunk."""
    rng = random.Random(cfg.seed)
    rep = Report()
    for i in range(corpus_size):
        _, t, _ = gen_typed(cfg, rng)
        rep.checked += 1
        coverage(t, rep.coverage)
        run_seed = rng.randrange(2 ** 31)
        for prop, detail in violations(t, run_seed).items():
            small = t
            if rep.counts[prop] < shrink_limit:
                small = shrink(t, lambda u, p=prop: p in violations(u, run_seed))
            _record(rep, prop, cfg.seed, i, t, small, detail)
        if subst_every and i % subst_every == 0:
            x, a, body, r = gen_open(cfg, rng)
            detail = substitution_violation(x, a, body, r)
            if detail is not None:
                _record(rep, "substitution", cfg.seed, i, body, body, detail)
    return rep


def _shard(args):
    n, cfg = args
    return check_theorems(n, cfg)


def run_sharded(corpus_size: int, cfg: GenConfig, workers: int = 1) -> Report:
    """Split the corpus into per-worker seed streams and merge the reports."""
    if workers <= 1:
        return check_theorems(corpus_size, cfg)
    from concurrent.futures import ProcessPoolExecutor
    from dataclasses import replace
    sizes = [corpus_size // workers + (k < corpus_size % workers) for k in range(workers)]
    jobs = [(n, replace(cfg, seed=cfg.seed * 1000 + k)) for k, n in enumerate(sizes)]
    with ProcessPoolExecutor(workers) as ex:
        reports = list(ex.map(_shard, jobs))
    out = Report()
    for r in reports:
        out = out.merge(r)
    return out


def write_log(rep: Report, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in rep.log:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
