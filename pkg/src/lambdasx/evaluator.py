"""Small-step reduction with a fixed strategy.

Each step first looks for an algebraic redex (vector-space axioms and error
propagation), innermost-first; only when none exists does it take the
leftmost-outermost beta, conditional, list, cast or measurement redex.
Redexes are only searched in evaluation positions: never under a binder,
never inside conditional branches, and in an argument only when the
function is a base-typed abstraction or a conditional constant.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .bases import cast_const, registry
from .measurement import branches, is_vector_value, sample_index
from .syntax import (
    ERR, ZERO, App, CastL, CastR, Err, Head, If, Ket, Lam, Meas, Scale, Sum, Tail, Tensor,
    Term, Zero, children, is_base_term, is_base_type, is_value, is_zero_scalar, plus,
    scalar_eq, show, subst, tensor,
)
from .subtyping import min_s
from .syntax import Arrow


class FuelExhausted(Exception):
    pass


class IllTyped(Exception):
    pass


BETA_RULES = frozenset({"β_n", "β_b"})


@dataclass(frozen=True)
class Step:
    rule: str
    probability: float
    before: Term
    after: Term

    def __str__(self) -> str:
        return f"{self.rule} p={self.probability:.12g} ⊢ {show(self.before)} ↪ {show(self.after)}"


@dataclass(frozen=True)
class Trace:
    steps: tuple
    final: Term
    total_probability: float = 1.0

    def __str__(self) -> str:
        return "\n".join(str(s) for s in self.steps)


@dataclass(frozen=True)
class Distribution:
    outcomes: tuple = field(default=())

    def total(self) -> float:
        return sum(p for _, p in self.outcomes)

    def probability_of(self, t: Term) -> float:
        return sum(p for u, p in self.outcomes if u == t)

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)


# ---------------------------------------------------------------- helpers


def with_children(t: Term, new: list) -> Term:
    match t:
        case Lam(var, annot, _):
            return Lam(var, annot, new[0])
        case If(basis, _, _):
            return If(basis, new[0], new[1])
        case App():
            return App(new[0], new[1])
        case Scale(s, _):
            return Scale(s, new[0])
        case Sum():
            return plus(*new)
        case Tensor():
            return tensor(*new)
        case Meas(m, basis, _):
            return Meas(m, basis, new[0])
        case Head():
            return Head(new[0])
        case Tail():
            return Tail(new[0])
        case CastL():
            return CastL(new[0])
        case CastR():
            return CastR(new[0])
    raise AssertionError(t)


def _replace(t: Term, path: tuple, new: Term) -> Term:
    if not path:
        return new
    cs = list(children(t))
    cs[path[0]] = _replace(cs[path[0]], path[1:], new)
    return with_children(t, cs)


def _is_base_lam(t: Term) -> bool:
    return isinstance(t, Lam) and is_base_type(t.annot)


def eval_positions(t: Term) -> range | tuple:
    """Indices of children that are evaluation contexts."""
    match t:
        case Lam() | If():
            return ()
        case App(fun, _):
            return (0, 1) if (_is_base_lam(fun) or isinstance(fun, If)) else (0,)
    return range(len(children(t)))


def _split(cs: tuple) -> tuple:
    """Binary view of an n-ary sum: first summand and the rest."""
    return cs[0], plus(*cs[1:])


def _coef(t: Term) -> tuple:
    return (t.s, t.body) if isinstance(t, Scale) else (None, t)


# ---------------------------------------------------------------- algebraic rules


def _algebraic(t: Term):
    """Vector-space axioms and error propagation at the root: (rule, result) or None."""
    match t:
        case App(fun, arg):
            if isinstance(fun, Err):
                return "err_app_l", ERR
            if isinstance(arg, Err):
                return "err_app_r", ERR
        case Sum(cs):
            if any(isinstance(c, Err) for c in cs):
                return "err_sum", ERR
            for i, c in enumerate(cs):
                if isinstance(c, Zero):
                    rest = cs[:i] + cs[i + 1:]
                    return "neut", plus(*rest)
            for i in range(len(cs)):
                a, u = _coef(cs[i])
                for j in range(i + 1, len(cs)):
                    b, v = _coef(cs[j])
                    if u != v:
                        continue
                    rest = cs[:i] + cs[i + 1:j] + cs[j + 1:]
                    if a is not None and b is not None:
                        rule, s = "fact", a + b
                    elif a is not None or b is not None:
                        rule, s = "fact^1", (a if a is not None else b) + 1
                    else:
                        rule, s = "fact^2", 2
                    return rule, plus(Scale(s, u), *rest) if rest else Scale(s, u)
        case Scale(s, body):
            if isinstance(body, Err):
                return "err_scal", ERR
            if scalar_eq(s, 1):
                return "unit", body
            if is_zero_scalar(s):
                return "zero_s", ZERO
            if isinstance(body, Zero):
                return "zero_α", ZERO
            if isinstance(body, Scale):
                return "prod", Scale(s * body.s, body.body)
            if isinstance(body, Sum):
                first, rest = _split(body.children)
                return "dist_s", plus(Scale(s, first), Scale(s, rest))
        case Tensor(items):
            for i, it in enumerate(items):
                if isinstance(it, Err):
                    return ("err_tensor_l" if i == 0 else "err_tensor_r"), ERR
        case Meas(_, basis, Err()):
            return _meas_rule("err_π", basis) + "⚡", ERR
        case Meas(_, basis, Zero()):
            # fired early, so that no list rule drops a factor that is bound to fail
            return _meas_rule("err_π", basis), ERR
        case CastL(Err()):
            return "err_castl", ERR
        case CastR(Err()):
            return "err_castr", ERR
        case Head(Err()):
            return "err_head", ERR
        case Tail(Err()):
            return "err_tail", ERR
    return None


def _find_algebraic(t: Term, path: tuple):
    for i in eval_positions(t):
        hit = _find_algebraic(children(t)[i], path + (i,))
        if hit is not None:
            return hit
    r = _algebraic(t)
    if r is not None:
        return path, r[0], [(1.0, r[1])]
    return None


# ---------------------------------------------------------------- main rules


def _meas_rule(base: str, basis: str) -> str:
    if basis == "B":
        return base
    return base + ("X" if basis == "X" else "i")


def _fun_takes_base(fun: Term) -> bool:
    """Guard of the lin_r rules: the function's type is M => A for a base M."""
    match fun:
        case Lam(_, annot, _):
            return is_base_type(annot)
        case If():
            return True
    from .typecheck import type_of

    ty = type_of(fun)
    if ty is None:
        raise IllTyped(show(fun))
    ty = min_s(ty)
    return isinstance(ty, Arrow) and is_base_type(ty.dom)


def _base_fits(b: Term, annot) -> bool:
    from .typecheck import has_type

    return has_type(b, annot)


def _if_rule(node: If, cond: Ket):
    reg = registry()
    try:
        basis, _, is_up = reg.ket_info(cond.label)
    except Exception:
        return None
    if basis != node.basis:
        return None
    if node.basis == "B":
        return ("if_1", node.then) if is_up else ("if_0", node.other)
    if node.basis == "X":
        return ("if_+", node.then) if is_up else ("if_-", node.other)
    return ("if_↑", node.then) if is_up else ("if_↓", node.other)


def _lin_r(fun: Term, arg: Term):
    match arg:
        case Sum(cs):
            first, rest = _split(cs)
            return "lin_r", plus(App(fun, first), App(fun, rest))
        case Scale(s, body):
            return "lin_r^α", Scale(s, App(fun, body))
        case Zero():
            return "lin_r^0", ZERO
    return None


def _cast_rule(t: Term):
    left = isinstance(t, CastL)
    mk = CastL if left else CastR
    body = t.body
    match body:
        case Sum(cs):
            first, rest = _split(cs)
            return "dist_+^⇑", plus(mk(first), mk(rest))
        case Scale(s, inner):
            return "dist_α^⇑", Scale(s, mk(inner))
        case Zero():
            return "neut_0^⇑", ZERO
        case Ket(label):
            try:
                basis, _, is_up = registry().ket_info(label)
            except Exception:
                return None
            if basis == "B":
                return ("cast_1" if is_up else "cast_0"), body
            if basis == "X":
                return ("cast_+" if is_up else "cast_-"), cast_const(body)
            return ("cast_↑" if is_up else "cast_↓"), cast_const(body)
        case Tensor(items):
            if left:
                rest, pivot = items[:-1], items[-1]
                side = "l"
            else:
                pivot, rest = items[0], items[1:]
                side = "r"

            def rebuild(x: Term) -> Term:
                return tensor(*rest, x) if left else tensor(x, *rest)

            match pivot:
                case Sum(cs):
                    first, more = _split(cs)
                    return f"dist_{side}^+", plus(mk(rebuild(first)), mk(rebuild(more)))
                case Scale(s, inner):
                    return f"dist_{side}^α", Scale(s, mk(rebuild(inner)))
                case Zero() if all(is_value(x) for x in rest):
                    return f"dist_{side}^0", ZERO
                case Ket() if all(is_value(x) for x in rest):
                    return f"neut_{side}^⇑", body
    return None


def _root_rule(t: Term):
    """Beta, conditional, list, cast and measurement rules at the root."""
    match t:
        case App(fun, arg):
            match fun:
                case Sum(cs):
                    first, rest = _split(cs)
                    return "lin_l", plus(App(first, arg), App(rest, arg))
                case Scale(s, body):
                    return "lin_l^α", Scale(s, App(body, arg))
                case Zero():
                    return "lin_l^0", ZERO
                case Lam(var, annot, body) if not is_base_type(annot):
                    return "β_n", subst(body, var, arg)
                case Lam(var, annot, body):
                    if is_base_term(arg) and _base_fits(arg, annot):
                        return "β_b", subst(body, var, arg)
                    return _lin_r(fun, arg)
                case If():
                    if isinstance(arg, Ket):
                        return _if_rule(fun, arg)
                    return _lin_r(fun, arg)
            if isinstance(arg, (Sum, Scale, Zero)) and _fun_takes_base(fun):
                return _lin_r(fun, arg)
        case Head(Tensor(items)) if isinstance(items[0], Ket):
            return "head", items[0]
        case Tail(Tensor(items)) if isinstance(items[0], Ket):
            return "tail", tensor(*items[1:])
        case CastL() | CastR():
            return _cast_rule(t)
        case Meas(m, basis, body):
            if is_vector_value(body):
                return _meas_rule("proj", basis), branches(body, m, basis)
    return None


def _find_main(t: Term, path: tuple):
    r = _root_rule(t)
    if r is not None:
        rule, out = r
        return path, rule, out if isinstance(out, list) else [(1.0, out)]
    for i in eval_positions(t):
        hit = _find_main(children(t)[i], path + (i,))
        if hit is not None:
            return hit
    return None


def redex(t: Term):
    """(path, rule, [(probability, replacement)]) for the next step, or None."""
    if isinstance(t, Err):
        return None
    return _find_algebraic(t, ()) or _find_main(t, ())


def successors(t: Term) -> list:
    """All (rule, probability, result) alternatives of the next step."""
    hit = redex(t)
    if hit is None:
        return []
    path, rule, outs = hit
    return [(rule, p, _replace(t, path, new)) for p, new in outs]


def step(t: Term, rng: random.Random | None = None) -> Step | None:
    hit = redex(t)
    if hit is None:
        return None
    path, rule, outs = hit
    if len(outs) == 1:
        p, new = outs[0]
    else:
        i = sample_index([p for p, _ in outs], rng if rng is not None else random.Random(0))
        p, new = outs[i]
    return Step(rule, p, t, _replace(t, path, new))


def normalize(t: Term, rng: random.Random | None = None, fuel: int = 10_000) -> Trace:
    rng = rng if rng is not None else random.Random(0)
    steps = []
    prob = 1.0
    for _ in range(fuel):
        s = step(t, rng)
        if s is None:
            return Trace(tuple(steps), t, prob)
        steps.append(s)
        prob *= s.probability
        t = s.after
    if redex(t) is None:
        return Trace(tuple(steps), t, prob)
    raise FuelExhausted(f"no normal form within {fuel} steps")


def distribution(t: Term, fuel: int = 10_000) -> Distribution:
    """Exact outcome distribution, branching on every measurement."""
    memo: dict = {}
    budget = [fuel]

    def go(t: Term) -> dict:
        if t in memo:
            return memo[t]
        out: dict = {}
        cur, chain = t, []
        while True:
            succ = successors(cur)
            budget[0] -= 1
            if budget[0] < 0:
                raise FuelExhausted(f"distribution exceeded {fuel} steps")
            if not succ:
                out = {cur: 1.0}
                break
            if len(succ) == 1:
                chain.append(cur)
                cur = succ[0][2]
                if cur in memo:
                    out = memo[cur]
                    break
                continue
            for _, p, nxt in succ:
                for u, q in go(nxt).items():
                    out[u] = out.get(u, 0.0) + p * q
            break
        for c in chain:
            memo[c] = out
        memo[t] = out
        return out

    res = go(t)
    return Distribution(tuple(sorted(res.items(), key=lambda kv: show(kv[0]))))
