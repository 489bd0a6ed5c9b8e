"""Example programs: gates, Bell states, teleportation, basis-sensitive choice.

Each entry is concrete syntax; `term(name)` parses it with earlier entries
inlined. `STATED_TYPES` lists the advertised type of each program.
"""

from __future__ import annotations

from functools import lru_cache

from .bases import BasisDef, Mode, Registry, Vec2
from .parser import parse_term, parse_type
from .syntax import Term, Type, free_vars, subst

SOURCES = {
    "H": r"\x:B. if x then |-> else |+>",
    "H_X": r"\x:X. ifx x then |0> else |1>",
    "H_S": r"\x:B. if x then cast |-> else cast |+>",
    "NOT": r"\x:B. if x then |0> else |1>",
    "CNOT": r"\x:B * B. head x (x) (if head x then NOT (tail x) else tail x)",
    "CNOT_X": r"\x:X * B. |0> (x) tail x + |1> (x) ((ifx head x then NOT else -1 . NOT) (tail x))",
    "BELL": r"\x:B * B. CNOT (H (head x) (x) tail x)",
    # same state, but the superposition is cast into the computational basis
    # before CNOT, so that the call-by-base rules can fire
    "BELL_RT": r"\x:B * B. CNOT (castr (H_S (head x) (x) tail x))",
    "BELL_X": r"\x:X. (\y:B. y (x) y) (cast x)",
    "CNOT3_12": r"\x:B * B * B. CNOT (head x (x) head (tail x)) (x) tail (tail x)",
    "H3_1": r"\x:B * B * B. H_S (head x) (x) tail x",
    "Z": r"\x:B. if x then -1 . |1> else |0>",
    "CZ": r"\x:B * B. if head x then Z (tail x) else tail x",
    "BOB": r"\x:B * B * B. head x (x) head (tail x) (x) CZ (head x (x) tail (CNOT (head (tail x) (x) tail (tail x))))",
    "ALICE": r"\x:S(B) * S(B * B). pi 2 (castr (H3_1 (CNOT3_12 (castl (castr x)))))",
    "TELEPORT": r"\x:S(B). pi 2 (castl (BOB (castl (ALICE (x (x) BELL_RT (|0> (x) |0>))))))",
}

STATED_TYPES = {
    "H": "B => X",
    "H_X": "X => B",
    "H_S": "B => S(B)",
    "NOT": "B => B",
    "CNOT": "B * B => B * B",
    "CNOT_X": "X * B => S(B * B)",
    "BELL": "B * B => S(B * B)",
    "BELL_RT": "B * B => S(B * B)",
    "BELL_X": "X => S(B * B)",
    "CNOT3_12": "B * B * B => B * B * B",
    "H3_1": "B * B * B => S(B) * B * B",
    "Z": "B => S(B)",
    "CZ": "B * B => S(B)",
    "BOB": "B * B * B => B * B * S(B)",
    "ALICE": "S(B) * S(B * B) => B * B * S(B)",
    "TELEPORT": "S(B) => B * B * S(B)",
}

# the basis {|0>, -|1>}; it overlaps B, so it is declared in overlapping mode
ZBASIS = BasisDef("B1", Vec2(1, 0), Vec2(0, -1))

CHOICE_SOURCES = {
    "F": r"\z:B. if z then cast |-> else cast |+>",
    "G": r"\z:B1. cast z",
    "CHOICE": r"\y:B. \x:Q[|0>]. if y then F x else G x",
}
CHOICE_TYPE = "B => Q[|0>] => S(B)"


def _build(sources: dict, name: str) -> Term:
    t = parse_term(sources[name])
    for other in reversed(list(sources)):
        if other != name and other in free_vars(t):
            t = subst(t, other, _cached(id(sources), other))
    return t


_CACHE: dict = {}


def _cached(key: int, name: str) -> Term:
    src = SOURCES if key == id(SOURCES) else CHOICE_SOURCES
    if (key, name) not in _CACHE:
        _CACHE[(key, name)] = _build(src, name)
    return _CACHE[(key, name)]


def term(name: str) -> Term:
    return _cached(id(SOURCES), name)


def stated_type(name: str) -> Type:
    return parse_type(STATED_TYPES[name])


def choice_registry() -> Registry:
    reg = Registry()
    reg.register(ZBASIS, Mode.OVERLAPPING)
    return reg


def choice_term(name: str = "CHOICE") -> Term:
    """Parse under a registry that declares the overlapping basis (caller installs it)."""
    t = parse_term(CHOICE_SOURCES[name])
    for other in ("G", "F"):
        if other != name:
            t = subst(t, other, parse_term(CHOICE_SOURCES[other]))
    return t


@lru_cache(maxsize=None)
def choice_type() -> Type:
    return parse_type(CHOICE_TYPE)
