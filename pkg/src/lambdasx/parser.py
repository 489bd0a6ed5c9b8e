"""Concrete syntax for types, terms and source files.

Precedence, loosest first: lambda / if, sum, scalar multiplication, tensor
`(x)`, application. Prefix operators (head, tail, casts, measurements)
take one atom or another prefix operator.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .bases import BasisDef, Mode, Vec2, register_basis, registry
from .syntax import (
    ERR, ISQRT2, ZERO, App, Arrow, Atom, CastL, CastR, Head, If, Ket, Lam, Meas, QGen, Scale,
    Span, Tail, Term, Type, Var, plus, prod, subst, tensor,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<ket>\|[^|>\s]+>)
  | (?P<tensor>\(x\))
  | (?P<arrow>=>)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?i?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[\\.:()\[\],+\-*=])
""", re.VERBOSE)

KEYWORDS = {
    "if", "ifx", "then", "else", "head", "tail", "castl", "castr", "cast", "pi", "pix",
    "zero", "err", "def", "main", "basis", "ite", "itex", "isqrt2", "i",
}
STATEMENT_KEYWORDS = {"def", "main", "basis"}
_IF_N = re.compile(r"if(\d+)$")
_ITE_N = re.compile(r"ite(\d+)$")
_KET_PART = re.compile(r"up\d+|dn\d+|[01+\-]")


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list:
    out, pos, line, col = [], 0, 1, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group()
        if m.lastgroup != "ws":
            out.append(Tok(m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(Tok("eof", "", line, col))
    return out


def _is_keyword(text: str) -> bool:
    return text in KEYWORDS or bool(_IF_N.match(text) or _ITE_N.match(text))


@dataclass
class SourceFile:
    bases: list = field(default_factory=list)
    defs: dict = field(default_factory=dict)
    main: Term | None = None


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, tok: Tok | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "ket"

    def eat(self, text: str) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or _is_keyword(t.text):
            self.fail(f"expected a name, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def int_lit(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.fail("expected an integer")
        self.i += 1
        return int(t.text)

    # -- scalars
    def real_part(self) -> complex | None:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            if t.text.endswith("i"):
                return complex(0, float(t.text[:-1]))
            return complex(float(t.text))
        if t.text == "isqrt2":
            self.i += 1
            return complex(ISQRT2)
        if t.text == "i":
            self.i += 1
            return 1j
        return None

    def scalar(self) -> complex | None:
        """Parse a scalar literal or return None (position restored)."""
        start = self.i
        if self.at("("):
            self.i += 1
            s = self.scalar()
            if s is not None and self.at(")"):
                self.i += 1
                return s
            self.i = start
            return None
        sign = 1
        if self.at("-"):
            sign = -1
            self.i += 1
        v = self.real_part()
        if v is None:
            self.i = start
            return None
        v *= sign
        # complex literal a+bi
        if (self.at("+") or self.at("-")) and self.peek().kind == "num" and self.peek().text.endswith("i"):
            s2 = 1 if self.at("+") else -1
            self.i += 1
            v += s2 * self.real_part()
        return v

    # -- types
    def type_(self) -> Type:
        left = self.prod_type()
        if self.at("=>"):
            self.i += 1
            return Arrow(left, self.type_())
        return left

    def prod_type(self) -> Type:
        fs = [self.atom_type()]
        while self.at("*"):
            self.i += 1
            fs.append(self.atom_type())
        return prod(*fs)

    def atom_type(self) -> Type:
        t = self.tok
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.eat(")")
            return ty
        if t.kind != "ident":
            self.fail(f"expected a type, found {t.text or 'end of input'!r}")
        self.i += 1
        if t.text == "S":
            self.eat("(")
            ty = self.type_()
            self.eat(")")
            return Span(ty)
        if t.text == "Q":
            self.eat("[")
            if self.tok.kind == "ket":
                label = self.tok.text[1:-1]
                self.i += 1
                try:
                    v = registry().ket_info(label)[1]
                except Exception:
                    self.fail(f"unknown ket |{label}>", t)
                vec = (v.a0, v.a1)
            else:
                a0 = self.scalar()
                self.eat(",")
                a1 = self.scalar()
                if a0 is None or a1 is None:
                    self.fail("expected two amplitudes")
                vec = (a0, a1)
            self.eat("]")
            try:
                return QGen(vec)
            except ValueError as e:
                self.fail(str(e), t)
        if t.text in ("B", "X") or re.fullmatch(r"B\d+", t.text):
            return Atom(t.text)
        self.fail(f"unknown type {t.text!r}", t)

    # -- terms
    def term(self) -> Term:
        t = self.tok
        if self.at("\\"):
            self.i += 1
            var = self.ident()
            self.eat(":")
            annot = self.type_()
            self.eat(".")
            return Lam(var, annot, self.term())
        if t.kind == "ident" and (t.text in ("if", "ifx") or _IF_N.match(t.text)):
            self.i += 1
            basis = {"if": "B", "ifx": "X"}.get(t.text) or "B" + t.text[2:]
            cond = self.term()
            self.eat("then")
            then = self.term()
            self.eat("else")
            other = self.term()
            return App(If(basis, then, other), cond)
        return self.sum_()

    def sum_(self) -> Term:
        parts = [self.scaled()]
        while self.at("+") or self.at("-"):
            neg = self.at("-")
            self.i += 1
            p = self.term() if self.binder_start() else self.scaled()
            parts.append(Scale(-1, p) if neg else p)
        return plus(*parts) if len(parts) > 1 else parts[0]

    def scaled(self) -> Term:
        start = self.i
        s = self.scalar()
        if s is not None and self.at("."):
            self.i += 1
            return Scale(s, self.scaled_body())
        self.i = start
        return self.tensor_()

    def binder_start(self) -> bool:
        t = self.tok
        return self.at("\\") or (t.kind == "ident" and (t.text in ("if", "ifx") or bool(_IF_N.match(t.text))))

    def scaled_body(self) -> Term:
        # a lambda or conditional extends as far right as possible
        return self.term() if self.binder_start() else self.scaled()

    def tensor_(self) -> Term:
        items = [self.app()]
        while self.tok.kind == "tensor":
            self.i += 1
            if self.binder_start():
                items.append(self.term())
                break
            items.append(self.app())
        return tensor(*items) if len(items) > 1 else items[0]

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "ket" or self.at("("):
            return True
        if t.kind == "ident":
            if t.text in STATEMENT_KEYWORDS or t.text in ("then", "else", "if", "ifx") or _IF_N.match(t.text):
                return False
            return True
        return False

    def app(self) -> Term:
        f = self.prefix()
        while self.starts_atom():
            f = App(f, self.prefix())
        if self.at("\\"):
            f = App(f, self.term())
        return f

    def prefix(self) -> Term:
        t = self.tok
        if t.kind == "ident":
            match t.text:
                case "head":
                    self.i += 1
                    return Head(self.prefix())
                case "tail":
                    self.i += 1
                    return Tail(self.prefix())
                case "castl" | "cast":
                    self.i += 1
                    return CastL(self.prefix())
                case "castr":
                    self.i += 1
                    return CastR(self.prefix())
                case "pi" | "pix":
                    self.i += 1
                    basis = "X" if t.text == "pix" else "B"
                    if t.text == "pi" and self.at("["):
                        self.i += 1
                        basis = "B" + str(self.int_lit())
                        self.eat("]")
                    m = self.int_lit()
                    return Meas(m, basis, self.prefix())
        return self.atom()

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "ket":
            self.i += 1
            return self.ket(t)
        if self.at("("):
            self.i += 1
            inner = self.term()
            self.eat(")")
            return inner
        if t.kind == "ident":
            if t.text == "zero":
                self.i += 1
                return ZERO
            if t.text == "err":
                self.i += 1
                return ERR
            if t.text in ("ite", "itex") or _ITE_N.match(t.text):
                self.i += 1
                basis = {"ite": "B", "itex": "X"}.get(t.text) or "B" + t.text[3:]
                self.eat("(")
                then = self.term()
                self.eat(",")
                other = self.term()
                self.eat(")")
                return If(basis, then, other)
            return Var(self.ident())
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def ket(self, t: Tok) -> Term:
        body = t.text[1:-1]
        parts = _KET_PART.findall(body)
        if "".join(parts) != body:
            self.fail(f"bad ket {t.text}", t)
        kets = []
        for p in parts:
            try:
                registry().ket_info(p)
            except Exception:
                self.fail(f"unknown ket |{p}>", t)
            kets.append(Ket(p))
        return tensor(*kets)

    # -- files
    def source(self) -> SourceFile:
        sf = SourceFile()
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("basis"):
                self.i += 1
                sf.bases.append(self.basis_decl())
            elif self.at("def"):
                self.i += 1
                name = self.ident()
                self.eat("=")
                body = self.inline(self.term(), sf.defs)
                sf.defs[name] = body
            elif self.at("main"):
                self.i += 1
                if sf.main is not None:
                    self.fail("second main term", t)
                sf.main = self.inline(self.term(), sf.defs)
            elif sf.main is None and not sf.defs and not sf.bases:
                sf.main = self.term()
            else:
                self.fail(f"unexpected {t.text!r}")
        return sf

    @staticmethod
    def inline(t: Term, defs: dict) -> Term:
        for name, body in reversed(list(defs.items())):
            t = subst(t, name, body)
        return t

    def basis_decl(self):
        t = self.tok
        bid = self.tok.text
        if not re.fullmatch(r"B\d+", bid):
            self.fail("basis names look like B1, B2, ...")
        self.i += 1
        self.eat("=")
        vecs = []
        for word in ("up", "down"):
            if self.tok.text != word:
                self.fail(f"expected {word}(a0, a1)")
            self.i += 1
            self.eat("(")
            a0 = self.scalar()
            self.eat(",")
            a1 = self.scalar()
            self.eat(")")
            if a0 is None or a1 is None:
                self.fail("expected complex amplitudes")
            vecs.append(Vec2(a0, a1))
            if word == "up":
                self.eat(",")
        mode = Mode.STRICT
        if self.tok.text in ("strict", "overlap"):
            mode = Mode(self.tok.text)
            self.i += 1
        d = BasisDef(bid, vecs[0], vecs[1])
        try:
            register_basis(d, mode)
        except Exception as e:
            raise ParseError(f"{type(e).__name__}: {e}", t.line, t.col) from e
        return d, mode


def _finish(p: Parser, value):
    if p.tok.kind != "eof":
        p.fail(f"trailing input {p.tok.text!r}")
    return value


def parse_term(src: str) -> Term:
    p = Parser(src)
    return _finish(p, p.term())


def parse_type(src: str) -> Type:
    p = Parser(src)
    return _finish(p, p.type_())


def parse(src: str) -> SourceFile:
    """Parse a source file. Basis declarations register into the current registry."""
    return Parser(src).source()
