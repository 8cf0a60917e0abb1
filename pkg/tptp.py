"""
Layer 4: Axiom Generation - TPTP export
Writes pure formulas as TPTP FOF annotated formulas and reads them back.
Variables are written with a V prefix so every DSL variable name becomes a
TPTP upper word; the reader strips it again.
"""

import re
from typing import List, Optional, Tuple

from errors import FormulaSyntaxError, MonadicAtomError
from logic import (
    FALSUM,
    VERUM,
    And,
    App,
    Const,
    Eq,
    Exists,
    Falsum,
    Forall,
    Formula,
    Implies,
    Mon,
    Not,
    Or,
    Rel,
    Term,
    Var,
    Verum,
)
from sexpr import Input

_LOWER_WORD = re.compile(r"[a-z][A-Za-z0-9_]*")
_VARIABLE_NAME = re.compile(r"[A-Za-z0-9_]+")


def _symbol(name: str) -> str:
    if _LOWER_WORD.fullmatch(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _variable(name: str) -> str:
    if not _VARIABLE_NAME.fullmatch(name):
        raise ValueError(f"variable {name!r} has no TPTP spelling")
    return "V" + name


def write_term(t: Term) -> str:
    if isinstance(t, Var):
        return _variable(t.name)
    if isinstance(t, Const):
        return _symbol(t.name)
    return "{}({})".format(_symbol(t.function), ",".join(write_term(a) for a in t.args))


def write_formula(phi: Formula) -> str:
    out: List[str] = []
    _emit(phi, out)
    return "".join(out)


def _emit(phi: Formula, out: List[str]) -> None:
    if isinstance(phi, Verum):
        out.append("$true")
    elif isinstance(phi, Falsum):
        out.append("$false")
    elif isinstance(phi, Mon):
        raise MonadicAtomError("monadic atoms have no TPTP form")
    elif isinstance(phi, Rel):
        out.append(_symbol(phi.name))
        if phi.args:
            out.append("(" + ",".join(write_term(t) for t in phi.args) + ")")
    elif isinstance(phi, Eq):
        out.append(f"({write_term(phi.left)} = {write_term(phi.right)})")
    elif isinstance(phi, Not):
        out.append("~ ")
        _emit(phi.body, out)
    elif isinstance(phi, (And, Or)):
        if not phi.parts:
            out.append("$true" if isinstance(phi, And) else "$false")
        elif len(phi.parts) == 1:
            _emit(phi.parts[0], out)
        else:
            op = " & " if isinstance(phi, And) else " | "
            out.append("(")
            for n, part in enumerate(phi.parts):
                if n:
                    out.append(op)
                _emit(part, out)
            out.append(")")
    elif isinstance(phi, Implies):
        out.append("(")
        _emit(phi.antecedent, out)
        out.append(" => ")
        _emit(phi.consequent, out)
        out.append(")")
    else:
        quantifier = "!" if isinstance(phi, Forall) else "?"
        out.append("({} [{}] : ".format(quantifier, ",".join(_variable(v) for v in phi.variables)))
        _emit(phi.body, out)
        out.append(")")


def write_fof(name: str, phi: Formula, role: str = "axiom") -> str:
    """One annotated formula: fof(name, role, formula)."""
    return f"fof({_symbol(name)}, {role}, {write_formula(phi)})."


# ============================================================================
# Reader
# ============================================================================

_SKIP = re.compile(r"(?:\s+|%[^\n]*)+")
_TOKENS = [
    ("quoted", re.compile(r"'(?:[^'\\]|\\.)*'")),
    ("upper", re.compile(r"[A-Z][A-Za-z0-9_]*")),
    ("lower", re.compile(r"[a-z][A-Za-z0-9_]*|[0-9]+")),
    ("defined", re.compile(r"\$[a-z]+")),
    ("punct", re.compile(r"<=>|=>|<=|!=|[=~&|!?\[\](),:.]")),
]


class _Lexer:
    def __init__(self, text: str):
        self.inp = Input(text)
        self.peeked: Optional[Tuple[str, str, Tuple[int, int]]] = None

    def _skip(self) -> None:
        if self.inp.matches(_SKIP):
            self.inp.consume(_SKIP)

    def peek(self) -> Tuple[str, str, Tuple[int, int]]:
        if self.peeked is None:
            self._skip()
            loc = self.inp.loc()
            if self.inp.eof():
                self.peeked = ("eof", "", loc)
            else:
                for kind, regex in _TOKENS:
                    if self.inp.matches(regex):
                        self.peeked = (kind, self.inp.consume(regex), loc)
                        break
                else:
                    self.inp.error("unexpected character")
        return self.peeked

    def next(self) -> Tuple[str, str, Tuple[int, int]]:
        token = self.peek()
        self.peeked = None
        return token

    def at(self, text: str) -> bool:
        kind, value, _ = self.peek()
        return kind == "punct" and value == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            self.fail(f"expected '{text}'")

    def fail(self, desc: str):
        _, _, (line, column) = self.peek()
        raise FormulaSyntaxError(desc, line, column)


def _unquote(kind: str, value: str) -> str:
    if kind != "quoted":
        return value
    return re.sub(r"\\(.)", r"\1", value[1:-1])


def _read_variable(value: str) -> str:
    return value[1:] if value.startswith("V") and len(value) > 1 else value


class _Parser:
    def __init__(self, text: str):
        self.lex = _Lexer(text)

    def term(self) -> Term:
        kind, value, _ = self.lex.peek()
        if kind == "upper":
            self.lex.next()
            return Var(_read_variable(value))
        if kind in ("lower", "quoted"):
            self.lex.next()
            name = _unquote(kind, value)
            if self.lex.accept("("):
                return App(name, tuple(self.arguments()))
            return Const(name)
        self.lex.fail("expected a term")

    def arguments(self) -> List[Term]:
        args = [self.term()]
        while self.lex.accept(","):
            args.append(self.term())
        self.lex.expect(")")
        return args

    def formula(self) -> Formula:
        left = self.unit()
        for op, build in (("&", And), ("|", Or)):
            if self.lex.at(op):
                parts = [left]
                while self.lex.accept(op):
                    parts.append(self.unit())
                if any(self.lex.at(o) for o in ("&", "|", "=>", "<=", "<=>")):
                    self.lex.fail("mixed connectives need parentheses")
                return build(tuple(parts))
        if self.lex.accept("=>"):
            return Implies(left, self.unit())
        if self.lex.accept("<="):
            return Implies(self.unit(), left)
        if self.lex.accept("<=>"):
            right = self.unit()
            return And((Implies(left, right), Implies(right, left)))
        return left

    def unit(self) -> Formula:
        if self.lex.accept("~"):
            return Not(self.unit())
        if self.lex.at("!") or self.lex.at("?"):
            universal = self.lex.next()[1] == "!"
            self.lex.expect("[")
            names = [self.variable()]
            while self.lex.accept(","):
                names.append(self.variable())
            self.lex.expect("]")
            self.lex.expect(":")
            body = self.unit()
            return Forall(tuple(names), body) if universal else Exists(tuple(names), body)
        if self.lex.accept("("):
            inner = self.formula()
            self.lex.expect(")")
            return inner
        kind, value, _ = self.lex.peek()
        if kind == "defined":
            self.lex.next()
            if value == "$true":
                return VERUM
            if value == "$false":
                return FALSUM
            self.lex.fail(f"unsupported defined word {value}")
        return self.atom()

    def variable(self) -> str:
        kind, value, _ = self.lex.next()
        if kind != "upper":
            self.lex.fail("expected a variable")
        return _read_variable(value)

    def atom(self) -> Formula:
        kind, value, _ = self.lex.peek()
        if kind == "upper":
            left = self.term()
        elif kind in ("lower", "quoted"):
            self.lex.next()
            name = _unquote(kind, value)
            args = tuple(self.arguments()) if self.lex.accept("(") else ()
            if not (self.lex.at("=") or self.lex.at("!=")):
                return Rel(name, args)
            left = App(name, args) if args else Const(name)
        else:
            self.lex.fail("expected a formula")
        if self.lex.accept("="):
            return Eq(left, self.term())
        if self.lex.accept("!="):
            return Not(Eq(left, self.term()))
        self.lex.fail("expected '=' or '!='")


def read_formula(text: str) -> Formula:
    parser = _Parser(text)
    phi = parser.formula()
    if parser.lex.peek()[0] != "eof":
        parser.lex.fail("unexpected trailing tokens")
    return phi


def read_fof(text: str) -> List[Tuple[str, str, Formula]]:
    """Every fof(name, role, formula). entry of text as (name, role, formula)"""
    parser = _Parser(text)
    lex = parser.lex
    result = []
    while lex.peek()[0] != "eof":
        kind, value, _ = lex.next()
        if kind != "lower" or value != "fof":
            lex.fail("expected fof(...)")
        lex.expect("(")
        kind, name, _ = lex.next()
        if kind not in ("lower", "quoted"):
            lex.fail("expected a formula name")
        lex.expect(",")
        kind, role, _ = lex.next()
        if kind != "lower":
            lex.fail("expected a formula role")
        lex.expect(",")
        phi = parser.formula()
        lex.expect(")")
        lex.expect(".")
        result.append((_unquote(kind="quoted" if name.startswith("'") else "lower", value=name), role, phi))
    return result
