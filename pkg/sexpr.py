"""
Layer 1: Core Logic - S-expression DSL
Reader for S-expressions with source locations, plus the formula,
term and signature grammar built on top of it
"""

import re
from typing import List, Optional, Sequence, Tuple, Union

from errors import ArityError, FormulaSyntaxError, SignatureError
from logic import (
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
    Signature,
    Term,
    Var,
    Verum,
)


class Atom:
    def __init__(self, name: str, loc: Tuple[int, int] = (0, 0)):
        self.name = name
        self.loc = loc

    def __repr__(self):
        return self.name


class SList:
    def __init__(self, children: List["SExpr"], loc: Tuple[int, int] = (0, 0)):
        self.children = children
        self.loc = loc

    def __repr__(self):
        return "({})".format(" ".join(map(repr, self.children)))

    def __len__(self):
        return len(self.children)

    def __getitem__(self, i):
        return self.children[i]


SExpr = Union[Atom, SList]


class Input:
    def __init__(self, s: str):
        self.string = s
        self.index = 0
        self.line = 1
        self.column = 1

    def matches(self, r) -> bool:
        return r.match(self.string, self.index) is not None

    def consume(self, r, desc: str = "expected token not found") -> str:
        m = r.match(self.string, self.index)
        if m is None:
            self.error(desc)
        consumed = m.group()
        self.index += len(consumed)
        # keep track of physical source lines
        lines = consumed.count("\n")
        if lines > 0:
            self.line += lines
            self.column = len(consumed) - consumed.rfind("\n")
        else:
            self.column += len(consumed)
        return consumed

    def loc(self) -> Tuple[int, int]:
        return (self.line, self.column)

    def eof(self) -> bool:
        return self.index == len(self.string)

    def error(self, desc: str):
        raise FormulaSyntaxError(desc, self.line, self.column)


ws = re.compile(r"\s+")
lparen = re.compile(r"\(")
rparen = re.compile(r"\)")
semicolon = re.compile(r";[^\n]*")
ident = re.compile(r"[A-Za-z0-9_!'.+\-*/<>=?~&^|]+")


def _p_recur(inp: Input) -> List[SExpr]:
    elems: List[SExpr] = []
    while True:
        if inp.matches(lparen):
            start = inp.loc()
            inp.consume(lparen)
            elems.append(SList(_p_recur(inp), start))
            inp.consume(rparen, "expected )")
        elif inp.matches(ident):
            loc = inp.loc()
            elems.append(Atom(inp.consume(ident), loc))
        elif inp.matches(semicolon):
            inp.consume(semicolon)
        elif inp.matches(ws):
            inp.consume(ws)
        else:
            return elems


def read_sexprs(text: str) -> List[SExpr]:
    """All top-level S-expressions of text; ';' starts a comment"""
    inp = Input(text)
    result = _p_recur(inp)
    if not inp.eof():
        inp.error("unexpected trailing tokens")
    return result


def read_one(text: str) -> SExpr:
    exprs = read_sexprs(text)
    if len(exprs) != 1:
        raise FormulaSyntaxError(f"expected exactly one expression, found {len(exprs)}", 1, 1)
    return exprs[0]


# ============================================================================
# Grammar helpers
# ============================================================================

def fail(expr: SExpr, desc: str):
    raise FormulaSyntaxError(desc, *expr.loc)


def head(expr: SExpr) -> Optional[str]:
    """Keyword of a list whose first element is an atom"""
    if isinstance(expr, SList) and expr.children and isinstance(expr[0], Atom):
        return expr[0].name
    return None


def expect_list(expr: SExpr, keyword: Optional[str] = None, length: Optional[int] = None) -> SList:
    if not isinstance(expr, SList):
        fail(expr, f"expected ({keyword} ...)" if keyword else "expected a list")
    if keyword is not None and head(expr) != keyword:
        fail(expr, f"expected ({keyword} ...)")
    if length is not None and len(expr) != length:
        fail(expr, f"({head(expr) or ''} ...) takes {length - 1} argument(s)")
    return expr


def expect_atom(expr: SExpr, desc: str = "expected a name") -> str:
    if not isinstance(expr, Atom):
        fail(expr, desc)
    return expr.name


def expect_int(expr: SExpr, desc: str = "expected an integer") -> int:
    name = expect_atom(expr, desc)
    if not re.fullmatch(r"-?[0-9]+", name):
        fail(expr, desc)
    return int(name)


_KEYWORDS = {"true", "false", "rel", "=", "mon", "not", "and", "or", "implies", "forall", "exists", "const", "fn"}
_VARIABLE = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*")


def expect_variable(expr: SExpr) -> str:
    name = expect_atom(expr, "expected a variable")
    if name in _KEYWORDS or not _VARIABLE.fullmatch(name):
        fail(expr, f"'{name}' is not a variable name")
    return name


def variable_list(expr: SExpr, allow_empty: bool = False) -> Tuple[str, ...]:
    lst = expect_list(expr)
    names = tuple(expect_variable(c) for c in lst.children)
    if not names and not allow_empty:
        fail(expr, "expected at least one variable")
    if len(set(names)) != len(names):
        fail(expr, "variable list repeats a name")
    return names


# ============================================================================
# Terms and formulas
# ============================================================================

def _located(expr: SExpr, message: str) -> str:
    return f"{message} (at {expr.loc[0]}:{expr.loc[1]})"


def term_from_sexpr(expr: SExpr, sig: Optional[Signature] = None) -> Term:
    if isinstance(expr, Atom):
        return Var(expect_variable(expr))
    keyword = head(expr)
    if keyword == "const":
        expect_list(expr, "const", 2)
        name = expect_atom(expr[1])
        if sig is not None and not sig.has_constant(name):
            raise SignatureError(_located(expr, f"undeclared constant {name}"))
        return Const(name)
    if keyword == "fn":
        if len(expr) < 3:
            fail(expr, "(fn NAME term+) needs at least one argument")
        name = expect_atom(expr[1])
        args = tuple(term_from_sexpr(a, sig) for a in expr.children[2:])
        if sig is not None:
            arity = sig.function_arity(name)
            if arity is None:
                raise SignatureError(_located(expr, f"undeclared function symbol {name}"))
            if arity != len(args):
                raise ArityError(_located(expr, f"function {name} has arity {arity}, applied to {len(args)} arguments"))
        return App(name, args)
    fail(expr, "expected a term")


def formula_from_sexpr(expr: SExpr, sig: Optional[Signature] = None) -> Formula:
    keyword = head(expr)
    if keyword is None:
        fail(expr, "expected a formula")
    args = expr.children[1:]

    if keyword in ("true", "false"):
        expect_list(expr, keyword, 1)
        return Verum() if keyword == "true" else Falsum()
    if keyword == "rel":
        if not args:
            fail(expr, "(rel NAME term*) needs a relation name")
        name = expect_atom(args[0], "expected a relation name")
        terms = tuple(term_from_sexpr(t, sig) for t in args[1:])
        if sig is not None:
            arity = sig.relation_arity(name)
            if arity is None:
                raise SignatureError(_located(expr, f"undeclared relation symbol {name}"))
            if arity != len(terms):
                raise ArityError(_located(expr, f"relation {name} has arity {arity}, applied to {len(terms)} arguments"))
        return Rel(name, terms)
    if keyword == "=":
        expect_list(expr, "=", 3)
        return Eq(term_from_sexpr(args[0], sig), term_from_sexpr(args[1], sig))
    if keyword == "mon":
        expect_list(expr, "mon", 3)
        index = expect_int(args[0], "expected a monadic index")
        if index < 1:
            fail(args[0], "monadic index must be >= 1")
        return Mon(index, term_from_sexpr(args[1], sig))
    if keyword == "not":
        expect_list(expr, "not", 2)
        return Not(formula_from_sexpr(args[0], sig))
    if keyword in ("and", "or"):
        parts = tuple(formula_from_sexpr(a, sig) for a in args)
        return And(parts) if keyword == "and" else Or(parts)
    if keyword == "implies":
        expect_list(expr, "implies", 3)
        return Implies(formula_from_sexpr(args[0], sig), formula_from_sexpr(args[1], sig))
    if keyword in ("forall", "exists"):
        expect_list(expr, keyword, 3)
        names = variable_list(args[0])
        body = formula_from_sexpr(args[1], sig)
        return Forall(names, body) if keyword == "forall" else Exists(names, body)
    fail(expr, f"unknown connective '{keyword}'")


def parse_formula(text: str, sig: Optional[Signature] = None) -> Formula:
    """Parse one formula; with sig, undeclared symbols and arity mismatches are errors"""
    return formula_from_sexpr(read_one(text), sig)


def parse_term(text: str, sig: Optional[Signature] = None) -> Term:
    return term_from_sexpr(read_one(text), sig)


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return f"(const {t.name})"
    return "(fn {} {})".format(t.function, " ".join(print_term(a) for a in t.args))


def _join(keyword: str, items: Sequence[str]) -> str:
    return "(" + " ".join((keyword,) + tuple(items)) + ")"


def print_formula(phi: Formula) -> str:
    """Canonical single-line S-expression"""
    out: List[str] = []
    _emit(phi, out)
    return "".join(out)


def _emit(phi: Formula, out: List[str]) -> None:
    # writes into a shared buffer; generated sentences can be very large
    if isinstance(phi, Verum):
        out.append("(true)")
    elif isinstance(phi, Falsum):
        out.append("(false)")
    elif isinstance(phi, Rel):
        out.append(_join("rel", (phi.name,) + tuple(print_term(t) for t in phi.args)))
    elif isinstance(phi, Eq):
        out.append(_join("=", (print_term(phi.left), print_term(phi.right))))
    elif isinstance(phi, Mon):
        out.append(_join("mon", (str(phi.index), print_term(phi.term))))
    elif isinstance(phi, Not):
        out.append("(not ")
        _emit(phi.body, out)
        out.append(")")
    elif isinstance(phi, (And, Or)):
        out.append("(and" if isinstance(phi, And) else "(or")
        for part in phi.parts:
            out.append(" ")
            _emit(part, out)
        out.append(")")
    elif isinstance(phi, Implies):
        out.append("(implies ")
        _emit(phi.antecedent, out)
        out.append(" ")
        _emit(phi.consequent, out)
        out.append(")")
    else:
        keyword = "forall" if isinstance(phi, Forall) else "exists"
        out.append(f"({keyword} ({' '.join(phi.variables)}) ")
        _emit(phi.body, out)
        out.append(")")


# ============================================================================
# Signatures
# ============================================================================

def signature_from_sexpr(expr: SExpr) -> Signature:
    lst = expect_list(expr, "signature")
    relations, constants, functions = [], [], []
    for decl in lst.children[1:]:
        kind = head(decl)
        if kind == "rel":
            expect_list(decl, "rel", 3)
            arity = expect_int(decl[2], "expected a relation arity")
            if arity < 0:
                fail(decl[2], "arity must be non-negative")
            relations.append((expect_atom(decl[1]), arity))
        elif kind == "const":
            expect_list(decl, "const", 2)
            constants.append(expect_atom(decl[1]))
        elif kind == "fn":
            expect_list(decl, "fn", 3)
            arity = expect_int(decl[2], "expected a function arity")
            if arity < 1:
                fail(decl[2], "function arity must be >= 1")
            functions.append((expect_atom(decl[1]), arity))
        else:
            fail(decl, "expected (rel NAME ARITY), (const NAME) or (fn NAME ARITY)")
    return Signature(tuple(relations), tuple(constants), tuple(functions))


def parse_signature(text: str) -> Signature:
    return signature_from_sexpr(read_one(text))


def print_signature(sig: Signature) -> str:
    decls = [f"(rel {n} {a})" for n, a in sig.relations]
    decls += [f"(const {n})" for n in sig.constants]
    decls += [f"(fn {n} {a})" for n, a in sig.functions]
    return _join("signature", decls)
