"""
Layer 2: Separation Rules and Schemes - scheme files

(scheme (name NAME)?
  (signature ...)
  (superclass FORMULA*)
  (rule (name ID)? (order 0) SENTENCE)
  (rule (name ID)? (order K) (vars (x ...)) (mu F) (eta F)
        (tau top | (conjuncts ((vars (y ...)) (gamma F) (psi F))*) | (generated NAME HINT?))))
"""

from typing import List, Optional, Tuple

from errors import SchemeError
from logic import Signature
from separation import ClosureConjunct, ClosureRule, MonadicRule, SentenceRule, SeparationRule, SeparationScheme
from sexpr import (
    SExpr,
    SList,
    expect_atom,
    expect_int,
    expect_list,
    fail,
    formula_from_sexpr,
    head,
    print_formula,
    print_signature,
    read_one,
    signature_from_sexpr,
    variable_list,
)


def _optional_name(clauses: List[SExpr]) -> Tuple[Optional[str], List[SExpr]]:
    if clauses and head(clauses[0]) == "name":
        expect_list(clauses[0], "name", 2)
        return expect_atom(clauses[0][1]), clauses[1:]
    return None, clauses


def _conjunct(expr: SExpr, sig: Signature) -> ClosureConjunct:
    lst = expect_list(expr, length=3)
    names = variable_list(expect_list(lst[0], "vars", 2)[1], allow_empty=True)
    gamma = formula_from_sexpr(expect_list(lst[1], "gamma", 2)[1], sig)
    psi = formula_from_sexpr(expect_list(lst[2], "psi", 2)[1], sig)
    try:
        return ClosureConjunct(names, gamma, psi)
    except SchemeError as e:
        raise _located(expr, e) from e


def _closure_rule(expr: SExpr, sig: Signature) -> ClosureRule:
    body = expect_list(expr, "tau", 2)[1]
    if not isinstance(body, SList):
        if expect_atom(body) != "top":
            fail(body, "expected top, (conjuncts ...) or (generated NAME)")
        return ClosureRule.top()
    kind = head(body)
    if kind == "conjuncts":
        conjuncts = [_conjunct(c, sig) for c in body.children[1:]]
        if not conjuncts:
            fail(body, "an empty conjunct list is written top")
        return ClosureRule.explicit(conjuncts)
    if kind == "generated":
        if len(body) not in (2, 3):
            fail(body, "(generated NAME HINT?) takes one or two arguments")
        from schemes import resolve_generated

        rule = resolve_generated(expect_atom(body[1]))
        hint = expect_int(body[2]) if len(body) == 3 else None
        return ClosureRule.generated(rule.generator_name, rule.generator, hint)
    fail(body, "expected top, (conjuncts ...) or (generated NAME)")


def _located(expr: SExpr, error: SchemeError) -> SchemeError:
    return SchemeError(f"{error} (at {expr.loc[0]}:{expr.loc[1]})")


def _rule(expr: SExpr, sig: Signature) -> SeparationRule:
    lst = expect_list(expr, "rule")
    name, clauses = _optional_name(lst.children[1:])
    if not clauses:
        fail(expr, "rule needs an (order K) clause")
    order = expect_int(expect_list(clauses[0], "order", 2)[1], "expected a rule order")
    if order == 0:
        if len(clauses) != 2:
            fail(expr, "an order-0 rule is (rule (order 0) SENTENCE)")
        sentence = formula_from_sexpr(clauses[1], sig)
        try:
            return SentenceRule(sentence, name)
        except SchemeError as e:
            raise _located(expr, e) from e
    if order < 0 or len(clauses) != 5:
        fail(expr, "expected (order K) (vars ...) (mu F) (eta F) (tau ...)")
    names = variable_list(expect_list(clauses[1], "vars", 2)[1], allow_empty=True)
    mu = formula_from_sexpr(expect_list(clauses[2], "mu", 2)[1], sig)
    eta = formula_from_sexpr(expect_list(clauses[3], "eta", 2)[1], sig)
    tau = _closure_rule(clauses[4], sig)
    try:
        return MonadicRule(order, names, mu, eta, tau, name)
    except SchemeError as e:
        raise _located(expr, e) from e


def scheme_from_sexpr(expr: SExpr) -> SeparationScheme:
    lst = expect_list(expr, "scheme")
    name, clauses = _optional_name(lst.children[1:])
    if len(clauses) < 2:
        fail(expr, "scheme needs (signature ...) and (superclass ...)")
    sig = signature_from_sexpr(clauses[0])
    superclass = tuple(formula_from_sexpr(f, sig) for f in expect_list(clauses[1], "superclass").children[1:])
    rules = tuple(_rule(r, sig) for r in clauses[2:])
    try:
        return SeparationScheme(sig, superclass, rules, name)
    except SchemeError as e:
        raise _located(expr, e) from e


def parse_scheme(text: str) -> SeparationScheme:
    return scheme_from_sexpr(read_one(text))


def _print_rule(rule: SeparationRule) -> List[str]:
    opening = "  (rule" + (f" (name {rule.name})" if rule.name else "")
    if isinstance(rule, SentenceRule):
        return [f"{opening} (order 0)", f"    {print_formula(rule.sentence)})"]
    lines = [
        f"{opening} (order {rule.order}) (vars ({' '.join(rule.variables)}))",
        f"    (mu {print_formula(rule.mu)})",
        f"    (eta {print_formula(rule.eta)})",
    ]
    tau = rule.tau
    if tau.is_top:
        lines.append("    (tau top))")
    elif tau.is_finite:
        lines.append("    (tau (conjuncts")
        for c in tau.conjuncts:
            lines.append(
                f"      ((vars ({' '.join(c.variables)})) (gamma {print_formula(c.gamma)}) (psi {print_formula(c.psi)}))"
            )
        lines[-1] += ")))"
    else:
        hint = f" {tau.bound_hint}" if tau.bound_hint is not None else ""
        lines.append(f"    (tau (generated {tau.generator_name}{hint})))")
    return lines


def print_scheme(scheme: SeparationScheme) -> str:
    """Scheme file text; parse_scheme(print_scheme(s)) rebuilds s"""
    lines = ["(scheme" + (f" (name {scheme.name})" if scheme.name else "")]
    lines.append(f"  {print_signature(scheme.signature)}")
    if scheme.superclass:
        lines.append("  (superclass")
        lines.extend(f"    {print_formula(f)}" for f in scheme.superclass)
        lines[-1] += ")"
    else:
        lines.append("  (superclass)")
    for rule in scheme.rules:
        lines.extend(_print_rule(rule))
    lines[-1] += ")"
    return "\n".join(lines) + "\n"
