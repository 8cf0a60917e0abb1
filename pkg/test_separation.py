"""
Tests for separation rules and schemes: validation, direct membership,
refuting indices, scheme files and the pseudoelementary translation
"""

import itertools

import pytest

import schemes
from errors import CapExceededError, FormulaSyntaxError, SchemeError
from logic import FALSUM, VERUM, Eq, FiniteStructure, Forall, Mon, Not, Rel, Signature, Var
from scheme_format import parse_scheme, print_scheme
from separation import (
    ClosureConjunct,
    ClosureRule,
    MonadicRule,
    SentenceRule,
    SeparationScheme,
    Verdict,
    check_membership_direct,
    check_pseudoelementary,
    eval_rule_direct,
    find_refuting_index,
    to_pseudoelementary,
    truncate,
)

x, y = Var("x"), Var("y")


# ---------------------------------------------------------------- rule validation

def test_conjunct_psi_must_be_quantifier_free():
    with pytest.raises(SchemeError):
        ClosureConjunct(("y",), VERUM, Forall(("z",), Mon(1, Var("z"))))


def test_conjunct_gamma_must_be_pure():
    with pytest.raises(SchemeError):
        ClosureConjunct(("y",), Mon(1, y), VERUM)


def test_conjunct_variables_must_cover_free_variables():
    with pytest.raises(SchemeError):
        ClosureConjunct(("y",), Rel("E", (y, x)), VERUM)


def test_monadic_index_bounded_by_order():
    tau = ClosureRule.explicit([ClosureConjunct(("y",), VERUM, Mon(2, y))])
    with pytest.raises(SchemeError):
        MonadicRule(1, ("x",), VERUM, VERUM, tau)


def test_sentence_rule_must_be_closed():
    with pytest.raises(SchemeError):
        SentenceRule(Rel("E", (x, x)))


def test_empty_explicit_rule_is_rejected():
    with pytest.raises(SchemeError):
        ClosureRule.explicit([])


def test_generated_rule_needs_an_index_bound():
    rule = schemes.poset_scheme(schemes.OMEGA, schemes.OMEGA).rules[0]
    with pytest.raises(SchemeError):
        rule.conjuncts()
    assert len(rule.conjuncts(4)) == 5


def test_truncate_explicit_rule(colouring2):
    tau = colouring2.rules[0].tau
    assert len(truncate(tau, 0)) == 1
    assert len(truncate(tau, 10)) == 3
    assert truncate(ClosureRule.top(), 3) == []
    with pytest.raises(SchemeError):
        truncate(tau, -1)


def test_scheme_rejects_repeated_rule_names():
    rule = SentenceRule(VERUM, name="same")
    with pytest.raises(SchemeError):
        SeparationScheme(Signature(), (), (rule, rule))


def test_positive_and_sentence_rules_are_split():
    scheme = SeparationScheme(schemes.GRAPH_SIGNATURE, (), (
        SentenceRule(Forall(("x",), Not(Rel("E", (x, x))))),
        schemes.colouring_scheme(2).rules[0],
    ))
    assert [i for i, _ in scheme.positive_rules()] == [1]
    assert [i for i, _ in scheme.sentence_rules()] == [0]
    assert scheme.rule_ids() == ["rule0", "sigma"]
    assert scheme.find_rule("sigma")[0] == 1
    assert scheme.find_rule("0")[0] == 0


def test_essential_finiteness_by_representation(colouring2):
    assert colouring2.is_essentially_finite()
    assert not schemes.poset_scheme(3, schemes.OMEGA).is_essentially_finite()
    assert schemes.poset_scheme(3, schemes.OMEGA).truncated(4).is_essentially_finite()


# ---------------------------------------------------------------- direct membership

def test_odd_cycle_is_not_two_colourable(colouring2):
    assert check_membership_direct(schemes.cycle_graph(4), colouring2) == Verdict.IN
    assert check_membership_direct(schemes.cycle_graph(5), colouring2) == Verdict.OUT


def test_triangle_needs_three_colours(colouring2, colouring3):
    K3 = schemes.complete_graph(3)
    assert check_membership_direct(K3, colouring3) == Verdict.IN
    assert check_membership_direct(K3, colouring2) == Verdict.OUT


def test_directed_edge_violates_superclass(colouring2):
    A = FiniteStructure(2, {"E": {(0, 1)}})
    assert check_membership_direct(A, colouring2) == Verdict.SUPERCLASS_VIOLATION


def test_rule_without_pending_tuples_holds_trivially():
    rule = MonadicRule(1, ("x",), FALSUM, FALSUM, ClosureRule.top())
    assert eval_rule_direct(FiniteStructure(2), rule)


def test_enumeration_cap(colouring2):
    with pytest.raises(CapExceededError):
        check_membership_direct(schemes.cycle_graph(8), colouring2, cap=6)


def test_refuting_index_on_odd_cycle(colouring2):
    rule = colouring2.rules[0]
    assert find_refuting_index(schemes.cycle_graph(5), rule, 2) == 2
    assert find_refuting_index(schemes.cycle_graph(4), rule, 2) is None


def test_refuting_index_for_generated_rule():
    rule = schemes.poset_scheme(schemes.OMEGA, schemes.OMEGA).rules[0]
    # M3: primality for binary joins (index 3) then closure under binary meets (index 4)
    assert find_refuting_index(schemes.m3_poset(), rule, 6) == 4


# ---------------------------------------------------------------- scheme files

def test_scheme_file_round_trip_for_builtins():
    for scheme in (
        schemes.colouring_scheme(2),
        schemes.harmonious_scheme(2),
        schemes.clique_cover_scheme(3),
        schemes.dupa_scheme(),
        schemes.poset_scheme(3, 2),
    ):
        assert parse_scheme(print_scheme(scheme)) == scheme


def test_scheme_file_with_generated_rule_and_hint():
    text = """
    (scheme (name filters)
      (signature (rel le 2))
      (superclass)
      (rule (name sigma) (order 1) (vars (p q))
        (mu (not (rel le p q)))
        (eta (and (mon 1 p) (not (mon 1 q))))
        (tau (generated poset-omega-filter 6))))
    """
    scheme = parse_scheme(text)
    tau = scheme.rules[0].tau
    assert not tau.is_finite
    assert tau.generator_name == "poset-omega-filter"
    assert tau.bound_hint == 6
    assert parse_scheme(print_scheme(scheme)) == scheme


def test_scheme_file_with_order_zero_rule_and_top():
    text = """
    (scheme
      (signature (rel E 2))
      (superclass (forall (x) (not (rel E x x))))
      (rule (order 0) (exists (x) (true)))
      (rule (order 1) (vars (x)) (mu (true)) (eta (mon 1 x)) (tau top)))
    """
    scheme = parse_scheme(text)
    assert isinstance(scheme.rules[0], SentenceRule)
    assert scheme.rules[1].tau.is_top
    assert scheme.rule_ids() == ["rule0", "rule1"]


def test_scheme_file_rejects_unknown_generator():
    text = "(scheme (signature (rel le 2)) (superclass) (rule (order 1) (vars (p)) (mu (true)) (eta (true)) (tau (generated nope))))"
    with pytest.raises(SchemeError):
        parse_scheme(text)


def test_scheme_file_reports_structure_errors():
    with pytest.raises(FormulaSyntaxError):
        parse_scheme("(scheme (signature (rel E 2)))")
    with pytest.raises(SchemeError, match="at 1:"):
        parse_scheme("(scheme (signature (rel E 2)) (superclass) (rule (order 0) (rel E x x)))")


# ---------------------------------------------------------------- pseudoelementary translation

def test_translation_introduces_fresh_relations(colouring2):
    theory = to_pseudoelementary(colouring2)
    assert theory.fresh_relations == (("R_sigma_1", 2), ("R_sigma_2", 2))
    assert theory.signature.relation_arity("R_sigma_1") == 2
    # eta plus one sentence per conjunct
    assert len(theory.sentences) == 4


def test_translation_renames_clashing_conjunct_variables():
    tau = ClosureRule.explicit([ClosureConjunct(("x",), VERUM, Mon(1, x))])
    rule = MonadicRule(1, ("x",), VERUM, VERUM, tau, name="s")
    theory = to_pseudoelementary(SeparationScheme(Signature(), (), (rule,)))
    outer = theory.sentences[1]
    assert isinstance(outer, Forall) and outer.variables == ("x",)
    assert outer.body.consequent.variables == ("x_1",)


def test_translation_requires_truncation():
    with pytest.raises(SchemeError):
        to_pseudoelementary(schemes.poset_scheme(schemes.OMEGA, 2))


def test_interpretation_cap(colouring2):
    with pytest.raises(CapExceededError):
        check_pseudoelementary(schemes.cycle_graph(4), to_pseudoelementary(colouring2), cap_bits=20)


def test_pseudoelementary_membership_on_small_cases(colouring2):
    theory = to_pseudoelementary(colouring2)
    assert check_pseudoelementary(schemes.path_graph(3), theory)
    assert check_pseudoelementary(schemes.edgeless_graph(2), theory)


@pytest.mark.slow
def test_pseudoelementary_agrees_with_membership(colouring2, small_graphs):
    theory = to_pseudoelementary(colouring2)
    for A in small_graphs:
        expected = check_membership_direct(A, colouring2) == Verdict.IN
        assert check_pseudoelementary(A, theory) == expected


def test_pseudoelementary_dupa():
    scheme = schemes.dupa_scheme()
    theory = to_pseudoelementary(scheme)
    assert [name for name, _ in theory.fresh_relations] == ["R_sigma1_1", "R_sigma2_1"]
    assert check_pseudoelementary(schemes.dupa_structure(2), theory)
    assert not check_pseudoelementary(schemes.dupa_structure(2, [(0, 0, 1)]), theory)


def test_all_functional_two_element_dupas_against_oracle():
    scheme = schemes.dupa_scheme()
    triples = list(itertools.product(range(2), repeat=3))
    for mask in range(1 << len(triples)):
        d = [t for n, t in enumerate(triples) if mask >> n & 1]
        if len({(a, b) for a, b, _ in d}) != len(d):
            continue
        A = schemes.dupa_structure(2, d)
        verdict = check_membership_direct(A, scheme)
        assert (verdict == Verdict.IN) == schemes.dupa_representable(A), d


def test_eq_inside_conjuncts_is_supported():
    tau = ClosureRule.explicit([ClosureConjunct(("y", "z"), Eq(y, Var("z")), VERUM)])
    rule = MonadicRule(1, ("x",), VERUM, Mon(1, x), tau)
    assert eval_rule_direct(FiniteStructure(3), rule)
