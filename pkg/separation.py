"""
Layer 2: Separation Rules and Schemes
Closure rules, separation rules and schemes; direct second-order membership
checking by subset enumeration; the pseudoelementary translation
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from config import resolve_cap
from errors import CapExceededError, SchemeError
from logic import (
    Formula,
    FiniteStructure,
    Implies,
    Mon,
    Rel,
    Signature,
    Var,
    check_formula,
    compile_formula,
    eval_formula,
    forall,
    free_variables,
    is_pure,
    is_quantifier_free,
    map_atoms,
    monadic_indices,
    rename_variables,
    subformulas,
)

logger = logging.getLogger(__name__)


# ============================================================================
# Closure rules
# ============================================================================

@dataclass(frozen=True)
class ClosureConjunct:
    """One conjunct of a closure rule, read as forall y (gamma -> psi)"""

    variables: Tuple[str, ...]
    gamma: Formula
    psi: Formula

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(set(self.variables)) != len(self.variables):
            raise SchemeError(f"closure conjunct repeats a variable: {self.variables}")
        if not is_pure(self.gamma):
            raise SchemeError("gamma of a closure conjunct must not contain monadic atoms")
        if not is_quantifier_free(self.psi):
            raise SchemeError("psi of a closure conjunct must be quantifier-free")
        stray = (free_variables(self.gamma) | free_variables(self.psi)) - set(self.variables)
        if stray:
            raise SchemeError(f"closure conjunct has unbound variable(s) {', '.join(sorted(stray))}")

    def as_formula(self) -> Formula:
        return forall(self.variables, Implies(self.gamma, self.psi))


ConjunctGenerator = Callable[[int], ClosureConjunct]


@dataclass(frozen=True)
class ClosureRule:
    """top, a non-empty explicit conjunct list, or a generated stream index -> conjunct"""

    kind: str
    conjuncts: Tuple[ClosureConjunct, ...] = ()
    generator_name: Optional[str] = None
    generator: Optional[ConjunctGenerator] = field(default=None, compare=False, repr=False)
    bound_hint: Optional[int] = None

    TOP = "top"
    EXPLICIT = "explicit"
    GENERATED = "generated"

    @classmethod
    def top(cls) -> "ClosureRule":
        return cls(cls.TOP)

    @classmethod
    def explicit(cls, conjuncts: Sequence[ClosureConjunct]) -> "ClosureRule":
        conjuncts = tuple(conjuncts)
        if not conjuncts:
            raise SchemeError("an explicit closure rule needs at least one conjunct; use top instead")
        return cls(cls.EXPLICIT, conjuncts)

    @classmethod
    def generated(cls, name: str, generator: ConjunctGenerator, bound_hint: Optional[int] = None) -> "ClosureRule":
        return cls(cls.GENERATED, (), name, generator, bound_hint)

    @property
    def is_top(self) -> bool:
        return self.kind == self.TOP

    @property
    def is_finite(self) -> bool:
        return self.kind != self.GENERATED

    def default_max_index(self) -> Optional[int]:
        """Last explicit index; None for generated rules, which always need an explicit bound"""
        if self.kind == self.EXPLICIT:
            return len(self.conjuncts) - 1
        if self.kind == self.TOP:
            return 0
        return None


def truncate(tau: ClosureRule, max_index: int) -> List[ClosureConjunct]:
    """Conjuncts with index <= max_index"""
    if max_index < 0:
        raise SchemeError(f"max index must be >= 0, got {max_index}")
    if tau.kind == ClosureRule.TOP:
        return []
    if tau.kind == ClosureRule.EXPLICIT:
        return list(tau.conjuncts[: max_index + 1])
    return [tau.generator(j) for j in range(max_index + 1)]


# ============================================================================
# Separation rules and schemes
# ============================================================================

@dataclass(frozen=True)
class SentenceRule:
    """Order-0 separation rule: a pure first-order sentence"""

    sentence: Formula
    name: Optional[str] = None

    order = 0

    def __post_init__(self):
        if not is_pure(self.sentence):
            raise SchemeError("an order-0 rule must be a pure sentence")
        if free_variables(self.sentence):
            raise SchemeError("an order-0 rule must not have free variables")


@dataclass(frozen=True)
class MonadicRule:
    """Positive-order rule: forall x (mu -> exists C_1..C_K (eta and tau))"""

    order: int
    variables: Tuple[str, ...]
    mu: Formula
    eta: Formula
    tau: ClosureRule
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.order < 1:
            raise SchemeError(f"a monadic rule needs order >= 1, got {self.order}")
        if len(set(self.variables)) != len(self.variables):
            raise SchemeError(f"round-0 variables repeat a name: {self.variables}")
        if not is_pure(self.mu):
            raise SchemeError("mu must not contain monadic atoms")
        if not is_quantifier_free(self.eta):
            raise SchemeError("eta must be quantifier-free")
        stray = (free_variables(self.mu) | free_variables(self.eta)) - set(self.variables)
        if stray:
            raise SchemeError(f"mu/eta use variable(s) {', '.join(sorted(stray))} outside the round-0 variables")
        self._check_indices(self.eta)
        for conjunct in self.tau.conjuncts:
            self._check_indices(conjunct.psi)

    def _check_indices(self, phi: Formula) -> None:
        too_big = [k for k in monadic_indices(phi) if k > self.order]
        if too_big:
            raise SchemeError(f"monadic index {max(too_big)} exceeds the rule order {self.order}")

    def resolve_max_index(self, max_index: Optional[int]) -> int:
        if max_index is not None:
            return max_index
        default = self.tau.default_max_index()
        if default is None:
            raise SchemeError(f"generated closure rule {self.tau.generator_name} needs an explicit max index")
        return default

    def conjuncts(self, max_index: Optional[int] = None) -> List[ClosureConjunct]:
        result = truncate(self.tau, self.resolve_max_index(max_index))
        if not self.tau.is_finite:
            for conjunct in result:
                self._check_indices(conjunct.psi)
        return result

    def truncated(self, max_index: int) -> "MonadicRule":
        """Same rule with a generated closure rule replaced by its first conjuncts"""
        if self.tau.is_finite:
            return self
        return MonadicRule(self.order, self.variables, self.mu, self.eta,
                           ClosureRule.explicit(self.conjuncts(max_index)), self.name)


SeparationRule = Union[SentenceRule, MonadicRule]


class Verdict(str, Enum):
    IN = "in"
    OUT = "out"
    SUPERCLASS_VIOLATION = "superclass-violation"


@dataclass(frozen=True)
class SeparationScheme:
    """Signature, superclass theory for the ambient class, and separation rules"""

    signature: Signature
    superclass: Tuple[Formula, ...] = ()
    rules: Tuple[SeparationRule, ...] = ()
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "superclass", tuple(self.superclass))
        object.__setattr__(self, "rules", tuple(self.rules))
        self.validate()

    def validate(self) -> None:
        for sentence in self.superclass:
            if not is_pure(sentence) or free_variables(sentence):
                raise SchemeError("superclass axioms must be pure sentences")
            check_formula(sentence, self.signature)
        ids = self.rule_ids()
        if len(set(ids)) != len(ids):
            raise SchemeError(f"rule names must be distinct: {ids}")
        for rule in self.rules:
            formulas = [rule.sentence] if isinstance(rule, SentenceRule) else (
                [rule.mu, rule.eta] + [f for c in rule.tau.conjuncts for f in (c.gamma, c.psi)]
            )
            for phi in formulas:
                check_formula(phi, self.signature)

    def rule_id(self, index: int) -> str:
        return self.rules[index].name or f"rule{index}"

    def rule_ids(self) -> List[str]:
        return [self.rule_id(i) for i in range(len(self.rules))]

    def find_rule(self, ident: str) -> Tuple[int, SeparationRule]:
        """Look a rule up by name or by position"""
        for index in range(len(self.rules)):
            if self.rule_id(index) == ident:
                return index, self.rules[index]
        if ident.isdigit() and int(ident) < len(self.rules):
            return int(ident), self.rules[int(ident)]
        raise SchemeError(f"no rule '{ident}' (have {', '.join(self.rule_ids())})")

    def positive_rules(self) -> List[Tuple[int, MonadicRule]]:
        return [(i, r) for i, r in enumerate(self.rules) if isinstance(r, MonadicRule)]

    def sentence_rules(self) -> List[Tuple[int, SentenceRule]]:
        return [(i, r) for i, r in enumerate(self.rules) if isinstance(r, SentenceRule)]

    def is_essentially_finite(self) -> bool:
        """By representation: no generated closure rules"""
        return all(rule.tau.is_finite for _, rule in self.positive_rules())

    def truncated(self, max_index: int) -> "SeparationScheme":
        rules = tuple(r.truncated(max_index) if isinstance(r, MonadicRule) else r for r in self.rules)
        return SeparationScheme(self.signature, self.superclass, rules, self.name)


# ============================================================================
# Direct second-order checking
# ============================================================================

def _subsets(n: int) -> List[FrozenSet[int]]:
    return [frozenset(e for e in range(n) if mask >> e & 1) for mask in range(1 << n)]


def eval_rule_direct(
    A: FiniteStructure,
    sigma: SeparationRule,
    max_index: Optional[int] = None,
    cap: Optional[int] = None,
) -> bool:
    """A satisfies sigma, with a closure rule truncated at max_index"""
    if isinstance(sigma, SentenceRule):
        return eval_formula(A, {}, sigma.sentence)

    cap = resolve_cap(cap, "enumeration_cap")
    if A.size > cap:
        raise CapExceededError("universe size", A.size, cap)

    universe = A.universe
    mu = compile_formula(A, sigma.mu, sigma.variables)
    eta = compile_formula(A, sigma.eta, sigma.variables)
    pending = [a for a in itertools.product(universe, repeat=len(sigma.variables)) if mu(a)]
    if not pending:
        return True

    # gamma does not mention C_k, so its satisfying tuples are fixed up front
    obligations = []
    for conjunct in sigma.conjuncts(max_index):
        gamma = compile_formula(A, conjunct.gamma, conjunct.variables)
        tuples = [b for b in itertools.product(universe, repeat=len(conjunct.variables)) if gamma(b)]
        obligations.append((compile_formula(A, conjunct.psi, conjunct.variables), tuples))

    checked = 0
    for sets in itertools.product(_subsets(A.size), repeat=sigma.order):
        checked += 1
        if not all(psi(b, sets) for psi, tuples in obligations for b in tuples):
            continue
        pending = [a for a in pending if not eta(a, sets)]
        if not pending:
            logger.debug("rule satisfied after %d subset tuples", checked)
            return True
    logger.debug("no witness among %d subset tuples", checked)
    return False


def find_refuting_index(
    A: FiniteStructure,
    sigma: MonadicRule,
    index_limit: int,
    cap: Optional[int] = None,
) -> Optional[int]:
    """Least n <= index_limit with A failing sigma truncated at n, else None"""
    for n in range(index_limit + 1):
        if not eval_rule_direct(A, sigma, n, cap):
            return n
    return None


def check_superclass(A: FiniteStructure, sentences: Sequence[Formula]) -> bool:
    return all(eval_formula(A, {}, phi) for phi in sentences)


def check_membership_direct(
    A: FiniteStructure,
    scheme: SeparationScheme,
    max_index: Optional[int] = None,
    cap: Optional[int] = None,
) -> Verdict:
    A.conforms_to(scheme.signature)
    if not check_superclass(A, scheme.superclass):
        return Verdict.SUPERCLASS_VIOLATION
    for index, rule in enumerate(scheme.rules):
        if not eval_rule_direct(A, rule, max_index, cap):
            logger.info("structure fails rule %s", scheme.rule_id(index))
            return Verdict.OUT
    return Verdict.IN


# ============================================================================
# Pseudoelementary translation
# ============================================================================

@dataclass(frozen=True)
class ExtendedTheory:
    """Theory over the original signature plus fresh (N+1)-ary relations per positive rule"""

    signature: Signature
    sentences: Tuple[Formula, ...]
    fresh_relations: Tuple[Tuple[str, int], ...]
    superclass: Tuple[Formula, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "fresh_relations", tuple(self.fresh_relations))
        object.__setattr__(self, "superclass", tuple(self.superclass))
        names = [n for n, _ in self.fresh_relations]
        if len(set(names)) != len(names):
            raise SchemeError("fresh relation symbols must be pairwise distinct")


def _fresh_symbol(base: str, taken: set) -> str:
    name = base
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def _hat(phi: Formula, fresh: Sequence[str], xs: Tuple[Var, ...]) -> Formula:
    """C_k(t) becomes R_k(x, t)"""
    return map_atoms(phi, lambda atom: Rel(fresh[atom.index - 1], xs + (atom.term,)) if isinstance(atom, Mon) else atom)


def to_pseudoelementary(scheme: SeparationScheme) -> ExtendedTheory:
    if not scheme.is_essentially_finite():
        raise SchemeError("generated closure rules must be truncated before the pseudoelementary translation")

    taken = set(scheme.signature.symbol_names())
    sentences: List[Formula] = []
    fresh_relations: List[Tuple[str, int]] = []

    for index, rule in enumerate(scheme.rules):
        if isinstance(rule, SentenceRule):
            sentences.append(rule.sentence)
            continue
        rule_id = scheme.rule_id(index)
        arity = len(rule.variables) + 1
        fresh = [_fresh_symbol(f"R_{rule_id}_{k}", taken) for k in range(1, rule.order + 1)]
        fresh_relations.extend((name, arity) for name in fresh)
        xs = tuple(Var(x) for x in rule.variables)

        sentences.append(forall(rule.variables, Implies(rule.mu, _hat(rule.eta, fresh, xs))))
        for conjunct in rule.conjuncts():
            # conjunct variables must not capture the round-0 variables inside R_k(x, t)
            clashes = {y: y for y in conjunct.variables if y in rule.variables}
            used = set(rule.variables) | set(conjunct.variables)
            for y in clashes:
                suffix = 1
                while f"{y}_{suffix}" in used:
                    suffix += 1
                clashes[y] = f"{y}_{suffix}"
                used.add(clashes[y])
            ys = tuple(clashes.get(y, y) for y in conjunct.variables)
            gamma = rename_variables(conjunct.gamma, clashes)
            psi = rename_variables(conjunct.psi, clashes)
            inner = forall(ys, Implies(gamma, _hat(psi, fresh, xs)))
            sentences.append(forall(rule.variables, Implies(rule.mu, inner)))

    return ExtendedTheory(
        scheme.signature.extend(fresh_relations),
        tuple(sentences),
        tuple(fresh_relations),
        scheme.superclass,
    )


def _relation_symbols(phi: Formula) -> FrozenSet[str]:
    return frozenset(node.name for node in subformulas(phi) if isinstance(node, Rel))


def check_pseudoelementary(A: FiniteStructure, theory: ExtendedTheory, cap_bits: Optional[int] = None) -> bool:
    """Some interpretation of the fresh relations makes every sentence true in A"""
    arities = dict(theory.fresh_relations)
    total_bits = sum(A.size ** a for a in arities.values())
    cap_bits = resolve_cap(cap_bits, "interpretation_bits")
    if total_bits > cap_bits:
        raise CapExceededError("fresh-relation tuple count", total_bits, cap_bits)

    interpretation: Dict[str, FrozenSet[Tuple[int, ...]]] = {name: frozenset() for name in arities}
    used = [(phi, _relation_symbols(phi) & arities.keys()) for phi in theory.sentences]

    for phi, symbols in used:
        if not symbols and not eval_formula(A, {}, phi):
            return False

    # sentences sharing fresh symbols are solved together; disjoint groups independently
    groups: List[Tuple[set, List[Formula]]] = []
    for phi, symbols in used:
        if not symbols:
            continue
        merged = (set(symbols), [phi])
        for group in [g for g in groups if g[0] & symbols]:
            groups.remove(group)
            merged[0].update(group[0])
            merged[1].extend(group[1])
        groups.append(merged)

    for symbols, sentences in groups:
        order = sorted(symbols)
        # check each sentence as soon as every fresh symbol it mentions is assigned
        checks: List[List] = [[] for _ in order]
        for phi in sentences:
            last = max(order.index(s) for s in _relation_symbols(phi) & symbols)
            checks[last].append(compile_formula(A, phi, (), interpretation))
        candidates = [
            list(itertools.product(A.universe, repeat=arities[name])) for name in order
        ]
        if not _search(order, candidates, checks, interpretation, 0):
            logger.info("no interpretation of %s satisfies its sentences", ", ".join(order))
            return False
    return True


def _search(order, candidates, checks, interpretation, depth: int) -> bool:
    if depth == len(order):
        return True
    name, tuples = order[depth], candidates[depth]
    for mask in range(1 << len(tuples)):
        interpretation[name] = frozenset(t for bit, t in enumerate(tuples) if mask >> bit & 1)
        if all(check() for check in checks[depth]) and _search(order, candidates, checks, interpretation, depth + 1):
            return True
    return False
