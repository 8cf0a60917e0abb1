"""
Layer 4: Axiom Generation
Compiles a separation rule into first-order sentences beta-hat(r, i) that hold
in a structure exactly when exists has an r-strategy in its game with
conjunct indices <= i. Monadic atoms are eliminated by padding with
equalities against the variables already decided into each set.

Fresh variables are named role_rule_depth_conjunct_pos:
x_<rule>_0_0_<n> for round-0 variables, y_<rule>_<d>_<j>_<m> for the
variables of conjunct j at recursion depth d, w_... for bound variables
inside mu and gamma.
"""

import itertools
import logging
from dataclasses import dataclass
from math import comb
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from config import resolve_cap
from errors import FreshnessError, SchemeError, SizeGuardError
from logic import (
    And,
    Eq,
    Formula,
    Implies,
    Mon,
    Not,
    Var,
    conjunction,
    disjunction,
    forall,
    is_quantifier_free,
    map_atoms,
    node_count,
    rename_variables,
    simplify,
    subformulas,
)
from separation import ClosureConjunct, MonadicRule, SentenceRule, SeparationRule, SeparationScheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VarSetVector:
    """Variables standing for elements decided into (inside) or out of (outside) each C_k"""

    inside: Tuple[Tuple[str, ...], ...]
    outside: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "inside", tuple(tuple(z) for z in self.inside))
        object.__setattr__(self, "outside", tuple(tuple(z) for z in self.outside))
        if len(self.inside) != len(self.outside):
            raise ValueError("inside and outside need the same number of sets")

    @classmethod
    def empty(cls, order: int) -> "VarSetVector":
        return cls(((),) * order, ((),) * order)

    @property
    def order(self) -> int:
        return len(self.inside)

    def names(self) -> frozenset:
        return frozenset(itertools.chain(*self.inside, *self.outside))


@dataclass(frozen=True)
class ChoiceFunction:
    """f : Y x {1..K} -> {0,1}, bits stored row-major over (variable position, k)"""

    variables: Tuple[str, ...]
    order: int
    bits: Tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != len(self.variables) * self.order:
            raise ValueError("a choice function must be total on Y x {1..K}")

    def __call__(self, y: str, k: int) -> int:
        return self.bits[self.variables.index(y) * self.order + (k - 1)]


def choice_functions(Y: Sequence[str], order: int) -> Iterator[ChoiceFunction]:
    """All of F^K_Y, lexicographic over (variable position, k)"""
    Y = tuple(Y)
    for bits in itertools.product((0, 1), repeat=len(Y) * order):
        yield ChoiceFunction(Y, order, bits)


def delta(zs: VarSetVector, Y: Sequence[str], f: ChoiceFunction) -> VarSetVector:
    clash = set(Y) & zs.names()
    if clash:
        raise FreshnessError(f"variable(s) {', '.join(sorted(clash))} are already in use")
    inside = tuple(z + tuple(y for y in Y if f(y, k) == 1) for k, z in enumerate(zs.inside, start=1))
    outside = tuple(z + tuple(y for y in Y if f(y, k) == 0) for k, z in enumerate(zs.outside, start=1))
    return VarSetVector(inside, outside)


def disjointness_formula(zs: VarSetVector) -> Formula:
    """Conjunction of not(z = w) for z in Z_k and w in the matching outside set"""
    return conjunction(
        Not(Eq(Var(z), Var(w)))
        for inside, outside in zip(zs.inside, zs.outside)
        for z in inside
        for w in outside
    )


def pad_translate(psi: Formula, zs: VarSetVector) -> Formula:
    """Replace C_k(t) by the disjunction of t = z over z in Z_k"""
    if not is_quantifier_free(psi):
        raise SchemeError("padding needs a quantifier-free formula")

    def replace(atom):
        if not isinstance(atom, Mon):
            return atom
        if atom.index > zs.order:
            raise SchemeError(f"monadic index {atom.index} exceeds the {zs.order} variable set(s)")
        return disjunction(Eq(atom.term, Var(z)) for z in zs.inside[atom.index - 1])

    return map_atoms(psi, replace)


# ============================================================================
# Size estimation
# ============================================================================

def _pad_size(psi: Formula, inside_sizes: Sequence[int]) -> int:
    total = 0
    for node in subformulas(psi):
        if isinstance(node, Mon):
            s = inside_sizes[node.index - 1]
            total += 1 + s if s >= 2 else 1
        else:
            total += 1
    return total


def _disjointness_size(inside_sizes: Sequence[int], outside_sizes: Sequence[int]) -> int:
    pairs = sum(a * b for a, b in zip(inside_sizes, outside_sizes))
    if pairs == 0:
        return 1
    return 2 if pairs == 1 else 1 + 2 * pairs


def _branch_profiles(M: int, order: int) -> Iterator[Tuple[Tuple[int, ...], int]]:
    """Per-k counts of variables sent inside, with the number of choice functions producing them"""
    for counts in itertools.product(range(M + 1), repeat=order):
        multiplicity = 1
        for c in counts:
            multiplicity *= comb(M, c)
        yield counts, multiplicity


class _SizeEstimator:
    def __init__(self, sigma: MonadicRule, conjuncts: Sequence[ClosureConjunct]):
        self.sigma = sigma
        self.conjuncts = conjuncts
        self._memo: Dict[Tuple, int] = {}

    def _branches(self, M: int, psi: Formula, rounds: int, ins: Tuple[int, ...], outs: Tuple[int, ...]) -> int:
        K = self.sigma.order
        total = 0
        for counts, multiplicity in _branch_profiles(M, K):
            new_in = tuple(a + c for a, c in zip(ins, counts))
            new_out = tuple(a + M - c for a, c in zip(outs, counts))
            total += multiplicity * (1 + _pad_size(psi, new_in) + self.alpha(rounds, new_in, new_out))
        return total + (1 if 2 ** (K * M) > 1 else 0)

    def alpha(self, rounds: int, ins: Tuple[int, ...], outs: Tuple[int, ...]) -> int:
        if rounds == 0:
            return _disjointness_size(ins, outs)
        key = (rounds, ins, outs)
        if key not in self._memo:
            parts = []
            for c in self.conjuncts:
                M = len(c.variables)
                parts.append((1 if M else 0) + 1 + node_count(c.gamma) + self._branches(M, c.psi, rounds - 1, ins, outs))
            if not parts:
                size = 1
            else:
                size = sum(parts) + (1 if len(parts) > 1 else 0)
            self._memo[key] = size
        return self._memo[key]

    def beta(self, rounds: int, ins: Tuple[int, ...], outs: Tuple[int, ...]) -> int:
        N = len(self.sigma.variables)
        return (1 if N else 0) + 1 + node_count(self.sigma.mu) + self._branches(N, self.sigma.eta, rounds, ins, outs)


def estimate_size(sigma: SeparationRule, rounds: int, max_index: Optional[int] = None,
                  zs: Optional[VarSetVector] = None) -> int:
    """Node count of beta(sigma, zs, rounds, max_index), computed without building it"""
    if isinstance(sigma, SentenceRule):
        return node_count(sigma.sentence)
    zs = zs or VarSetVector.empty(sigma.order)
    estimator = _SizeEstimator(sigma, sigma.conjuncts(max_index))
    ins = tuple(len(z) for z in zs.inside)
    outs = tuple(len(z) for z in zs.outside)
    return estimator.beta(rounds, ins, outs)


# ============================================================================
# Construction
# ============================================================================

class _AxiomBuilder:
    def __init__(self, sigma: MonadicRule, max_index: Optional[int], rule_index: int):
        self.sigma = sigma
        self.rule_index = rule_index
        self.conjuncts = sigma.conjuncts(max_index)
        self._instances: Dict[Tuple[int, int], Tuple[Tuple[str, ...], Formula, Formula]] = {}

    def _instance(self, depth: int, j: int) -> Tuple[Tuple[str, ...], Formula, Formula]:
        key = (depth, j)
        if key not in self._instances:
            c = self.conjuncts[j]
            r = self.rule_index
            ys = tuple(f"y_{r}_{depth}_{j}_{m}" for m in range(len(c.variables)))
            mapping = dict(zip(c.variables, ys))
            bound = (f"w_{r}_{depth}_{j}_{p}" for p in itertools.count())
            self._instances[key] = (ys, rename_variables(c.gamma, mapping, bound), rename_variables(c.psi, mapping))
        return self._instances[key]

    def _branches(self, zs: VarSetVector, Y: Tuple[str, ...], psi: Formula, rounds: int, depth: int) -> Formula:
        branches = []
        for f in choice_functions(Y, self.sigma.order):
            moved = delta(zs, Y, f)
            branches.append(And((pad_translate(psi, moved), self.alpha(moved, rounds, depth))))
        return disjunction(branches)

    def alpha(self, zs: VarSetVector, rounds: int, depth: int) -> Formula:
        if rounds == 0:
            return disjointness_formula(zs)
        parts = []
        for j in range(len(self.conjuncts)):
            ys, gamma, psi = self._instance(depth, j)
            parts.append(forall(ys, Implies(gamma, self._branches(zs, ys, psi, rounds - 1, depth + 1))))
        return conjunction(parts)

    def beta(self, zs: VarSetVector, rounds: int) -> Formula:
        r = self.rule_index
        xs = tuple(f"x_{r}_0_0_{n}" for n in range(len(self.sigma.variables)))
        mapping = dict(zip(self.sigma.variables, xs))
        mu = rename_variables(self.sigma.mu, mapping, (f"w_{r}_0_0_{p}" for p in itertools.count()))
        eta = rename_variables(self.sigma.eta, mapping)
        return forall(xs, Implies(mu, self._branches(zs, xs, eta, rounds, 1)))


def _guard(sigma: MonadicRule, rounds: int, max_index: Optional[int], zs: VarSetVector,
           rule_id: str, size_cap: Optional[int], estimate: int) -> None:
    cap = resolve_cap(size_cap, "axiom_size_cap")
    if estimate > cap:
        raise SizeGuardError(rule_id, rounds, sigma.resolve_max_index(max_index), estimate, cap)


def _positive(sigma: SeparationRule) -> MonadicRule:
    if not isinstance(sigma, MonadicRule):
        raise SchemeError("alpha and beta are defined for rules of positive order")
    return sigma


def alpha(sigma: SeparationRule, zs: VarSetVector, rounds: int, max_index: Optional[int] = None, *,
          rule_index: int = 0, depth: int = 1, size_cap: Optional[int] = None) -> Formula:
    sigma = _positive(sigma)
    builder = _AxiomBuilder(sigma, max_index, rule_index)
    estimate = _SizeEstimator(sigma, builder.conjuncts).alpha(
        rounds, tuple(len(z) for z in zs.inside), tuple(len(z) for z in zs.outside))
    _guard(sigma, rounds, max_index, zs, sigma.name or f"rule{rule_index}", size_cap, estimate)
    return builder.alpha(zs, rounds, depth)


def beta(sigma: SeparationRule, zs: VarSetVector, rounds: int, max_index: Optional[int] = None, *,
         rule_index: int = 0, size_cap: Optional[int] = None) -> Formula:
    sigma = _positive(sigma)
    _guard(sigma, rounds, max_index, zs, sigma.name or f"rule{rule_index}", size_cap,
           estimate_size(sigma, rounds, max_index, zs))
    return _AxiomBuilder(sigma, max_index, rule_index).beta(zs, rounds)


def beta_hat(sigma: SeparationRule, rounds: int, max_index: Optional[int] = None, *,
             rule_index: int = 0, size_cap: Optional[int] = None) -> Formula:
    """beta at all-empty variable sets; an order-0 rule is its own sentence"""
    if isinstance(sigma, SentenceRule):
        return sigma.sentence
    return beta(sigma, VarSetVector.empty(sigma.order), rounds, max_index, rule_index=rule_index, size_cap=size_cap)


# ============================================================================
# Whole-scheme emission
# ============================================================================

@dataclass(frozen=True)
class AxiomCell:
    rule_id: str
    rounds: Optional[int]
    max_index: Optional[int]
    sentence: Formula

    @property
    def tag(self) -> str:
        if self.rounds is None:
            return self.rule_id
        return f"{self.rule_id}_r{self.rounds}_i{self.max_index}"

    def header(self) -> str:
        if self.rounds is None:
            return f"rule={self.rule_id} order=0"
        return f"rule={self.rule_id} r={self.rounds} i={self.max_index}"


def index_range(sigma: MonadicRule, max_index: Optional[int]) -> range:
    """Conjunct bounds to emit: capped at the explicit list, a single bound for top"""
    if sigma.tau.is_top:
        return range(1)
    if sigma.tau.is_finite:
        last = len(sigma.tau.conjuncts) - 1
        return range((last if max_index is None else min(max_index, last)) + 1)
    if max_index is None:
        raise SchemeError(f"generated closure rule {sigma.tau.generator_name} needs an explicit max index")
    return range(max_index + 1)


def generate_axioms(scheme: SeparationScheme, max_rounds: int, max_index: Optional[int] = None, *,
                    size_cap: Optional[int] = None, simplify_output: bool = False) -> List[AxiomCell]:
    """Every order-0 rule once, then beta-hat(r, i) per positive rule, ordered by rule, r, i"""
    cells: List[AxiomCell] = []
    for index, rule in enumerate(scheme.rules):
        rule_id = scheme.rule_id(index)
        if isinstance(rule, SentenceRule):
            cells.append(AxiomCell(rule_id, None, None, rule.sentence))
            continue
        builders = {i: _AxiomBuilder(rule, i, index) for i in index_range(rule, max_index)}
        for r in range(max_rounds + 1):
            for i, builder in builders.items():
                estimate = estimate_size(rule, r, i)
                _guard(rule, r, i, VarSetVector.empty(rule.order), rule_id, size_cap, estimate)
                sentence = builder.beta(VarSetVector.empty(rule.order), r)
                if simplify_output:
                    sentence = simplify(sentence)
                logger.debug("emitted %s r=%d i=%d (%d nodes)", rule_id, r, i, estimate)
                cells.append(AxiomCell(rule_id, r, i, sentence))
    logger.info("✅ generated %d sentence(s)", len(cells))
    return cells


def render_axioms(cells: Sequence[AxiomCell], fmt: str = "sexpr") -> str:
    """Native S-expression lines with header comments, or TPTP FOF"""
    from sexpr import print_formula
    from tptp import write_fof

    lines: List[str] = []
    for cell in cells:
        if fmt == "sexpr":
            lines.append(f"; {cell.header()}")
            lines.append(print_formula(cell.sentence))
        elif fmt == "tptp":
            lines.append(f"% {cell.header()}")
            lines.append(write_fof(cell.tag, cell.sentence))
        else:
            raise ValueError(f"unknown axiom format {fmt!r}")
    return "\n".join(lines) + "\n"
