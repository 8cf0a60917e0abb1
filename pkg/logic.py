"""
Layer 1: Core Logic
First-order syntax extended with monadic atoms C_k(t), finite structures,
Tarskian evaluation, a closure compiler for repeated evaluation, and prenex normal form
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import (
    AbstractSet,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

from errors import ArityError, EvaluationError, MonadicAtomError, SignatureError

logger = logging.getLogger(__name__)


# ============================================================================
# Signatures
# ============================================================================

@dataclass(frozen=True)
class Signature:
    """First-order signature: relation, constant and function symbols"""

    relations: Tuple[Tuple[str, int], ...] = ()
    constants: Tuple[str, ...] = ()
    functions: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple((str(n), int(a)) for n, a in self.relations))
        object.__setattr__(self, "constants", tuple(str(n) for n in self.constants))
        object.__setattr__(self, "functions", tuple((str(n), int(a)) for n, a in self.functions))

        names = self.symbol_names()
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise SignatureError(f"symbol names must be distinct, repeated: {', '.join(duplicates)}")
        for name, arity in self.relations:
            if arity < 0:
                raise SignatureError(f"relation {name} has negative arity {arity}")
        for name, arity in self.functions:
            if arity < 1:
                raise SignatureError(f"function {name} needs arity >= 1, got {arity}")

    def symbol_names(self) -> List[str]:
        return [n for n, _ in self.relations] + list(self.constants) + [n for n, _ in self.functions]

    def relation_arity(self, name: str) -> Optional[int]:
        return dict(self.relations).get(name)

    def function_arity(self, name: str) -> Optional[int]:
        return dict(self.functions).get(name)

    def has_constant(self, name: str) -> bool:
        return name in self.constants

    def extend(self, relations: Iterable[Tuple[str, int]]) -> "Signature":
        """Signature with extra relation symbols appended"""
        return Signature(self.relations + tuple(relations), self.constants, self.functions)


# ============================================================================
# Terms and formulas
# ============================================================================

@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Const:
    name: str


@dataclass(frozen=True, slots=True)
class App:
    function: str
    args: Tuple["Term", ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ArityError(f"function application {self.function} needs at least one argument")


Term = Union[Var, Const, App]


@dataclass(frozen=True, slots=True)
class Verum:
    pass


@dataclass(frozen=True, slots=True)
class Falsum:
    pass


@dataclass(frozen=True, slots=True)
class Rel:
    name: str
    args: Tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Mon:
    """Monadic atom C_k(t), k >= 1"""

    index: int
    term: Term

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"monadic index must be >= 1, got {self.index}")


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    parts: Tuple["Formula", ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True, slots=True)
class Or:
    parts: Tuple["Formula", ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True, slots=True)
class Implies:
    antecedent: "Formula"
    consequent: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    variables: Tuple[str, ...]
    body: "Formula"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if not self.variables:
            raise ValueError("quantifier needs at least one variable")


@dataclass(frozen=True, slots=True)
class Exists:
    variables: Tuple[str, ...]
    body: "Formula"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if not self.variables:
            raise ValueError("quantifier needs at least one variable")


Formula = Union[Verum, Falsum, Rel, Eq, Mon, Not, And, Or, Implies, Forall, Exists]
Atom = Union[Verum, Falsum, Rel, Eq, Mon]
Assignment = Mapping[str, int]

VERUM = Verum()
FALSUM = Falsum()

_ATOMS = (Verum, Falsum, Rel, Eq, Mon)
_QUANTIFIERS = (Forall, Exists)


def conjunction(parts: Iterable[Formula]) -> Formula:
    """And over parts; verum when empty, the part itself when single"""
    parts = tuple(parts)
    if not parts:
        return VERUM
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disjunction(parts: Iterable[Formula]) -> Formula:
    """Or over parts; falsum when empty, the part itself when single"""
    parts = tuple(parts)
    if not parts:
        return FALSUM
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def forall(variables: Sequence[str], body: Formula) -> Formula:
    return Forall(tuple(variables), body) if variables else body


def exists(variables: Sequence[str], body: Formula) -> Formula:
    return Exists(tuple(variables), body) if variables else body


def variables(*names: str) -> Tuple[Var, ...]:
    return tuple(Var(n) for n in names)


# ============================================================================
# Traversal
# ============================================================================

def children(phi: Formula) -> Tuple[Formula, ...]:
    if isinstance(phi, _ATOMS):
        return ()
    if isinstance(phi, Not):
        return (phi.body,)
    if isinstance(phi, (And, Or)):
        return phi.parts
    if isinstance(phi, Implies):
        return (phi.antecedent, phi.consequent)
    return (phi.body,)


def subformulas(phi: Formula) -> Iterator[Formula]:
    """Every node of phi, preorder"""
    stack = [phi]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def node_count(phi: Formula) -> int:
    return sum(1 for _ in subformulas(phi))


def atom_terms(phi: Atom) -> Tuple[Term, ...]:
    if isinstance(phi, Rel):
        return phi.args
    if isinstance(phi, Eq):
        return (phi.left, phi.right)
    if isinstance(phi, Mon):
        return (phi.term,)
    return ()


def term_variables(t: Term) -> FrozenSet[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Const):
        return frozenset()
    return frozenset().union(*(term_variables(a) for a in t.args))


def free_variables(phi: Formula) -> FrozenSet[str]:
    if isinstance(phi, _ATOMS):
        return frozenset().union(*(term_variables(t) for t in atom_terms(phi)))
    if isinstance(phi, _QUANTIFIERS):
        return free_variables(phi.body) - set(phi.variables)
    return frozenset().union(*(free_variables(c) for c in children(phi)))


def all_variables(phi: Formula) -> FrozenSet[str]:
    """Free, bound and binder variable names"""
    names: Set[str] = set()
    for node in subformulas(phi):
        if isinstance(node, _QUANTIFIERS):
            names.update(node.variables)
        elif isinstance(node, _ATOMS):
            for t in atom_terms(node):
                names |= term_variables(t)
    return frozenset(names)


def monadic_indices(phi: Formula) -> FrozenSet[int]:
    return frozenset(node.index for node in subformulas(phi) if isinstance(node, Mon))


def is_pure(phi: Formula) -> bool:
    """No monadic atom occurs"""
    return not any(isinstance(node, Mon) for node in subformulas(phi))


def is_quantifier_free(phi: Formula) -> bool:
    return not any(isinstance(node, _QUANTIFIERS) for node in subformulas(phi))


def is_sentence(phi: Formula) -> bool:
    return not free_variables(phi)


def _check_term(t: Term, sig: Signature) -> None:
    if isinstance(t, Const):
        if not sig.has_constant(t.name):
            raise SignatureError(f"undeclared constant {t.name}")
    elif isinstance(t, App):
        arity = sig.function_arity(t.function)
        if arity is None:
            raise SignatureError(f"undeclared function symbol {t.function}")
        if arity != len(t.args):
            raise ArityError(f"function {t.function} has arity {arity}, applied to {len(t.args)} arguments")
        for a in t.args:
            _check_term(a, sig)


def check_formula(phi: Formula, sig: Signature) -> None:
    """Raise SignatureError/ArityError unless every symbol is declared with its arity"""
    for node in subformulas(phi):
        if isinstance(node, Rel):
            arity = sig.relation_arity(node.name)
            if arity is None:
                raise SignatureError(f"undeclared relation symbol {node.name}")
            if arity != len(node.args):
                raise ArityError(f"relation {node.name} has arity {arity}, applied to {len(node.args)} arguments")
        if isinstance(node, _ATOMS):
            for t in atom_terms(node):
                _check_term(t, sig)


def map_atoms(phi: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    """Rebuild phi with every atom replaced by fn(atom)"""
    if isinstance(phi, _ATOMS):
        return fn(phi)
    if isinstance(phi, Not):
        return Not(map_atoms(phi.body, fn))
    if isinstance(phi, And):
        return And(tuple(map_atoms(p, fn) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(map_atoms(p, fn) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(map_atoms(phi.antecedent, fn), map_atoms(phi.consequent, fn))
    return type(phi)(phi.variables, map_atoms(phi.body, fn))


# ============================================================================
# Finite structures
# ============================================================================

@dataclass(frozen=True)
class FiniteStructure:
    """Universe 0..size-1 with interpreted relations, constants and total functions"""

    size: int
    relations: Mapping[str, FrozenSet[Tuple[int, ...]]] = field(default_factory=dict)
    constants: Mapping[str, int] = field(default_factory=dict)
    functions: Mapping[str, Mapping[Tuple[int, ...], int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.size < 1:
            raise SignatureError(f"universe must be non-empty, got size {self.size}")
        n = self.size

        relations: Dict[str, FrozenSet[Tuple[int, ...]]] = {}
        for name, tuples in self.relations.items():
            normalized = frozenset(tuple(int(x) for x in t) for t in tuples)
            if len({len(t) for t in normalized}) > 1:
                raise SignatureError(f"relation {name} mixes tuple lengths")
            for t in normalized:
                if any(not 0 <= x < n for x in t):
                    raise SignatureError(f"relation {name} tuple {t} leaves the universe 0..{n - 1}")
            relations[name] = normalized

        constants = {name: int(value) for name, value in self.constants.items()}
        for name, value in constants.items():
            if not 0 <= value < n:
                raise SignatureError(f"constant {name} = {value} leaves the universe 0..{n - 1}")

        functions: Dict[str, Dict[Tuple[int, ...], int]] = {}
        for name, table in self.functions.items():
            normalized_table = {tuple(int(x) for x in k): int(v) for k, v in table.items()}
            arities = {len(k) for k in normalized_table}
            if len(arities) != 1:
                raise SignatureError(f"function {name} must have a single positive arity")
            arity = arities.pop()
            if arity < 1 or len(normalized_table) != n ** arity:
                raise SignatureError(f"function {name} is not total on the universe")
            for args, value in normalized_table.items():
                if any(not 0 <= x < n for x in args) or not 0 <= value < n:
                    raise SignatureError(f"function {name} entry {args} -> {value} leaves the universe")
            functions[name] = normalized_table

        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "constants", constants)
        object.__setattr__(self, "functions", functions)

    @property
    def universe(self) -> range:
        return range(self.size)

    def relation(self, name: str) -> FrozenSet[Tuple[int, ...]]:
        return self.relations.get(name, frozenset())

    def holds(self, name: str, args: Tuple[int, ...]) -> bool:
        return tuple(args) in self.relation(name)

    def constant(self, name: str) -> int:
        try:
            return self.constants[name]
        except KeyError:
            raise EvaluationError(f"constant {name} is not interpreted") from None

    def function(self, name: str) -> Mapping[Tuple[int, ...], int]:
        try:
            return self.functions[name]
        except KeyError:
            raise EvaluationError(f"function {name} is not interpreted") from None

    def conforms_to(self, sig: Signature) -> None:
        """Raise SignatureError unless this structure interprets exactly the symbols of sig"""
        for name, tuples in self.relations.items():
            arity = sig.relation_arity(name)
            if arity is None:
                raise SignatureError(f"structure interprets undeclared relation {name}")
            if any(len(t) != arity for t in tuples):
                raise ArityError(f"relation {name} needs {arity}-tuples")
        for name in sig.constants:
            if name not in self.constants:
                raise SignatureError(f"constant {name} is not interpreted")
        for name in self.constants:
            if not sig.has_constant(name):
                raise SignatureError(f"structure interprets undeclared constant {name}")
        for name, arity in sig.functions:
            table = self.functions.get(name)
            if table is None:
                raise SignatureError(f"function {name} is not interpreted")
            if any(len(k) != arity for k in table):
                raise ArityError(f"function {name} needs arity {arity}")
        for name in self.functions:
            if sig.function_arity(name) is None:
                raise SignatureError(f"structure interprets undeclared function {name}")

    def expand(self, extra_relations: Mapping[str, Iterable[Tuple[int, ...]]]) -> "FiniteStructure":
        """Same structure with additional relation interpretations"""
        relations = dict(self.relations)
        relations.update({name: frozenset(tuples) for name, tuples in extra_relations.items()})
        return FiniteStructure(self.size, relations, self.constants, self.functions)


# ============================================================================
# Evaluation
# ============================================================================

def eval_term(A: FiniteStructure, v: Assignment, t: Term) -> int:
    if isinstance(t, Var):
        try:
            return v[t.name]
        except KeyError:
            raise EvaluationError(f"no value assigned to variable {t.name}") from None
    if isinstance(t, Const):
        return A.constant(t.name)
    return A.function(t.function)[tuple(eval_term(A, v, a) for a in t.args)]


class _Interpreter:
    """Reference Tarskian semantics over a mutable environment"""

    def __init__(self, A: FiniteStructure, mon: Sequence[AbstractSet[int]]):
        self.A = A
        self.mon = mon

    def holds(self, phi: Formula, env: Dict[str, int]) -> bool:
        A = self.A
        if isinstance(phi, Rel):
            return tuple(eval_term(A, env, t) for t in phi.args) in A.relation(phi.name)
        if isinstance(phi, Eq):
            return eval_term(A, env, phi.left) == eval_term(A, env, phi.right)
        if isinstance(phi, Mon):
            if phi.index > len(self.mon):
                raise EvaluationError(
                    f"monadic index {phi.index} exceeds the {len(self.mon)} supplied set(s)"
                )
            return eval_term(A, env, phi.term) in self.mon[phi.index - 1]
        if isinstance(phi, Verum):
            return True
        if isinstance(phi, Falsum):
            return False
        if isinstance(phi, Not):
            return not self.holds(phi.body, env)
        if isinstance(phi, And):
            return all(self.holds(p, env) for p in phi.parts)
        if isinstance(phi, Or):
            return any(self.holds(p, env) for p in phi.parts)
        if isinstance(phi, Implies):
            return (not self.holds(phi.antecedent, env)) or self.holds(phi.consequent, env)
        return self._quantified(phi, env)

    def _quantified(self, phi: Union[Forall, Exists], env: Dict[str, int]) -> bool:
        universal = isinstance(phi, Forall)
        saved = {name: env[name] for name in phi.variables if name in env}
        try:
            for values in itertools.product(self.A.universe, repeat=len(phi.variables)):
                env.update(zip(phi.variables, values))
                if self.holds(phi.body, env) != universal:
                    return not universal
            return universal
        finally:
            for name in phi.variables:
                env.pop(name, None)
            env.update(saved)


def eval_formula(
    A: FiniteStructure,
    v: Assignment,
    phi: Formula,
    mon: Optional[Sequence[AbstractSet[int]]] = None,
) -> bool:
    """Truth of phi in A under v; C_k(t) holds iff the value of t is in mon[k-1]"""
    missing = free_variables(phi) - set(v)
    if missing:
        raise EvaluationError(f"no value assigned to free variable(s) {', '.join(sorted(missing))}")
    return _Interpreter(A, tuple(mon or ())).holds(phi, dict(v))


# ============================================================================
# Closure compiler
# ============================================================================

_Env = List[int]
_Mon = Sequence[AbstractSet[int]]


class CompiledFormula:
    """
    phi compiled to nested closures over a slot environment; call with values for `free`.

    Relations named in `overrides` are looked up in that mapping at call time,
    so the caller may swap their interpretations between calls.
    """

    def __init__(
        self,
        A: FiniteStructure,
        phi: Formula,
        free: Sequence[str] = (),
        overrides: Optional[Mapping[str, AbstractSet[Tuple[int, ...]]]] = None,
    ):
        missing = free_variables(phi) - set(free)
        if missing:
            raise EvaluationError(f"no slot for free variable(s) {', '.join(sorted(missing))}")
        self.free = tuple(free)
        self.max_monadic_index = max(monadic_indices(phi), default=0)
        self._A = A
        self._overrides = overrides if overrides is not None else {}
        self._slots: Dict[str, int] = {}
        for name in self.free:
            self._slot(name)
        self._fn = self._formula(phi)
        self._width = len(self._slots)

    def __call__(self, values: Sequence[int] = (), mon: _Mon = ()) -> bool:
        if self.max_monadic_index > len(mon):
            raise EvaluationError(
                f"monadic index {self.max_monadic_index} exceeds the {len(mon)} supplied set(s)"
            )
        env = list(values)
        env.extend([0] * (self._width - len(env)))
        return self._fn(env, mon)

    def _slot(self, name: str) -> int:
        return self._slots.setdefault(name, len(self._slots))

    def _term(self, t: Term) -> Callable[[_Env], int]:
        if isinstance(t, Var):
            i = self._slot(t.name)
            return lambda env: env[i]
        if isinstance(t, Const):
            value = self._A.constant(t.name)
            return lambda env: value
        table = self._A.function(t.function)
        args = tuple(self._term(a) for a in t.args)
        if len(args) == 1:
            (g,) = args
            return lambda env: table[(g(env),)]
        return lambda env: table[tuple(g(env) for g in args)]

    def _formula(self, phi: Formula) -> Callable[[_Env, _Mon], bool]:
        if isinstance(phi, Verum):
            return lambda env, mon: True
        if isinstance(phi, Falsum):
            return lambda env, mon: False
        if isinstance(phi, Rel):
            return self._relation(phi)
        if isinstance(phi, Eq):
            if isinstance(phi.left, Var) and isinstance(phi.right, Var):
                i, j = self._slot(phi.left.name), self._slot(phi.right.name)
                return lambda env, mon: env[i] == env[j]
            left, right = self._term(phi.left), self._term(phi.right)
            return lambda env, mon: left(env) == right(env)
        if isinstance(phi, Mon):
            k = phi.index - 1
            if isinstance(phi.term, Var):
                i = self._slot(phi.term.name)
                return lambda env, mon: env[i] in mon[k]
            t = self._term(phi.term)
            return lambda env, mon: t(env) in mon[k]
        if isinstance(phi, Not):
            body = self._formula(phi.body)
            return lambda env, mon: not body(env, mon)
        if isinstance(phi, (And, Or)):
            parts = tuple(self._formula(p) for p in phi.parts)
            if isinstance(phi, And):
                if len(parts) == 2:
                    a, b = parts
                    return lambda env, mon: a(env, mon) and b(env, mon)
                return lambda env, mon: all(p(env, mon) for p in parts)
            if len(parts) == 2:
                a, b = parts
                return lambda env, mon: a(env, mon) or b(env, mon)
            return lambda env, mon: any(p(env, mon) for p in parts)
        if isinstance(phi, Implies):
            a, b = self._formula(phi.antecedent), self._formula(phi.consequent)
            return lambda env, mon: (not a(env, mon)) or b(env, mon)
        return self._quantifier(phi)

    def _relation(self, phi: Rel) -> Callable[[_Env, _Mon], bool]:
        if phi.name in self._overrides:
            table, name = self._overrides, phi.name
            args = tuple(self._term(t) for t in phi.args)
            return lambda env, mon: tuple(g(env) for g in args) in table[name]
        tuples = self._A.relation(phi.name)
        if all(isinstance(t, Var) for t in phi.args):
            idx = tuple(self._slot(t.name) for t in phi.args)
            if len(idx) == 1:
                (i,) = idx
                return lambda env, mon: (env[i],) in tuples
            if len(idx) == 2:
                i, j = idx
                return lambda env, mon: (env[i], env[j]) in tuples
            if len(idx) == 3:
                i, j, k = idx
                return lambda env, mon: (env[i], env[j], env[k]) in tuples
            return lambda env, mon: tuple(env[i] for i in idx) in tuples
        args = tuple(self._term(t) for t in phi.args)
        return lambda env, mon: tuple(g(env) for g in args) in tuples

    def _quantifier(self, phi: Union[Forall, Exists]) -> Callable[[_Env, _Mon], bool]:
        universal = isinstance(phi, Forall)
        # binder slots are reused by name; shadowing restores the outer value on exit
        slots = tuple(self._slot(name) for name in phi.variables)
        body = self._formula(phi.body)
        universe = self._A.universe

        if len(slots) == 1:
            (s,) = slots

            def single(env: _Env, mon: _Mon) -> bool:
                saved = env[s]
                try:
                    for e in universe:
                        env[s] = e
                        if body(env, mon) != universal:
                            return not universal
                    return universal
                finally:
                    env[s] = saved

            return single

        def several(env: _Env, mon: _Mon) -> bool:
            saved = [env[s] for s in slots]
            try:
                for values in itertools.product(universe, repeat=len(slots)):
                    for s, e in zip(slots, values):
                        env[s] = e
                    if body(env, mon) != universal:
                        return not universal
                return universal
            finally:
                for s, e in zip(slots, saved):
                    env[s] = e

        return several


def compile_formula(
    A: FiniteStructure,
    phi: Formula,
    free: Sequence[str] = (),
    overrides: Optional[Mapping[str, AbstractSet[Tuple[int, ...]]]] = None,
) -> CompiledFormula:
    return CompiledFormula(A, phi, free, overrides)


# ============================================================================
# Renaming
# ============================================================================

def _rename_term(t: Term, env: Mapping[str, str]) -> Term:
    if isinstance(t, Var):
        return Var(env.get(t.name, t.name))
    if isinstance(t, Const):
        return t
    return App(t.function, tuple(_rename_term(a, env) for a in t.args))


def _rename(phi: Formula, env: Mapping[str, str], fresh: Callable[[str], str]) -> Formula:
    if isinstance(phi, (Verum, Falsum)):
        return phi
    if isinstance(phi, Rel):
        return Rel(phi.name, tuple(_rename_term(t, env) for t in phi.args))
    if isinstance(phi, Eq):
        return Eq(_rename_term(phi.left, env), _rename_term(phi.right, env))
    if isinstance(phi, Mon):
        return Mon(phi.index, _rename_term(phi.term, env))
    if isinstance(phi, Not):
        return Not(_rename(phi.body, env, fresh))
    if isinstance(phi, And):
        return And(tuple(_rename(p, env, fresh) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(_rename(p, env, fresh) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(_rename(phi.antecedent, env, fresh), _rename(phi.consequent, env, fresh))
    new_names = tuple(fresh(name) for name in phi.variables)
    inner = dict(env)
    inner.update(zip(phi.variables, new_names))
    return type(phi)(new_names, _rename(phi.body, inner, fresh))


def _variant(name: str, taken: Set[str]) -> str:
    counter = 1
    while f"{name}_{counter}" in taken:
        counter += 1
    return f"{name}_{counter}"


def rename_variables(
    phi: Formula,
    mapping: Mapping[str, str],
    bound_names: Optional[Iterator[str]] = None,
) -> Formula:
    """
    Rename free variables by mapping, avoiding capture.

    With bound_names every binder variable is renamed to the next name drawn,
    in preorder; the caller guarantees those names are fresh.
    """
    if bound_names is not None:
        return _rename(phi, dict(mapping), lambda name: next(bound_names))

    targets = set(mapping.values())
    taken = set(all_variables(phi)) | targets

    def fresh(name: str) -> str:
        if name not in targets:
            return name
        variant = _variant(name, taken)
        taken.add(variant)
        return variant

    return _rename(phi, dict(mapping), fresh)


def standardize_apart(phi: Formula) -> Formula:
    """Bound variables pairwise distinct and distinct from the free ones"""
    used = set(free_variables(phi))
    taken = set(all_variables(phi))

    def fresh(name: str) -> str:
        if name not in used:
            used.add(name)
            return name
        variant = _variant(name, taken | used)
        used.add(variant)
        taken.add(variant)
        return variant

    return _rename(phi, {}, fresh)


# ============================================================================
# Prenex normal form and universality
# ============================================================================

_Prefix = List[Tuple[bool, str]]


def _pull_quantifiers(phi: Formula) -> Tuple[_Prefix, Formula]:
    """Prefix of (is_universal, variable) and matrix; phi must be standardized apart"""
    if isinstance(phi, _ATOMS):
        return [], phi
    if isinstance(phi, Not):
        prefix, matrix = _pull_quantifiers(phi.body)
        return [(not q, v) for q, v in prefix], Not(matrix)
    if isinstance(phi, (And, Or)):
        prefix: _Prefix = []
        matrices = []
        for part in phi.parts:
            p, m = _pull_quantifiers(part)
            prefix.extend(p)
            matrices.append(m)
        return prefix, type(phi)(tuple(matrices))
    if isinstance(phi, Implies):
        p_ante, m_ante = _pull_quantifiers(phi.antecedent)
        p_cons, m_cons = _pull_quantifiers(phi.consequent)
        return [(not q, v) for q, v in p_ante] + p_cons, Implies(m_ante, m_cons)
    prefix, matrix = _pull_quantifiers(phi.body)
    universal = isinstance(phi, Forall)
    return [(universal, v) for v in phi.variables] + prefix, matrix


def prenex_normal_form(phi: Formula) -> Formula:
    """Equivalent formula with all quantifiers in a leading prefix (pure formulas only)"""
    if not is_pure(phi):
        raise MonadicAtomError("prenex normal form needs a pure formula; translate monadic atoms first")
    prefix, matrix = _pull_quantifiers(standardize_apart(phi))

    result = matrix
    for universal, group in reversed([
        (q, [v for _, v in run]) for q, run in itertools.groupby(prefix, key=lambda item: item[0])
    ]):
        result = Forall(tuple(group), result) if universal else Exists(tuple(group), result)
    return result


def quantifier_prefix(phi: Formula) -> List[bool]:
    """Kinds (True = universal) of the prenex prefix, leftmost first"""
    prenex = prenex_normal_form(phi)
    kinds: List[bool] = []
    while isinstance(prenex, _QUANTIFIERS):
        kinds.extend([isinstance(prenex, Forall)] * len(prenex.variables))
        prenex = prenex.body
    return kinds


def _effective_kinds(phi: Formula, positive: bool) -> Iterator[bool]:
    # polarity flips under negation and in antecedents, exactly as _pull_quantifiers flips kinds
    stack = [(phi, positive)]
    while stack:
        node, pol = stack.pop()
        if isinstance(node, _ATOMS):
            continue
        if isinstance(node, Not):
            stack.append((node.body, not pol))
        elif isinstance(node, (And, Or)):
            stack.extend((p, pol) for p in node.parts)
        elif isinstance(node, Implies):
            stack.append((node.antecedent, not pol))
            stack.append((node.consequent, pol))
        else:
            yield isinstance(node, Forall) == pol
            stack.append((node.body, pol))


def is_universal(phi: Formula) -> bool:
    """True iff the prenex form of phi has no existential quantifier"""
    if not is_pure(phi):
        raise MonadicAtomError("universality is defined for pure formulas only")
    return all(_effective_kinds(phi, True))


# ============================================================================
# Simplifier
# ============================================================================

def simplify(phi: Formula) -> Formula:
    """Verum elimination, falsum propagation and flattening of nested and/or"""
    if isinstance(phi, _ATOMS):
        return phi
    if isinstance(phi, Not):
        body = simplify(phi.body)
        if isinstance(body, Verum):
            return FALSUM
        if isinstance(body, Falsum):
            return VERUM
        if isinstance(body, Not):
            return body.body
        return Not(body)
    if isinstance(phi, (And, Or)):
        is_and = isinstance(phi, And)
        unit, zero = (Verum, Falsum) if is_and else (Falsum, Verum)
        parts: List[Formula] = []
        for part in phi.parts:
            part = simplify(part)
            if isinstance(part, zero):
                return part
            if isinstance(part, unit):
                continue
            if isinstance(part, type(phi)):
                parts.extend(part.parts)
            else:
                parts.append(part)
        return conjunction(parts) if is_and else disjunction(parts)
    if isinstance(phi, Implies):
        ante, cons = simplify(phi.antecedent), simplify(phi.consequent)
        if isinstance(ante, Verum):
            return cons
        if isinstance(ante, Falsum) or isinstance(cons, Verum):
            return VERUM
        if isinstance(cons, Falsum):
            return simplify(Not(ante))
        return Implies(ante, cons)
    body = simplify(phi.body)
    # universe is non-empty, so quantifying a constant body changes nothing
    if isinstance(body, (Verum, Falsum)):
        return body
    return type(phi)(phi.variables, body)
