"""
Layer 3: Separation Games
Exact solver for the forall/exists game of a structure and a positive-order rule:
move generation, bounded r-strategies by memoized alternating search,
omega-strategies by a greatest fixpoint, and survival-round profiling.

Positions are keyed by one code per element: sum over k of digit_k * 3^k,
with digit 0 = undecided, 1 = decided in S_k, 2 = decided out of S_k.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

from config import resolve_cap
from errors import CapExceededError, SchemeError
from logic import FiniteStructure, Formula, Mon, compile_formula, eval_term, subformulas
from separation import MonadicRule, SeparationRule

logger = logging.getLogger(__name__)

OPENING = "opening"
LATER = "later"

_Key = Tuple[int, ...]


# ============================================================================
# Positions, moves, results
# ============================================================================

@dataclass(frozen=True)
class GamePosition:
    """Decided-in sets S_k and decided-out sets S'_k, k = 1..K"""

    inside: Tuple[FrozenSet[int], ...]
    outside: Tuple[FrozenSet[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "inside", tuple(frozenset(s) for s in self.inside))
        object.__setattr__(self, "outside", tuple(frozenset(s) for s in self.outside))
        if len(self.inside) != len(self.outside):
            raise ValueError("a position needs as many decided-out sets as decided-in sets")
        for k, (s_in, s_out) in enumerate(zip(self.inside, self.outside), start=1):
            if s_in & s_out:
                raise ValueError(f"S_{k} and its complement set overlap on {sorted(s_in & s_out)}")

    @classmethod
    def empty(cls, order: int) -> "GamePosition":
        return cls((frozenset(),) * order, (frozenset(),) * order)

    @property
    def order(self) -> int:
        return len(self.inside)

    def encode(self, size: int) -> _Key:
        codes = [0] * size
        for k, (s_in, s_out) in enumerate(zip(self.inside, self.outside)):
            for digit, elements in ((1, s_in), (2, s_out)):
                for e in elements:
                    if not 0 <= e < size:
                        raise ValueError(f"position mentions element {e} outside 0..{size - 1}")
                    codes[e] += digit * 3 ** k
        return tuple(codes)

    @classmethod
    def decode(cls, codes: Sequence[int], order: int) -> "GamePosition":
        digits = [[(code // 3 ** k) % 3 for k in range(order)] for code in codes]
        inside = tuple(frozenset(e for e, d in enumerate(digits) if d[k] == 1) for k in range(order))
        outside = tuple(frozenset(e for e, d in enumerate(digits) if d[k] == 2) for k in range(order))
        return cls(inside, outside)

    def extends(self, other: "GamePosition") -> bool:
        """Every decision of other is also a decision here"""
        return all(a >= b for a, b in zip(self.inside, other.inside)) and all(
            a >= b for a, b in zip(self.outside, other.outside)
        )

    def describe(self) -> str:
        parts = []
        for k, (s_in, s_out) in enumerate(zip(self.inside, self.outside), start=1):
            parts.append(f"S{k}={sorted(s_in)} out{k}={sorted(s_out)}")
        return " ".join(parts)


@dataclass(frozen=True)
class ForallMove:
    """Opening (conjunct None, a) or conjunct move (j, b); tuples may repeat elements"""

    elements: Tuple[int, ...]
    conjunct: Optional[int] = None

    @property
    def is_opening(self) -> bool:
        return self.conjunct is None

    def label(self) -> str:
        name = "open" if self.is_opening else f"tau{self.conjunct}"
        return f"{name}({', '.join(map(str, self.elements))})"


@dataclass(frozen=True)
class SurvivalRounds:
    """Game value: omega, an exact round count, or at least the cut-off"""

    rounds: Optional[int] = None
    omega: bool = False
    at_least: bool = False

    def __str__(self):
        if self.omega:
            return "omega"
        return f">={self.rounds}" if self.at_least else str(self.rounds)


class _Move:
    __slots__ = ("index", "public", "elements", "touched", "involved", "formula")

    def __init__(self, index: int, public: ForallMove, formula, reads: FrozenSet[int]):
        self.index = index
        self.public = public
        self.elements = public.elements
        self.touched = tuple(dict.fromkeys(public.elements))
        self.involved = frozenset(self.touched) | reads
        self.formula = formula

    def holds(self, sets) -> bool:
        return self.formula(self.elements, sets)


# ============================================================================
# Solver
# ============================================================================

class GameSolver:
    """
    Solver for one (structure, rule, max index) triple.

    Owns its transposition table: for each position the largest depth known
    survivable and the smallest depth known lost, plus fixpoint verdicts.
    """

    def __init__(self, A: FiniteStructure, sigma: SeparationRule, max_index: Optional[int] = None):
        if not isinstance(sigma, MonadicRule):
            raise SchemeError("games are played on rules of positive order")
        self.A = A
        self.sigma = sigma
        self.order = sigma.order
        self.max_index = sigma.resolve_max_index(max_index)
        K = self.order

        self._pow3 = tuple(3 ** k for k in range(K))
        codes = range(3 ** K)
        self._inside = tuple(tuple((c // p) % 3 == 1 for p in self._pow3) for c in codes)
        self._undecided = tuple(tuple(k for k, p in enumerate(self._pow3) if (c // p) % 3 == 0) for c in codes)

        universe = A.universe
        mu = compile_formula(A, sigma.mu, sigma.variables)
        eta = compile_formula(A, sigma.eta, sigma.variables)
        self.openings: List[_Move] = [
            _Move(-1, ForallMove(a), eta, self._reads(sigma.eta, sigma.variables, a))
            for a in itertools.product(universe, repeat=len(sigma.variables))
            if mu(a)
        ]

        self.moves: List[_Move] = []
        for j, conjunct in enumerate(sigma.conjuncts(self.max_index)):
            gamma = compile_formula(A, conjunct.gamma, conjunct.variables)
            psi = compile_formula(A, conjunct.psi, conjunct.variables)
            for b in itertools.product(universe, repeat=len(conjunct.variables)):
                if gamma(b):
                    move = ForallMove(b, j)
                    self.moves.append(_Move(len(self.moves), move, psi, self._reads(conjunct.psi, conjunct.variables, b)))

        self._involving: Dict[int, List[int]] = {e: [] for e in universe}
        for move in self.moves:
            for e in move.involved:
                self._involving[e].append(move.index)
        self._by_public: Dict[ForallMove, _Move] = {m.public: m for m in self.openings + self.moves}

        self._table: Dict[_Key, List[int]] = {}
        self._dead: Dict[_Key, bool] = {}
        self._safe: Dict[_Key, bool] = {}
        self._in_progress: Set[_Key] = set()
        logger.debug("game on %d elements: %d openings, %d later moves", A.size, len(self.openings), len(self.moves))

    def _reads(self, psi: Formula, names: Sequence[str], values: Sequence[int]) -> FrozenSet[int]:
        """Elements whose membership psi inspects under names -> values"""
        env = dict(zip(names, values))
        return frozenset(eval_term(self.A, env, node.term) for node in subformulas(psi) if isinstance(node, Mon))

    # -- position helpers ---------------------------------------------------

    def _sets(self, key: Sequence[int]) -> Tuple[FrozenSet[int], ...]:
        inside = self._inside
        return tuple(frozenset(e for e, c in enumerate(key) if inside[c][k]) for k in range(self.order))

    def _closed(self, key: _Key, move: _Move) -> bool:
        undecided = self._undecided
        return all(not undecided[key[e]] for e in move.touched)

    def _closed_violation(self, key: _Key, candidates) -> Optional[_Move]:
        sets = None
        for move in candidates:
            if self._closed(key, move):
                sets = sets if sets is not None else self._sets(key)
                if not move.holds(sets):
                    return move
        return None

    def _is_dead(self, key: _Key) -> bool:
        """Some move touching only decided elements has no legal answer"""
        dead = self._dead.get(key)
        if dead is None:
            dead = self._dead[key] = self._closed_violation(key, self.moves) is not None
        return dead

    def _register(self, key: _Key, changed: Sequence[int], parent_alive: bool) -> None:
        if key in self._dead:
            return
        if not parent_alive:
            self._is_dead(key)
            return
        # a live parent had no violated closed move; only moves involving new decisions can change
        indices = sorted({i for e in changed for i in self._involving[e]})
        self._dead[key] = self._closed_violation(key, (self.moves[i] for i in indices)) is not None

    def _responses(self, key: _Key, move: _Move, parent_alive: bool = True) -> List[_Key]:
        undecided = self._undecided
        pairs = [(e, k) for e in move.touched for k in undecided[key[e]]]
        changed = sorted({e for e, _ in pairs})
        result = []
        for digits in itertools.product((1, 2), repeat=len(pairs)):
            new = list(key)
            for (e, k), d in zip(pairs, digits):
                new[e] += d * self._pow3[k]
            if move.holds(self._sets(new)):
                new_key = tuple(new)
                result.append(new_key)
                self._register(new_key, changed, parent_alive)
        return result

    def _open_successors(self, key: _Key) -> Iterator[Tuple[_Move, List[_Key]]]:
        """Moves touching an undecided element, with all responses; closed moves are self-loops"""
        seen: Set[FrozenSet[_Key]] = set()
        for move in self.moves:
            if self._closed(key, move):
                continue
            successors = self._responses(key, move)
            marker = frozenset(successors)
            if marker in seen:
                continue
            seen.add(marker)
            yield move, successors

    def _key(self, start: Optional[GamePosition]) -> _Key:
        if start is None:
            return (0,) * self.A.size
        if start.order != self.order:
            raise SchemeError(f"position has {start.order} set pairs, rule order is {self.order}")
        return start.encode(self.A.size)

    # -- bounded strategies -----------------------------------------------

    def _survives(self, key: _Key, depth: int) -> bool:
        """exists survives `depth` more rounds of the reduced game from key"""
        if depth <= 0:
            return True
        if self._is_dead(key):
            return False
        if self._safe.get(key):
            return True
        entry = self._table.get(key)
        if entry is None:
            entry = self._table[key] = [0, 1 << 30]
        if depth <= entry[0]:
            return True
        if depth >= entry[1]:
            return False

        result = True
        for _, successors in self._open_successors(key):
            if not any(self._survives(s, depth - 1) for s in successors):
                result = False
                break
        if result:
            entry[0] = max(entry[0], depth)
        else:
            entry[1] = min(entry[1], depth)
        return result

    def has_r_strategy(self, start: Optional[GamePosition], rounds: int, include_round0: bool) -> bool:
        """exists survives through round `rounds`; reduced games start at round 1"""
        key = self._key(start)
        if not include_round0:
            return self._survives(key, rounds)
        alive = not self._is_dead(key)
        for opening in self.openings:
            successors = self._responses(key, opening, alive)
            if not any(self._survives(s, rounds) for s in successors):
                return False
        return True

    # -- omega strategies ---------------------------------------------------

    def _safe_from(self, key: _Key) -> bool:
        if self._is_dead(key):
            return False
        known = self._safe.get(key)
        if known is not None:
            return known
        if key in self._in_progress:
            # revisiting a position: exists repeats her answers forever
            return True
        self._in_progress.add(key)
        try:
            result = all(any(self._safe_from(s) for s in successors) for _, successors in self._open_successors(key))
        finally:
            self._in_progress.discard(key)
        self._safe[key] = result
        return result

    def check_position_space(self, cap: Optional[int] = None) -> None:
        cap = resolve_cap(cap, "position_space_cap")
        space = 3 ** (self.order * self.A.size)
        if space > cap:
            raise CapExceededError("position space", space, cap)

    def has_omega_strategy(self, cap: Optional[int] = None) -> bool:
        """exists survives forever in the simple game"""
        self.check_position_space(cap)
        key = self._key(None)
        alive = not self._is_dead(key)
        for opening in self.openings:
            if not any(self._safe_from(s) for s in self._responses(key, opening, alive)):
                return False
        return True

    def max_survival_rounds(self, survival_cap: Optional[int] = None, cap: Optional[int] = None) -> SurvivalRounds:
        """omega, else the largest r with an r-strategy (-1 if exists cannot answer round 0)"""
        survival_cap = resolve_cap(survival_cap, "survival_cap")
        if self.has_omega_strategy(cap):
            return SurvivalRounds(omega=True)
        for r in range(survival_cap + 1):
            if not self.has_r_strategy(None, r, include_round0=True):
                logger.info("exists survives %d round(s) after the opening", r - 1)
                return SurvivalRounds(rounds=r - 1)
        return SurvivalRounds(rounds=survival_cap, at_least=True)

    # -- public move generation --------------------------------------------

    def legal_forall_moves(self, round_kind: str) -> List[ForallMove]:
        if round_kind == OPENING:
            return [m.public for m in self.openings]
        if round_kind == LATER:
            return [m.public for m in self.moves]
        raise ValueError(f"round must be '{OPENING}' or '{LATER}', got {round_kind!r}")

    def exists_responses(self, position: GamePosition, move: ForallMove) -> List[GamePosition]:
        internal = self._by_public.get(move)
        if internal is None:
            raise SchemeError(f"{move.label()} is not a legal move")
        key = self._key(position)
        return [GamePosition.decode(k, self.order) for k in self._responses(key, internal, parent_alive=False)]

    # -- debugging trace ----------------------------------------------------

    def _value(self, key: _Key, limit: int) -> int:
        depth = 0
        while depth < limit and self._survives(key, depth + 1):
            depth += 1
        return depth

    def _step(self, round_no: int, move: _Move, response: Optional[_Key]) -> Dict[str, str]:
        answer = GamePosition.decode(response, self.order).describe() if response is not None else "none"
        return {"round": str(round_no), "move": move.public.label(), "response": answer}

    def forall_line(self, rounds: int) -> List[Dict[str, str]]:
        """A forall win within `rounds` rounds of the simple game against exists' longest answers"""
        start = self._key(None)
        alive = not self._is_dead(start)
        for opening in self.openings:
            successors = self._responses(start, opening, alive)
            if not any(self._survives(s, rounds) for s in successors):
                break
        else:
            return []
        if not successors:
            return [self._step(0, opening, None)]
        key = max(successors, key=lambda s: self._value(s, rounds))
        line = [self._step(0, opening, key)]

        remaining, round_no = rounds, 1
        while remaining > 0:
            if self._is_dead(key):
                line.append(self._step(round_no, self._closed_violation(key, self.moves), None))
                break
            for move, successors in self._open_successors(key):
                if not any(self._survives(s, remaining - 1) for s in successors):
                    break
            else:
                break
            if not successors:
                line.append(self._step(round_no, move, None))
                break
            key = max(successors, key=lambda s: self._value(s, remaining - 1))
            line.append(self._step(round_no, move, key))
            remaining -= 1
            round_no += 1
        return line

    def stats(self) -> Dict[str, int]:
        return {"positions": len(self._dead), "bounded_entries": len(self._table), "fixpoint_entries": len(self._safe)}


# ============================================================================
# Module-level operations
# ============================================================================

def legal_forall_moves(A: FiniteStructure, sigma: SeparationRule, round_kind: str,
                       max_index: Optional[int] = None) -> List[ForallMove]:
    return GameSolver(A, sigma, max_index).legal_forall_moves(round_kind)


def exists_responses(A: FiniteStructure, sigma: SeparationRule, position: GamePosition,
                     move: ForallMove, max_index: Optional[int] = None) -> List[GamePosition]:
    return GameSolver(A, sigma, max_index).exists_responses(position, move)


def has_r_strategy(A: FiniteStructure, sigma: SeparationRule, start: Optional[GamePosition], rounds: int,
                   max_index: Optional[int] = None, include_round0: bool = False) -> bool:
    return GameSolver(A, sigma, max_index).has_r_strategy(start, rounds, include_round0)


def has_omega_strategy(A: FiniteStructure, sigma: SeparationRule, max_index: Optional[int] = None,
                       cap: Optional[int] = None) -> bool:
    return GameSolver(A, sigma, max_index).has_omega_strategy(cap)


def max_survival_rounds(A: FiniteStructure, sigma: SeparationRule, max_index: Optional[int] = None,
                        survival_cap: Optional[int] = None, cap: Optional[int] = None) -> SurvivalRounds:
    return GameSolver(A, sigma, max_index).max_survival_rounds(survival_cap, cap)
