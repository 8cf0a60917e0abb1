"""
Error types shared by every layer of the separation toolkit
The CLI maps all of these to exit code 2
"""

from typing import Optional


class SeparationToolkitError(Exception):
    """Base class for all toolkit errors"""


class FormulaSyntaxError(SeparationToolkitError):
    """Malformed DSL input, with the 1-based position of the offending token"""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"Syntax error, {message} (at {line}:{column})")
        self.message = message
        self.line = line
        self.column = column


class SignatureError(SeparationToolkitError):
    """Undeclared symbol, clashing symbol names, or a structure not matching its signature"""


class ArityError(SignatureError):
    """Symbol applied to the wrong number of arguments"""


class EvaluationError(SeparationToolkitError):
    """Formula cannot be evaluated with the supplied assignment or monadic sets"""


class MonadicAtomError(SeparationToolkitError):
    """Operation requires a pure formula but found a monadic atom C_k(t)"""


class SchemeError(SeparationToolkitError):
    """Ill-formed rule or scheme, or a generated rule used without truncation"""


class FreshnessError(SeparationToolkitError):
    """Variable names supposed to be fresh collide with names already in use"""


class CapExceededError(SeparationToolkitError):
    """An enumeration would exceed its configured cap; this is not a verdict"""

    def __init__(self, what: str, value: int, cap: int):
        super().__init__(f"{what} {value} exceeds the configured cap {cap}")
        self.what = what
        self.value = value
        self.cap = cap


class SizeGuardError(SeparationToolkitError):
    """Generated sentence for (rule, r, i) would exceed the node-count cap"""

    def __init__(self, rule_id: str, rounds: int, max_index: int, estimate: int, cap: int):
        super().__init__(
            f"sentence for rule={rule_id} r={rounds} i={max_index} "
            f"has an estimated {estimate} nodes, cap is {cap}"
        )
        self.rule_id = rule_id
        self.rounds = rounds
        self.max_index = max_index
        self.estimate = estimate
        self.cap = cap


class MethodDisagreementError(SeparationToolkitError):
    """Two decision procedures that must agree gave different answers"""

    def __init__(self, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.detail = detail or {}
