from typing import Any, Dict, List, Optional


class ProbAlignError(Exception):
    """Base class for every error the library raises on bad data or failed searches."""

    code = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form printed on stderr by the CLI."""
        return {"error": self.code, "message": self.message, "details": self.details}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ProbAlignError":
        """Rebuild an error that crossed a process boundary as its to_dict() form."""
        error = ProbAlignError(payload.get("message", ""), payload.get("details"))
        error.code = payload.get("error", cls.code)
        return error


class UsageError(ProbAlignError):
    code = "usage"


class InvalidInput(ProbAlignError):
    code = "invalid_input"


class NotEnabled(ProbAlignError):
    code = "not_enabled"

    def __init__(self, transition: str):
        super().__init__(f"transition {transition!r} is not enabled", {"transition": transition})
        self.transition = transition


class InvalidMarking(InvalidInput):
    code = "invalid_marking"


class InvalidNet(InvalidInput):
    code = "invalid_net"

    def __init__(self, violations: List[Any]):
        super().__init__(
            f"net has {len(violations)} violation(s): " + "; ".join(str(v) for v in violations[:5]),
            {"violations": [str(v) for v in violations]},
        )
        self.violations = violations


class MissingFinalMarking(InvalidInput):
    code = "missing_final_marking"


class EmptyTrace(InvalidInput):
    code = "empty_trace"


class LogValidationError(InvalidInput):
    code = "log_validation"

    def __init__(self, violations: List[Any]):
        super().__init__(
            f"log has {len(violations)} violation(s): " + "; ".join(str(v) for v in violations[:5]),
            {"violations": [str(v) for v in violations]},
        )
        self.violations = violations


class InvalidWeight(InvalidInput):
    code = "invalid_weight"


class InvalidEpsilon(InvalidInput):
    code = "invalid_epsilon"


class LengthMismatch(InvalidInput):
    code = "length_mismatch"


class UniverseTooSmall(InvalidInput):
    code = "universe_too_small"


class NoAlignment(ProbAlignError):
    code = "no_alignment"


class BudgetExceeded(ProbAlignError):
    code = "budget_exceeded"


class NodeBudgetExceeded(BudgetExceeded):
    code = "node_budget_exceeded"


class SearchTimeout(BudgetExceeded):
    code = "timeout"


class ParseError(ProbAlignError):
    code = "parse_error"

    def __init__(self, message: str, line: Optional[int] = None, element: Optional[str] = None):
        context = []
        if line is not None:
            context.append(f"line {line}")
        if element is not None:
            context.append(f"element {element}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(message + suffix, {"line": line, "element": element})
        self.line = line
        self.element = element


class UnsupportedFeature(ParseError):
    code = "unsupported_feature"


class SchemaError(ParseError):
    code = "schema_error"
