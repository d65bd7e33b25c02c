"""Exception hierarchy shared across the pipeline stages."""

from __future__ import annotations


class ChipforgeError(Exception):
    """Base class for all pipeline errors."""


class GatewayError(ChipforgeError):
    """Base class for model-gateway failures."""


class ProviderError(GatewayError):
    """Live provider failed (network, auth, malformed reply)."""


class ReplayMiss(GatewayError):
    """Replay cassette has no entry for the request fingerprint."""


class BudgetExceeded(GatewayError):
    """Completing the request would exceed the global token budget."""


class UnknownTemplate(GatewayError):
    pass


class UnboundPlaceholder(GatewayError):
    pass


class EmptyListing(ChipforgeError):
    pass


class MalformedListing(ChipforgeError):
    """No layer line could be recognized in the model listing."""


class PrompterAborted(ChipforgeError):
    """The interactive answer source quit or ran out of answers."""


class SchemaError(ChipforgeError):
    """A module description violates the six-component schema."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class CorruptEntry(ChipforgeError):
    """A stored library record violates its schema."""


class ParseFailure(ChipforgeError):
    """Generator output never parsed within the round budget."""


class EvaluatorNeverPassed(ChipforgeError):
    """Description evaluator rejected every round."""


class PersistenceError(ChipforgeError):
    pass


class UnknownKey(ChipforgeError):
    """A weight update names an entry absent from the code library."""


class MissingDescription(ChipforgeError):
    """A submodule is named but absent from the description library."""


class CycleDetected(ChipforgeError):
    pass


class MissingPPA(ChipforgeError):
    """A mapped hardware unit lacks synthesized or analytical PPA figures."""


class ValidatorExhausted(ChipforgeError):
    """Repair loop ran out of iterations even after the debug manual."""


class AdapterUnavailable(ChipforgeError):
    pass


class TimeoutExceeded(ChipforgeError):
    """Simulator run exceeded its wall-clock cap."""


class ToolError(ChipforgeError):
    """External tool exited nonzero."""


class ReportParseError(ChipforgeError):
    """Synthesis report is missing a required section."""


class RevisionCapExceeded(ChipforgeError):
    pass


class DomainError(ChipforgeError):
    """Arguments outside the documented domain of a metric."""
