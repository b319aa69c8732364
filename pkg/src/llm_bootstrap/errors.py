"""Exception types shared across the pipeline."""

from __future__ import annotations


class BootstrapError(Exception):
    """Base class for every error raised by this package."""


# --- dataset / task errors ---------------------------------------------------

class MalformedRecord(BootstrapError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class UnknownLabel(BootstrapError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} is not part of the task")
        self.label = label


class InsufficientExamples(BootstrapError):
    def __init__(self, label: str, available: int, requested: int):
        super().__init__(
            f"label {label!r} has {available} real examples, need {requested}"
        )
        self.label = label
        self.available = available
        self.requested = requested


class IoFailure(BootstrapError):
    pass


# --- gateway errors ----------------------------------------------------------

class GatewayError(BootstrapError):
    pass


class GatewayTimeout(GatewayError):
    pass


class TransportFailure(GatewayError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ExhaustedRetries(GatewayError):
    def __init__(self, attempts: int, last_error: Exception):
        super().__init__(f"gave up after {attempts} attempts: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


class UnscriptedPrompt(GatewayError):
    def __init__(self, prompt: str):
        excerpt = prompt if len(prompt) <= 120 else prompt[:117] + "..."
        super().__init__(f"no script entry matches prompt: {excerpt!r}")
        self.prompt = prompt


# --- prompt errors -----------------------------------------------------------

class MixedSeedLabels(BootstrapError):
    def __init__(self, expected: str, found: str):
        super().__init__(f"seed labeled {found!r} mixed into {expected!r} batch")
        self.expected = expected
        self.found = found


class EmptyDemos(BootstrapError):
    pass


# --- pipeline errors ---------------------------------------------------------

class InsufficientYield(BootstrapError):
    def __init__(self, label: str, accepted: int, wanted: int):
        super().__init__(
            f"label {label!r}: only {accepted}/{wanted} accepted before max_rounds"
        )
        self.label = label
        self.accepted = accepted
        self.wanted = wanted


class ConfigMismatch(BootstrapError):
    pass


class CorruptCheckpoint(BootstrapError):
    pass


class PipelineLocked(BootstrapError):
    pass


# --- analysis errors ---------------------------------------------------------

class SizeExceedsDataset(BootstrapError):
    def __init__(self, size: int, dataset_size: int):
        super().__init__(f"requested size {size} exceeds dataset size {dataset_size}")
        self.size = size
        self.dataset_size = dataset_size
