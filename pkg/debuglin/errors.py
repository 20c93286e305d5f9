#!/usr/bin/env python3
# Exception hierarchy shared by every debuglin module


class DebugLinError(Exception):
    """Base class for all errors raised by debuglin"""


class DomainError(DebugLinError, ValueError):
    """Arithmetic or model evaluation outside its domain"""


class DimensionError(DomainError):
    """Vector lengths do not match"""


class InstanceValidationError(DebugLinError):
    """
    An instance violates one or more type invariants

    The full ValidationReport is kept on the exception so callers can list
    every violation, not only the first.
    """

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations) or "invalid instance")


class FormatError(DebugLinError):
    """A document could not be parsed; messages carry line or path context"""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class SolverError(DebugLinError):
    """Solver precondition violated or witness self-check failed"""


class ReductionError(DebugLinError):
    """Malformed reduction input or violated construction precondition"""
