# maipp/core/errors.py

from typing import Any, Dict, Optional


class MaippError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(MaippError, ValueError):
    """A location, index or size falls outside what an operation accepts."""


class BudgetExhausted(MaippError):
    """No neighbor is reachable with the remaining budget; the agent halts."""


class EigenSolverError(MaippError):
    """The Laplacian eigendecomposition did not produce a usable basis."""


class CheckpointError(MaippError):
    """A checkpoint file is missing, malformed or of an unknown version."""


class MethodSpecError(MaippError, ValueError):
    """A method label such as ``TI(8,5)*`` could not be parsed."""


class TrainingDivergence(MaippError, FloatingPointError):
    """A PPO loss became non-finite; ``diagnostics`` holds the offending terms."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
