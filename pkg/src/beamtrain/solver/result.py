"""Container returned by every reconstruction backend."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(eq=False)
class ReconstructionResult:
    """Channel estimate and solver diagnostics.

    ``alpha`` holds one coefficient per feedback beam. ``refined_theta`` and
    ``refined_range`` are set only by the off-grid refinement (``inf`` range
    marks a far-field atom).
    """

    h_hat: np.ndarray
    alpha: np.ndarray
    refined_theta: np.ndarray | None = None
    refined_range: np.ndarray | None = None
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    kkt_residual: float = float("nan")
    flags: list[str] = field(default_factory=list)

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_objective": self.final_objective,
            "kkt_residual": self.kkt_residual,
            "converged": self.converged,
            "flags": ";".join(self.flags),
        }
