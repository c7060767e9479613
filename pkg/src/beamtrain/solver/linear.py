"""Linear-combination reconstruction from top-K feedback."""

from __future__ import annotations

import numpy as np

from ..sweep import FeedbackReport
from .result import ReconstructionResult


def reconstruct_orthonormal(subset: np.ndarray, report: FeedbackReport) -> ReconstructionResult:
    """h = V_K y_K^H, valid when the swept beams are orthonormal (DFT)."""
    alpha = report.target
    return ReconstructionResult(subset @ alpha, alpha, iterations=0)


def gram_pinv(gram: np.ndarray, pinv_tol: float = 1e-10) -> tuple[np.ndarray, int]:
    """Pseudo-inverse of a Hermitian PSD Gram matrix.

    Eigenvalues below ``pinv_tol`` times the largest are discarded. Returns the
    pseudo-inverse and the number of discarded directions.
    """
    w, q = np.linalg.eigh(gram)
    cutoff = pinv_tol * max(np.abs(w).max(), 0.0)
    keep = np.abs(w) > cutoff
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (q * inv) @ q.conj().T, int((~keep).sum())


def ls_coefficients(gram: np.ndarray, target: np.ndarray, pinv_tol: float = 1e-10) -> tuple[np.ndarray, int]:
    pinv, dropped = gram_pinv(gram, pinv_tol)
    return pinv @ target, dropped


def reconstruct_ls(
    subset: np.ndarray, report: FeedbackReport, pinv_tol: float = 1e-10
) -> ReconstructionResult:
    """alpha = (V_K^H V_K)^+ y_K^H and h = V_K alpha."""
    gram = subset.conj().T @ subset
    alpha, dropped = ls_coefficients(gram, report.target, pinv_tol)
    res = ReconstructionResult(subset @ alpha, alpha)
    if dropped:
        res.flags.append(f"rank_truncated:{dropped}")
    return res
