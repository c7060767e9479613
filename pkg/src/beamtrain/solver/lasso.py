"""Complex-valued LASSO in the Gram form used for multi-beam combining.

Solves ``min_a 0.5 * ||b - G a||^2 + w * sum_i |a_i|`` where ``|.|`` is the
complex modulus. Three monotone solvers are provided: cyclic coordinate
descent, ISTA and monotone FISTA.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigError, DimensionError
from ..sweep import FeedbackReport
from .result import ReconstructionResult

ALGORITHMS = ("coordinate_descent", "ista", "fista")
_TINY = np.finfo(float).tiny
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LassoConfig:
    """LASSO settings.

    ``lasso_weight`` fixes the L1 weight. When it is ``None`` the weight is
    ``weight_scale * sigma * sqrt(2 log K)``, the universal threshold for
    noise standard deviation ``sigma`` and K measurements.
    """

    lasso_weight: float | None = None
    weight_scale: float = 1.0
    max_iters: int = 20000
    tol: float = 1e-8
    algorithm: str = "coordinate_descent"

    def __post_init__(self):
        if self.lasso_weight is not None and not self.lasso_weight >= 0:
            raise ConfigError(f"must be non-negative, got {self.lasso_weight}", "lasso.lasso_weight")
        if not self.weight_scale >= 0:
            raise ConfigError("must be non-negative", "lasso.weight_scale")
        if not self.tol > 0:
            raise ConfigError(f"must be positive, got {self.tol}", "lasso.tol")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("must be a positive integer", "lasso.max_iters")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected {ALGORITHMS}", "lasso.algorithm")

    def resolve_weight(self, sigma: float, K: int) -> float:
        if self.lasso_weight is not None:
            return float(self.lasso_weight)
        return default_lasso_weight(sigma, K, self.weight_scale)


def default_lasso_weight(sigma: float, K: int, scale: float = 1.0) -> float:
    return float(scale * sigma * np.sqrt(2 * np.log(K))) if K > 1 else 0.0


@dataclass(eq=False)
class LassoSolution:
    alpha: np.ndarray
    objective_trace: list[float]
    iterations: int
    converged: bool
    kkt_residual: float
    weight: float


def soft_threshold(x: np.ndarray, thresh: float | np.ndarray) -> np.ndarray:
    """Complex soft threshold: shrink each modulus by ``thresh``, keep the phase."""
    mag = np.abs(x)
    scale = np.maximum(mag - thresh, 0.0) / np.maximum(mag, _TINY)
    return x * scale


def lasso_objective(gram: np.ndarray, target: np.ndarray, alpha: np.ndarray, weight: float) -> float:
    r = target - gram @ alpha
    return float(0.5 * np.vdot(r, r).real + weight * np.abs(alpha).sum())


def kkt_residual(gram: np.ndarray, target: np.ndarray, alpha: np.ndarray, weight: float) -> float:
    """Largest violation of the LASSO optimality conditions, relative to
    ``max |G^H b|`` (zero exactly at the minimiser)."""
    grad = gram.conj().T @ (gram @ alpha - target)
    mag = np.abs(alpha)
    nz = mag > 0
    viol = np.empty(len(alpha))
    viol[nz] = np.abs(grad[nz] + weight * alpha[nz] / mag[nz])
    viol[~nz] = np.maximum(np.abs(grad[~nz]) - weight, 0.0)
    scale = np.abs(gram.conj().T @ target).max(initial=0.0)
    worst = float(viol.max(initial=0.0))
    return worst / scale if scale > 0 else worst


Check = Callable[[np.ndarray], bool]


def _coordinate_descent(hess, lin, alpha, weight, cfg, objective, optimal: Check):
    diag = np.real(np.diag(hess)).copy()
    grad = hess @ alpha - lin
    cols = [hess[:, j].copy() for j in range(len(alpha))]
    trace = [objective(alpha)]
    it = 0
    for it in range(1, cfg.max_iters + 1):
        max_change = 0.0
        for j in range(len(alpha)):
            if diag[j] <= 0:
                continue
            old = alpha[j]
            z = old - grad[j] / diag[j]
            mag = abs(z)
            t = weight / diag[j]
            new = z * ((mag - t) / mag) if mag > t else 0j
            d = new - old
            if d != 0:
                alpha[j] = new
                grad += cols[j] * d
                max_change = max(max_change, abs(d))
        trace.append(objective(alpha))
        if max_change <= cfg.tol * max(np.abs(alpha).max(initial=0.0), _TINY) and optimal(alpha):
            return alpha, trace, it, True
    return alpha, trace, it, optimal(alpha)


def _proximal(hess, lin, alpha, weight, cfg, objective, optimal: Check, accelerate: bool):
    lip = float(np.linalg.eigvalsh(hess).max())
    if lip <= 0:
        zero = np.zeros_like(alpha)
        return zero, [objective(zero)], 0, True
    step = 1.0 / lip
    x = alpha.copy()
    fx = objective(x)
    trace = [fx]
    y, t = x.copy(), 1.0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        point = y if accelerate else x
        z = soft_threshold(point - step * (hess @ point - lin), step * weight)
        fz = objective(z)
        x_old = x
        # accept rounding-level ties so the exact prox step is never refused
        if fz <= fx + 4 * _EPS * abs(fx):
            x, fx = z, fz
        if accelerate:
            # monotone FISTA: momentum built from the prox point z, not the accepted x
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            y = x + (t / t_new) * (z - x) + ((t - 1) / t_new) * (x - x_old)
            t = t_new
        trace.append(fx)
        change = np.abs(z - point).max(initial=0.0)
        if change <= cfg.tol * max(np.abs(x).max(initial=0.0), _TINY) and optimal(x):
            return x, trace, it, True
    return x, trace, it, optimal(x)


def lasso_solve(
    gram: np.ndarray,
    target: np.ndarray,
    cfg: LassoConfig = LassoConfig(),
    weight: float | None = None,
    init: np.ndarray | None = None,
) -> LassoSolution:
    """Minimise ``0.5 ||target - gram @ a||^2 + weight * ||a||_1`` over complex ``a``.

    Parameters
    ----------
    gram : (K, K) complex array
        Design matrix; in the multi-beam setting this is ``V_K^H V_K``, but any
        matrix is accepted.
    target : (K,) complex array
        ``y_K^H``.
    cfg : LassoConfig
    weight : float, optional
        L1 weight; defaults to ``cfg.lasso_weight`` (which must then be set).
    init : (K,) complex array, optional
        Warm start. The returned objective never exceeds the one at ``init``.

    Returns
    -------
    LassoSolution
        ``converged`` is False when ``max_iters`` ran out before the KKT
        residual fell below ``cfg.tol``; ``alpha`` is then the best iterate.
    """
    gram = np.asarray(gram, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if gram.ndim != 2 or gram.shape[0] != target.shape[0]:
        raise DimensionError(f"gram {gram.shape} incompatible with target {target.shape}")
    if weight is None:
        if cfg.lasso_weight is None:
            raise ConfigError("no L1 weight given and lasso_weight unset", "lasso.lasso_weight")
        weight = cfg.lasso_weight
    if not weight >= 0:
        raise ConfigError(f"L1 weight must be non-negative, got {weight}")
    k = gram.shape[1]
    alpha = np.zeros(k, dtype=complex) if init is None else np.array(init, dtype=complex)
    if alpha.shape != (k,):
        raise DimensionError(f"init shape {alpha.shape} does not match {k} coefficients")

    hess = gram.conj().T @ gram
    lin = gram.conj().T @ target

    def objective(a):
        return lasso_objective(gram, target, a, weight)

    def optimal(a):
        return kkt_residual(gram, target, a, weight) <= cfg.tol

    if cfg.algorithm == "coordinate_descent":
        alpha, trace, its, ok = _coordinate_descent(hess, lin, alpha, weight, cfg, objective, optimal)
    else:
        alpha, trace, its, ok = _proximal(
            hess, lin, alpha, weight, cfg, objective, optimal, accelerate=cfg.algorithm == "fista"
        )
    return LassoSolution(alpha, trace, its, ok, kkt_residual(gram, target, alpha, weight), float(weight))


def reconstruct_lasso(
    subset: np.ndarray,
    report: FeedbackReport,
    cfg: LassoConfig = LassoConfig(),
    sigma: float = 0.0,
) -> ReconstructionResult:
    """Sparse combination h = V_K a with a from the Gram-form LASSO."""
    gram = subset.conj().T @ subset
    weight = cfg.resolve_weight(sigma, report.K)
    sol = lasso_solve(gram, report.target, cfg, weight)
    res = ReconstructionResult(
        subset @ sol.alpha,
        sol.alpha,
        objective_trace=sol.objective_trace,
        iterations=sol.iterations,
        converged=sol.converged,
        kkt_residual=sol.kkt_residual,
    )
    if not sol.converged:
        res.flags.append("lasso_not_converged")
    return res
