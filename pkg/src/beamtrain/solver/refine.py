"""Off-grid refinement of the selected beams' (theta, range) parameters.

The swept beams V_K that produced the feedback stay fixed; only the synthesis
dictionary V_K(theta, r) is moved. Alternates a LASSO solve for the
combining weights with projected gradient steps on the continuous
parameters. Ranges are stepped in inverse range ``u = 1/r`` so that
far-field atoms (``u = 0``) are handled without special cases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..codebook import CodewordMeta
from ..errors import ConfigError, DimensionError
from ..geometry import ArrayGeometry
from ..sweep import FeedbackReport
from .lasso import LassoConfig, lasso_objective, lasso_solve
from .linear import gram_pinv
from .result import ReconstructionResult

MODES = ("polar", "dft")


@dataclass(frozen=True)
class RefineConfig:
    """Refinement schedule.

    ``step_theta`` is the initial step on theta and ``step_range`` the initial
    step on inverse range (1/m); both adapt by doubling on success and halving
    on failure. ``min_range`` keeps refined atoms outside ``[0, min_range)``.
    Weight solves between parameter updates are capped at
    ``inner_lasso_iters`` sweeps; the final solve runs to the LASSO tolerance.
    """

    step_theta: float = 1e-3
    step_range: float = 1e-2
    max_outer_iters: int = 200
    alternate_inner_iters: int = 5
    tol: float = 1e-4
    min_range: float = 0.5
    max_backtracks: int = 40
    pinv_tol: float = 1e-10
    inner_lasso_iters: int = 50

    def __post_init__(self):
        if not (self.step_theta > 0 and self.step_range > 0):
            raise ConfigError("refinement steps must be positive", "refine.step_theta")
        if self.max_outer_iters < 1 or self.alternate_inner_iters < 1 or self.inner_lasso_iters < 1:
            raise ConfigError("iteration counts must be positive", "refine.max_outer_iters")
        if not self.min_range > 0:
            raise ConfigError("min_range must be positive", "refine.min_range")


def _phase_terms(geom: ArrayGeometry):
    delta = geom.offsets[:, None]
    s = geom.spacing_ratio
    lin = np.pi * s * delta
    quad = np.pi * s * geom.spacing * delta**2 / 2
    return lin, quad


def dictionary(geom: ArrayGeometry, theta: np.ndarray, inv_range: np.ndarray) -> np.ndarray:
    """Codewords at continuous (theta, 1/r), one column per atom."""
    lin, quad = _phase_terms(geom)
    psi = lin * theta + quad * (1 - theta**2) * inv_range
    return np.exp(-1j * psi) / np.sqrt(geom.n_antennas)


def _smooth_grads(geom, sweep_h, target, theta, inv_range, alpha, d=None):
    """Residual-term value and its gradients w.r.t. theta and 1/r."""
    lin, quad = _phase_terms(geom)
    if d is None:
        d = dictionary(geom, theta, inv_range)
    resid = target - sweep_h @ (d @ alpha)
    value = 0.5 * np.vdot(resid, resid).real
    # d/dp of column k is -j (dpsi/dp) * d_k; gradient of 0.5||e||^2 is -Re(e^H A dD alpha)
    dpsi_theta = lin - 2 * quad * theta * inv_range
    dpsi_u = quad * (1 - theta**2)
    back = sweep_h.conj().T @ resid  # A^H e, length N
    common = np.conj(back)[:, None] * (-1j * d) * alpha[None, :]
    g_theta = -np.real((common * dpsi_theta).sum(axis=0))
    g_u = -np.real((common * dpsi_u).sum(axis=0))
    return value, g_theta, g_u


def refine_objective(
    geom: ArrayGeometry,
    sweep_h: np.ndarray,
    target: np.ndarray,
    theta: np.ndarray,
    range_: np.ndarray,
    alpha: np.ndarray,
    weight: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Objective ``0.5||b - A V(theta, r) a||^2 + w||a||_1`` with its analytic
    gradients w.r.t. theta and r.

    ``sweep_h`` is ``A = V_K^H`` (K x N). Infinite ranges are allowed; their
    range gradient is reported as zero.
    """
    theta = np.asarray(theta, dtype=float)
    range_ = np.asarray(range_, dtype=float)
    inv = np.where(np.isinf(range_), 0.0, 1.0 / range_)
    value, g_theta, g_u = _smooth_grads(geom, sweep_h, target, theta, inv, alpha)
    g_r = -g_u * inv**2
    return value + weight * np.abs(alpha).sum(), g_theta, g_r


def _projected_steps(f, x, grad_fn, lo, hi, eta, n_steps, max_backtracks, mask):
    """Normalised projected-gradient steps with halving backtracking.

    Returns the new point, its value, the adapted step, and whether the line
    search ever ran out of halvings.
    """
    fx = f(x)
    stalled = False
    for _ in range(n_steps):
        g = grad_fn(x) * mask
        gmax = np.abs(g).max(initial=0.0)
        if gmax == 0:
            break
        direction = g / gmax
        for _ in range(max_backtracks):
            trial = np.clip(x - eta * direction, lo, hi)
            ft = f(trial)
            if ft < fx:
                x, fx = trial, ft
                eta *= 2
                break
            eta /= 2
        else:
            stalled = True
            break
    return x, fx, eta, stalled


def refine(
    geom: ArrayGeometry,
    subset: np.ndarray,
    report: FeedbackReport,
    init: Sequence[CodewordMeta],
    cfg: RefineConfig = RefineConfig(),
    lasso: LassoConfig = LassoConfig(),
    mode: str = "polar",
    sigma: float = 0.0,
) -> ReconstructionResult:
    """Jointly refine combining weights and atom parameters.

    Parameters
    ----------
    geom : ArrayGeometry
    subset : (N, K) complex array
        The swept beams that produced ``report`` (kept fixed).
    report : FeedbackReport
    init : sequence of CodewordMeta
        Grid parameters of the selected beams, aligned with ``report``.
    cfg, lasso : RefineConfig, LassoConfig
    mode : {"polar", "dft"}
        ``"polar"`` moves theta and range with an L1-penalised weight solve;
        ``"dft"`` keeps far-field atoms, moves theta only, and solves the
        weights by least squares.
    sigma : float
        Noise standard deviation, used by the default L1 weight rule.

    Returns
    -------
    ReconstructionResult
        Estimate ``V_K(theta_hat, r_hat) a_hat`` with the refined parameters.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown refine mode {mode!r}; expected {MODES}")
    K = report.K
    if subset.shape != (geom.n_antennas, K) or len(init) != K:
        raise DimensionError("subset, report and init must all describe the same K beams")

    a_mat = subset.conj().T
    b = report.target
    theta = np.array([m.theta_grid for m in init], dtype=float)
    if mode == "dft":
        inv = np.zeros(K)
        weight = 0.0
    else:
        inv = np.array([0.0 if m.range_grid is None else 1.0 / m.range_grid for m in init])
        weight = lasso.resolve_weight(sigma, K)
    u_max = 1.0 / cfg.min_range
    # grid rings inside min_range (small arrays) start on the clamp instead
    inv = np.minimum(inv, u_max)

    inner_lasso = replace(lasso, max_iters=min(lasso.max_iters, cfg.inner_lasso_iters))

    def solve_alpha(th, u, warm, final=False):
        design = a_mat @ dictionary(geom, th, u)
        if mode == "dft":
            pinv, _ = gram_pinv(design.conj().T @ design, cfg.pinv_tol)
            cand = pinv @ (design.conj().T @ b)
            # the LS solve is exact up to rounding; never accept a worse point
            if warm is not None and lasso_objective(design, b, warm, 0.0) <= lasso_objective(design, b, cand, 0.0):
                return warm, True
            return cand, True
        sol = lasso_solve(design, b, lasso if final else inner_lasso, weight, init=warm)
        return sol.alpha, sol.converged

    # atoms with zero weight contribute nothing, so only active columns are built;
    # the last dictionary is kept since a gradient follows each accepted step
    last: dict = {}

    def atoms(th, u, idx):
        key = (idx.tobytes(), th[idx].tobytes(), u[idx].tobytes())
        if last.get("key") != key:
            last["key"], last["d"] = key, dictionary(geom, th[idx], u[idx])
        return last["d"]

    def total(th, u, a):
        idx = np.flatnonzero(a)
        return lasso_objective(a_mat @ atoms(th, u, idx), b, a[idx], weight)

    def grads(th, u, a):
        idx = np.flatnonzero(a)
        g_t, g_u = np.zeros(K), np.zeros(K)
        _, g_t[idx], g_u[idx] = _smooth_grads(geom, a_mat, b, th[idx], u[idx], a[idx], atoms(th, u, idx))
        return g_t, g_u

    alpha, _ = solve_alpha(theta, inv, None)
    flags: list[str] = []
    trace = [total(theta, inv, alpha)]
    eta_t, eta_u = cfg.step_theta, cfg.step_range
    stalls = 0
    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer_iters + 1):
        active = (np.abs(alpha) > 0).astype(float)

        def f_theta(th):
            return total(th, inv, alpha)

        def g_theta(th):
            return grads(th, inv, alpha)[0]

        theta, _, eta_t, st = _projected_steps(
            f_theta, theta, g_theta, -1.0, 1.0, eta_t, cfg.alternate_inner_iters, cfg.max_backtracks, active
        )
        stalls += st
        if mode == "polar":

            def f_u(u):
                return total(theta, u, alpha)

            def g_u(u):
                return grads(theta, u, alpha)[1]

            inv, _, eta_u, st = _projected_steps(
                f_u, inv, g_u, 0.0, u_max, eta_u, cfg.alternate_inner_iters, cfg.max_backtracks, active
            )
            stalls += st
        alpha, _ = solve_alpha(theta, inv, alpha)
        trace.append(total(theta, inv, alpha))
        prev, cur = trace[-2], trace[-1]
        if prev - cur <= cfg.tol * max(prev, np.finfo(float).tiny):
            converged = True
            break

    alpha, ok = solve_alpha(theta, inv, alpha, final=True)
    trace.append(total(theta, inv, alpha))
    if not ok:
        flags.append("lasso_not_converged")
    if stalls:
        flags.append(f"line_search_stalls:{stalls}")
    h_hat = dictionary(geom, theta, inv) @ alpha
    ranges = np.where(inv > 0, 1.0 / np.where(inv > 0, inv, 1.0), np.inf)
    return ReconstructionResult(
        h_hat,
        alpha,
        refined_theta=theta,
        refined_range=ranges,
        objective_trace=trace,
        iterations=outer,
        converged=converged,
        flags=flags,
    )
