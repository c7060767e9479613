"""Reconstruction-quality metrics and overhead search."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BeamTrainError, ConfigError


class Scheme(str, Enum):
    DFT = "DFT"
    NF = "NF"
    NF_LASSO = "NF_LASSO"
    NF_REFINE = "NF_REFINE"
    DFT_REFINE = "DFT_REFINE"


CSV_HEADER = ("scheme", "K", "snr_db", "L", "seed", "l2_error", "rate", "rate_upper")
NOT_REACHED = -1
"Sentinel returned by :func:`min_overhead_for_fraction` when no K qualifies."


class ZeroVectorError(BeamTrainError, ValueError):
    pass


def _unit(v: np.ndarray, name: str) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise ZeroVectorError(f"{name} is the zero vector")
    return v / n


def l2_error(h: np.ndarray, h_hat: np.ndarray) -> float:
    """|| h/||h|| - h_hat/||h_hat|| ||_2, in [0, 2]; no phase alignment."""
    return float(np.linalg.norm(_unit(h, "h") - _unit(h_hat, "h_hat")))


def l2_error_aligned(h: np.ndarray, h_hat: np.ndarray) -> float:
    """Same as :func:`l2_error` after removing the best common phase."""
    u, v = _unit(h, "h"), _unit(h_hat, "h_hat")
    c = np.vdot(v, u)
    if c != 0:
        v = v * (c / abs(c))
    return float(np.linalg.norm(u - v))


def achievable_rate(h: np.ndarray, h_hat: np.ndarray, sigma_sq: float) -> float:
    """log2(1 + |h^H h_hat|^2 / (||h_hat||^2 sigma^2)) in bps/Hz."""
    if not sigma_sq > 0:
        raise ConfigError(f"noise variance must be positive, got {sigma_sq}")
    nrm = np.vdot(h_hat, h_hat).real
    if nrm == 0:
        raise ZeroVectorError("h_hat is the zero vector")
    gain = abs(np.vdot(h, h_hat)) ** 2 / nrm
    return float(np.log2(1 + gain / sigma_sq))


def perfect_csi_rate(h: np.ndarray, sigma_sq: float) -> float:
    return achievable_rate(h, h, sigma_sq)


@dataclass(frozen=True)
class TrialRecord:
    scheme: str
    K: int
    snr_db: float
    L: int
    seed: int
    l2_error: float
    rate: float
    rate_upper: float

    def __post_init__(self):
        if not -1e-12 <= self.l2_error <= 2 + 1e-12:
            raise ValueError(f"l2_error {self.l2_error} outside [0, 2]")
        if self.rate < 0 or self.rate > self.rate_upper + 1e-9:
            raise ValueError(f"rate {self.rate} outside [0, {self.rate_upper}]")

    def row(self) -> tuple:
        return tuple(getattr(self, f) for f in CSV_HEADER)


def format_float(x: float) -> str:
    return repr(float(x))


def records_to_csv(records: Iterable[TrialRecord], extra: Sequence[str] = ()) -> str:
    """Serialise records with the fixed header; rows are written in the given order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + tuple(extra))
    for r in records:
        row = [r.scheme, r.K, format_float(r.snr_db), r.L, r.seed, format_float(r.l2_error),
               format_float(r.rate), format_float(r.rate_upper)]
        row += [getattr(r, e) for e in extra]
        w.writerow(row)
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        TrialRecord(r["scheme"], int(r["K"]), float(r["snr_db"]), int(r["L"]), int(r["seed"]),
                    float(r["l2_error"]), float(r["rate"]), float(r["rate_upper"]))
        for r in rows
    ]


def min_overhead_for_fraction(
    rates_by_k: Callable[[int], Sequence[float]] | dict[int, Sequence[float]],
    upper: Sequence[float],
    fraction: float,
    k_max: int,
) -> int:
    """Smallest K <= k_max whose mean rate reaches ``fraction`` of the mean
    perfect-CSI rate over the same ensemble.

    ``rates_by_k`` maps K to the per-scene rates of one scheme (a dict, or a
    callable evaluated lazily in increasing K). Returns :data:`NOT_REACHED`
    if no K qualifies.
    """
    if not 0 <= fraction <= 1:
        raise ConfigError(f"fraction must lie in [0, 1], got {fraction}")
    if len(upper) == 0:
        raise ConfigError("empty ensemble")
    bar = fraction * float(np.mean(upper))
    get = rates_by_k.get if isinstance(rates_by_k, dict) else rates_by_k
    for k in range(1, k_max + 1):
        rates = get(k)
        if rates is None:
            continue
        if len(rates) == 0:
            raise ConfigError("empty ensemble")
        if float(np.mean(rates)) >= bar - 1e-12 * abs(bar):
            return k
    return NOT_REACHED


def mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se


def captured_energy_count(h: np.ndarray, columns: np.ndarray, fraction: float, tol: float = 1e-10) -> int:
    """Number of strongest beams whose span holds ``fraction`` of ``||h||^2``.

    Beams are ranked by ``|v^H h|`` (stable, ties to the lower index) and added
    one at a time; the captured energy is that of the orthogonal projection of
    ``h`` onto their span, so redundant neighbours of an already-captured beam
    add nothing. Returns :data:`NOT_REACHED` if all beams together fall short.
    """
    if not 0 < fraction <= 1:
        raise ConfigError(f"fraction must lie in (0, 1], got {fraction}")
    total = np.vdot(h, h).real
    if total == 0:
        raise ZeroVectorError("h is the zero vector")
    order = np.argsort(-np.abs(columns.conj().T @ h), kind="stable")
    basis = np.zeros((len(h), 0), dtype=complex)
    captured = 0.0
    for k, idx in enumerate(order, start=1):
        v = columns[:, idx]
        for _ in range(2):  # re-orthogonalise once for stability
            v = v - basis @ (basis.conj().T @ v)
        n = np.linalg.norm(v)
        if n > tol:
            q = v / n
            basis = np.column_stack([basis, q])
            captured += abs(np.vdot(q, h)) ** 2
        if captured >= fraction * total * (1 - 1e-12):
            return k
        if basis.shape[1] == len(h):
            break
    return NOT_REACHED
