"""Beam sweep measurement and top-K feedback selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import NoiseModel
from .codebook import Codebook
from .errors import ConfigError, DimensionError


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Received pilot y_i = h^H v_i + w_i for every beam of a codebook."""

    measurements: np.ndarray
    codebook_ref: str
    noise: NoiseModel

    def __len__(self) -> int:
        return len(self.measurements)


@dataclass(frozen=True, eq=False)
class FeedbackReport:
    """Indices of the K strongest beams with their exact complex measurements,
    strongest first."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise DimensionError("indices and values must align")
        if len(np.unique(self.indices)) != len(self.indices):
            raise ConfigError("feedback indices must be unique")

    @property
    def K(self) -> int:
        return len(self.indices)

    @property
    def target(self) -> np.ndarray:
        "The K-vector y_K^H consumed by the reconstruction solvers."
        return np.conj(self.values)


def beam_sweep(
    h: np.ndarray, codebook: Codebook, noise: NoiseModel, rng: np.random.Generator | None = None
) -> SweepResult:
    """Sweep every codeword with pilot x = 1 and add CN(0, sigma^2) noise per beam."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (codebook.geometry.n_antennas,):
        raise DimensionError(
            f"channel length {h.shape} does not match codebook array size {codebook.geometry.n_antennas}"
        )
    y = h.conj() @ codebook.columns
    if noise.sigma_sq > 0:
        if rng is None:
            raise ConfigError("a random generator is required for a noisy sweep")
        m = codebook.size
        y = y + np.sqrt(noise.sigma_sq / 2) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return SweepResult(y, codebook.name, noise)


def select_top_k(sweep: SweepResult, K: int) -> FeedbackReport:
    """Keep the K largest |y_i|; ties go to the lower beam index."""
    m = len(sweep)
    if int(K) != K or not 1 <= K <= m:
        raise ConfigError(f"K must be an integer in [1, {m}], got {K}")
    order = np.argsort(-np.abs(sweep.measurements), kind="stable")[: int(K)]
    return FeedbackReport(order, sweep.measurements[order])
