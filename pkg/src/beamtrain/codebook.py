"""DFT and polar-domain (angle x distance) beam-sweeping codebooks."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .geometry import ArrayGeometry

logger = logging.getLogger(__name__)


class CodewordKind(str, Enum):
    DFT = "DFT"
    POLAR = "POLAR"


@dataclass(frozen=True)
class CodewordMeta:
    """Generating parameters of one codeword.

    ``range_grid`` is ``None`` for far-field (planar) codewords.
    """

    index: int
    theta_grid: float
    range_grid: float | None
    kind: CodewordKind
    angle_index: int = 0
    ring: int = 0

    def __post_init__(self):
        if not -1.0 <= self.theta_grid <= 1.0:
            raise ConfigError(f"codeword theta {self.theta_grid} outside [-1, 1]")
        if self.range_grid is not None and not self.range_grid > 0:
            raise ConfigError(f"codeword range {self.range_grid} must be positive")


def codeword_phase(geom: ArrayGeometry, theta: float, range_: float | None) -> np.ndarray:
    """Per-element phase psi_n such that the codeword is exp(-j psi_n) / sqrt(N).

    For ``d = lambda / 2`` this is ``pi delta theta + pi d delta^2 (1 - theta^2) / (2 r)``;
    the quadratic term is dropped when ``range_`` is ``None``.
    """
    delta = geom.offsets
    s = geom.spacing_ratio
    phase = np.pi * s * delta * theta
    if range_ is not None:
        phase = phase + np.pi * s * geom.spacing * delta**2 * (1 - theta**2) / (2 * range_)
    return phase


def codeword_at(geom: ArrayGeometry, theta: float, range_: float | None = None) -> np.ndarray:
    """Evaluate a codeword at continuous (possibly off-grid) parameters."""
    if not -1.0 <= theta <= 1.0:
        raise ConfigError(f"theta {theta} outside [-1, 1]")
    if range_ is not None and not range_ > 0:
        raise ConfigError(f"range {range_} must be positive")
    return np.exp(-1j * codeword_phase(geom, theta, range_)) / np.sqrt(geom.n_antennas)


def dft_angles(n: int) -> np.ndarray:
    "Uniform sine-space grid (2i - n + 1) / n, i = 0..n-1."
    i = np.arange(n)
    return (2 * i - n + 1) / n


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered set of unit-norm beamforming vectors.

    ``columns`` is an ``(N, M)`` complex array; ``meta[i]`` describes column ``i``.
    """

    geometry: ArrayGeometry
    columns: np.ndarray
    meta: tuple[CodewordMeta, ...]
    beta: float | None = None
    range_bounds: tuple[float, float] | None = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.columns.ndim != 2 or self.columns.shape[0] != self.geometry.n_antennas:
            raise ConfigError(
                f"columns must be (N, M) with N={self.geometry.n_antennas}, got {self.columns.shape}"
            )
        if self.columns.shape[1] != len(self.meta) or len(self.meta) == 0:
            raise ConfigError("codebook needs at least one codeword and one meta entry per column")
        self.columns.flags.writeable = False

    @property
    def size(self) -> int:
        return self.columns.shape[1]

    def __len__(self) -> int:
        return self.size

    @property
    def kind(self) -> CodewordKind:
        return self.meta[0].kind

    @property
    def is_orthonormal(self) -> bool:
        return self.kind is CodewordKind.DFT

    def thetas(self) -> np.ndarray:
        return np.array([m.theta_grid for m in self.meta])

    def ranges(self) -> np.ndarray:
        "Ring distances; far-field codewords report ``inf``."
        return np.array([np.inf if m.range_grid is None else m.range_grid for m in self.meta])

    def subset(self, indices: Sequence[int]) -> np.ndarray:
        return self.columns[:, np.asarray(indices, dtype=int)]

    def ring_census(self) -> Counter:
        """Histogram {codewords at an angle: number of angles}."""
        per_angle = Counter(m.angle_index for m in self.meta)
        return Counter(per_angle.values())

    def to_dict(self) -> dict:
        g = self.geometry
        return {
            "kind": self.kind.value,
            "name": self.name,
            "geometry": {
                "n_antennas": g.n_antennas,
                "spacing": g.spacing,
                "wavelength": g.wavelength,
            },
            "beta": self.beta,
            "range_bounds": list(self.range_bounds) if self.range_bounds else None,
            "params": self.params,
            "size": self.size,
            "codewords": [
                {"index": m.index, "theta": m.theta_grid, "range": m.range_grid}
                for m in self.meta
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, data: dict) -> Codebook:
        geom = ArrayGeometry(**data["geometry"])
        kind = CodewordKind(data["kind"])
        meta, cols = [], []
        angle_idx = -1
        last_theta = None
        for i, cw in enumerate(data["codewords"]):
            if cw["index"] != i:
                raise ConfigError(f"codeword index {cw['index']} out of order at {i}")
            if cw["theta"] != last_theta:
                angle_idx += 1
                last_theta = cw["theta"]
            meta.append(CodewordMeta(i, cw["theta"], cw["range"], kind, angle_idx))
            cols.append(codeword_at(geom, cw["theta"], cw["range"]))
        bounds = data.get("range_bounds")
        return cls(
            geom,
            np.stack(cols, axis=1),
            tuple(meta),
            beta=data.get("beta"),
            range_bounds=tuple(bounds) if bounds else None,
            name=data.get("name", ""),
            params=data.get("params", {}),
        )

    @classmethod
    def load(cls, path: str | Path) -> Codebook:
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_dft_codebook(geom: ArrayGeometry) -> Codebook:
    """N orthonormal far-field beams on the uniform sine grid."""
    thetas = dft_angles(geom.n_antennas)
    cols = np.stack([codeword_at(geom, t) for t in thetas], axis=1)
    meta = tuple(
        CodewordMeta(i, float(t), None, CodewordKind.DFT, angle_index=i) for i, t in enumerate(thetas)
    )
    return Codebook(geom, cols, meta, name=f"dft{geom.n_antennas}")


def ring_distances(
    geom: ArrayGeometry,
    theta: float,
    beta: float,
    max_rings: int,
    range_bounds: tuple[float, float],
) -> list[float | None]:
    """Distance rings kept at one angle, farthest first (``None`` = far-field).

    Rings follow ``r_s = Z(theta) / s`` with
    ``Z(theta) = N^2 d^2 (1 - theta^2) / (2 beta^2 lambda)``. Rings beyond the
    upper bound collapse into one far-field codeword; rings below the lower
    bound are dropped. An angle left with no codeword gets the far-field one
    so that every angle stays covered.
    """
    lo, hi = range_bounds
    n, d, lam = geom.n_antennas, geom.spacing, geom.wavelength
    z = n**2 * d**2 * (1 - theta**2) / (2 * beta**2 * lam)
    rings: list[float | None] = []
    if z > hi:
        rings.append(None)
        s = math.floor(z / hi) + 1
    else:
        s = 1
    while len(rings) < max_rings:
        r = z / s
        if r < lo:
            break
        rings.append(r)
        s += 1
    if not rings:
        rings.append(None)
    return rings


def build_polar_codebook(
    geom: ArrayGeometry,
    beta: float,
    max_rings: int = 6,
    range_bounds: tuple[float, float] | None = None,
    n_angles: int | None = None,
    name: str = "",
) -> Codebook:
    """Polar-domain codebook: uniform angles, inverse-ring distances.

    Parameters
    ----------
    geom : ArrayGeometry
    beta : float
        Distance sampling density; larger values give fewer, closer rings.
    max_rings : int
        Cap on codewords per angle.
    range_bounds : (float, float), optional
        Kept ring distances ``[lo, hi]`` in metres. Defaults to
        ``(R_Fre, R_Ray)`` of the array.
    n_angles : int, optional
        Number of angles on the uniform sine grid; defaults to N.

    Returns
    -------
    Codebook
        Ordered angle-major, then by descending ring distance.
    """
    if not beta > 0:
        raise ConfigError(f"beta must be positive, got {beta}", "codebook.beta")
    if int(max_rings) != max_rings or max_rings < 1:
        raise ConfigError(f"max_rings must be a positive integer, got {max_rings}", "codebook.max_rings")
    if range_bounds is None:
        range_bounds = (geom.fresnel_distance, geom.rayleigh_distance)
    lo, hi = map(float, range_bounds)
    if not (0 < lo < hi):
        raise ConfigError(f"empty range bounds {range_bounds}", "codebook.range_bounds")
    n_angles = geom.n_antennas if n_angles is None else int(n_angles)
    if n_angles < 1:
        raise ConfigError("n_angles must be positive", "codebook.n_angles")

    meta: list[CodewordMeta] = []
    cols: list[np.ndarray] = []
    for a, theta in enumerate(dft_angles(n_angles)):
        theta = float(theta)
        for ring, r in enumerate(ring_distances(geom, theta, beta, max_rings, (lo, hi))):
            meta.append(CodewordMeta(len(meta), theta, r, CodewordKind.POLAR, a, ring))
            cols.append(codeword_at(geom, theta, r))

    cb = Codebook(
        geom,
        np.stack(cols, axis=1),
        tuple(meta),
        beta=float(beta),
        range_bounds=(lo, hi),
        name=name or f"polar{len(meta)}",
        params={"n_angles": n_angles, "max_rings": int(max_rings)},
    )
    n_far = sum(m.range_grid is None for m in meta)
    logger.info(
        "polar codebook beta=%g angles=%d max_rings=%d: %d codewords, ring census %s, %d far-field",
        beta, n_angles, max_rings, cb.size, dict(sorted(cb.ring_census().items())), n_far,
    )
    return cb
