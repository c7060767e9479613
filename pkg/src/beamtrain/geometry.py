"""Uniform linear array geometry and spherical-wave propagation.

Angles are carried as the spatial parameter ``theta = sin(phi)`` throughout.
The array lies on the y-axis, centred at the origin, with element ``n`` at
normalised offset ``delta_n = (2n - N + 1) / 2`` (in units of the spacing).
Positive ``theta`` is taken toward the negative-offset end of the array, so
that the spherical steering vector, its Fresnel approximation and the DFT /
polar codewords all share the same ``theta`` label.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, GeometryDomainError

SPEED_OF_LIGHT = 3e8
"Propagation speed in m/s (rounded so that 100 GHz gives a 3 mm wavelength)."


def freq2wlen(frequency: float) -> float:
    "Carrier wavelength in metres for a frequency in Hz."
    return SPEED_OF_LIGHT / float(frequency)


def angle_to_theta(phi: float | np.ndarray) -> float | np.ndarray:
    "Angle of departure in radians to the spatial parameter sin(phi)."
    return np.sin(phi)


def theta_to_angle(theta: float | np.ndarray) -> float | np.ndarray:
    "Spatial parameter back to the angle of departure in radians."
    return np.arcsin(theta)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with isotropic elements.

    Parameters
    ----------
    n_antennas : int
        Number of elements N.
    spacing : float
        Element spacing d in metres.
    wavelength : float
        Carrier wavelength in metres.
    """

    n_antennas: int
    spacing: float
    wavelength: float

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ConfigError(f"n_antennas must be a positive integer, got {self.n_antennas}")
        if not self.spacing > 0:
            raise ConfigError(f"spacing must be positive, got {self.spacing}")
        if not self.wavelength > 0:
            raise ConfigError(f"wavelength must be positive, got {self.wavelength}")

    @classmethod
    def half_wavelength(cls, n_antennas: int, wavelength: float) -> ArrayGeometry:
        return cls(n_antennas, wavelength / 2, wavelength)

    @cached_property
    def offsets(self) -> np.ndarray:
        "Normalised element offsets delta_n; they sum to zero."
        n = np.arange(self.n_antennas)
        offsets = (2 * n - self.n_antennas + 1) / 2
        offsets.flags.writeable = False
        return offsets

    @property
    def aperture(self) -> float:
        return (self.n_antennas - 1) * self.spacing

    @property
    def spacing_ratio(self) -> float:
        "Spacing in half-wavelengths, 2d/lambda (exactly 1.0 for d = lambda/2)."
        return 2 * self.spacing / self.wavelength

    @property
    def fresnel_distance(self) -> float:
        return 0.5 * np.sqrt(self.aperture**3 / self.wavelength)

    @property
    def rayleigh_distance(self) -> float:
        return 2 * self.aperture**2 / self.wavelength


@dataclass(frozen=True)
class PolarPoint:
    """Position relative to the array centre: spatial angle and range (m)."""

    theta: float
    range: float

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise GeometryDomainError(f"theta must lie in [-1, 1], got {self.theta}")
        if not self.range > 0:
            raise GeometryDomainError(f"range must be positive, got {self.range}")


def fresnel_rayleigh(geom: ArrayGeometry) -> tuple[float, float]:
    """Near-field region bounds ``(R_Fre, R_Ray)`` of the array."""
    if geom.n_antennas < 2:
        raise ConfigError("near-field bounds need at least two antennas")
    return geom.fresnel_distance, geom.rayleigh_distance


def _check_outside_aperture(geom: ArrayGeometry, p: PolarPoint) -> None:
    if p.range < geom.aperture / 2:
        raise GeometryDomainError(
            f"range {p.range} m lies inside the array half-aperture {geom.aperture / 2} m"
        )


def _path_excess(geom: ArrayGeometry, p: PolarPoint, offsets: np.ndarray) -> np.ndarray:
    """r^(n) - r, evaluated without cancellation at large range."""
    x = offsets * geom.spacing
    num = x * x + 2 * p.range * p.theta * x
    radicand = p.range**2 + num
    if np.any(radicand <= 0):
        raise GeometryDomainError(f"point {p} coincides with an array element")
    return num / (np.sqrt(radicand) + p.range)


def element_distance(geom: ArrayGeometry, p: PolarPoint, n: int) -> float:
    """Exact distance in metres from element ``n`` to point ``p``."""
    if not 0 <= n < geom.n_antennas:
        raise IndexError(f"antenna index {n} out of range for N={geom.n_antennas}")
    _check_outside_aperture(geom, p)
    x = geom.offsets[n] * geom.spacing
    radicand = p.range**2 + x * x + 2 * p.range * p.theta * x
    if radicand <= 0:
        raise GeometryDomainError(f"point {p} coincides with element {n}")
    return float(np.sqrt(radicand))


def near_field_steering(geom: ArrayGeometry, p: PolarPoint) -> np.ndarray:
    """Unit-norm spherical-wave steering vector b(theta, r).

    Entry ``n`` is ``exp(-j 2 pi (r^(n) - r) / lambda) / sqrt(N)``.
    """
    _check_outside_aperture(geom, p)
    excess = _path_excess(geom, p, geom.offsets)
    return np.exp(-2j * np.pi * excess / geom.wavelength) / np.sqrt(geom.n_antennas)


def fresnel_steering(geom: ArrayGeometry, p: PolarPoint) -> np.ndarray:
    """Second-order (Fresnel) approximation of :func:`near_field_steering`.

    Uses ``r^(n) - r ~ delta_n d theta + delta_n^2 d^2 (1 - theta^2) / (2 r)``,
    which is exactly the polar-domain codeword at ``(theta, r)``.
    """
    from .codebook import codeword_at

    _check_outside_aperture(geom, p)
    return codeword_at(geom, p.theta, p.range)
