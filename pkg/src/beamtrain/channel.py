"""Multipath near-field channel synthesis and noise calibration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryDomainError
from .geometry import ArrayGeometry, PolarPoint, fresnel_steering, near_field_steering

STEERING_MODELS = ("exact", "fresnel")
COSINE_MODES = ("as_printed", "physical")
SNR_REFERENCES = ("per_antenna", "array")


@dataclass(frozen=True)
class Scatterer:
    position: PolarPoint
    reflection: complex

    def __post_init__(self):
        if not np.isfinite(self.reflection):
            raise ConfigError(f"reflection coefficient must be finite, got {self.reflection}")


@dataclass(frozen=True)
class Region:
    """Axis-aligned box in (theta, range) used for uniform sampling."""

    theta: tuple[float, float] = (-0.8, 0.8)
    range: tuple[float, float] = (6.2, 391.0)

    def validate(self, geom: ArrayGeometry, path: str = "region") -> None:
        t0, t1 = self.theta
        r0, r1 = self.range
        if not -1 <= t0 <= t1 <= 1:
            raise ConfigError(f"theta interval {self.theta} must lie in [-1, 1]", f"{path}.theta")
        if not 0 < r0 <= r1:
            raise ConfigError(f"range interval {self.range} is empty", f"{path}.range")
        if r0 < geom.aperture / 2:
            raise ConfigError(
                f"range interval starts inside the array half-aperture {geom.aperture / 2:.4g} m",
                f"{path}.range",
            )


@dataclass(frozen=True)
class ChannelScene:
    """User position plus its L - 1 scatterers."""

    geometry: ArrayGeometry
    user: PolarPoint
    scatterers: tuple[Scatterer, ...] = field(default_factory=tuple)

    @property
    def n_paths(self) -> int:
        return 1 + len(self.scatterers)

    def to_dict(self) -> dict:
        g = self.geometry
        return {
            "geometry": {"n_antennas": g.n_antennas, "spacing": g.spacing, "wavelength": g.wavelength},
            "user": {"theta": self.user.theta, "range": self.user.range},
            "scatterers": [
                {
                    "theta": s.position.theta,
                    "range": s.position.range,
                    "p_re": float(np.real(s.reflection)),
                    "p_im": float(np.imag(s.reflection)),
                }
                for s in self.scatterers
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> ChannelScene:
        scatterers = tuple(
            Scatterer(PolarPoint(s["theta"], s["range"]), complex(s["p_re"], s["p_im"]))
            for s in data["scatterers"]
        )
        return cls(ArrayGeometry(**data["geometry"]), PolarPoint(**data["user"]), scatterers)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> ChannelScene:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class NoiseModel:
    sigma_sq: float
    reference_snr_db: float = float("nan")

    def __post_init__(self):
        if not self.sigma_sq >= 0:
            raise ConfigError(f"noise variance must be non-negative, got {self.sigma_sq}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma_sq))


NOISELESS = NoiseModel(0.0)


def path_gain(wavelength: float, distance: float) -> float:
    "Free-space amplitude lambda / (4 pi r)."
    return wavelength / (4 * np.pi * distance)


def scatter_to_user(user: PolarPoint, scatterer: PolarPoint, cosine: str = "as_printed") -> float:
    """Scatterer-to-user distance r_{l,2} by the law of cosines.

    ``cosine="as_printed"`` applies cos(theta_u - theta_l) to the sine-space
    parameters directly; ``"physical"`` uses the physical angles arcsin(theta).
    """
    if cosine == "as_printed":
        c = np.cos(user.theta - scatterer.theta)
    elif cosine == "physical":
        c = np.cos(np.arcsin(user.theta) - np.arcsin(scatterer.theta))
    else:
        raise ConfigError(f"unknown cosine mode {cosine!r}; expected one of {COSINE_MODES}")
    ru, rl = user.range, scatterer.range
    sq = rl * rl + ru * ru - 2 * ru * rl * c
    return float(np.sqrt(max(sq, 0.0)))


def _steering(geom: ArrayGeometry, p: PolarPoint, model: str) -> np.ndarray:
    if model == "exact":
        return near_field_steering(geom, p)
    if model == "fresnel":
        return fresnel_steering(geom, p)
    raise ConfigError(f"unknown steering model {model!r}; expected one of {STEERING_MODELS}")


def los_component(scene: ChannelScene, steering: str = "exact") -> np.ndarray:
    g = scene.geometry
    u = scene.user
    lam = g.wavelength
    gain = path_gain(lam, u.range)
    return np.sqrt(g.n_antennas) * gain * np.exp(-2j * np.pi * u.range / lam) * _steering(g, u, steering)


def synthesize_channel(
    scene: ChannelScene, steering: str = "exact", cosine: str = "as_printed"
) -> np.ndarray:
    """Channel vector h = h_LoS + h_NLoS of length N.

    Parameters
    ----------
    scene : ChannelScene
    steering : {"exact", "fresnel"}
        Spherical-wave steering, or its second-order approximation (which
        places on-grid paths exactly inside the polar codebook's span).
    cosine : {"as_printed", "physical"}
        Law-of-cosines variant for the scatterer-to-user leg.
    """
    g = scene.geometry
    lam = g.wavelength
    h = los_component(scene, steering)
    for s in scene.scatterers:
        r1 = s.position.range
        r2 = scatter_to_user(scene.user, s.position, cosine)
        if r2 <= 0:
            raise GeometryDomainError(f"scatterer at {s.position} coincides with the user")
        gain = lam * s.reflection / (4 * np.pi * r1 * r2)
        h = h + np.sqrt(g.n_antennas) * gain * np.exp(-2j * np.pi * (r1 + r2) / lam) * _steering(
            g, s.position, steering
        )
    return h


def sample_scene(
    rng: np.random.Generator,
    n_paths: int,
    geom: ArrayGeometry,
    user_region: Region,
    scatter_region: Region | None = None,
) -> ChannelScene:
    """Draw a scene: user and L - 1 scatterers uniform over their regions,
    reflection coefficients CN(0, 1)."""
    if int(n_paths) != n_paths or n_paths < 1:
        raise ConfigError(f"path count must be a positive integer, got {n_paths}", "scene.L")
    scatter_region = user_region if scatter_region is None else scatter_region
    user_region.validate(geom, "scene.user_region")
    scatter_region.validate(geom, "scene.scatter_region")

    user = PolarPoint(float(rng.uniform(*user_region.theta)), float(rng.uniform(*user_region.range)))
    n_s = n_paths - 1
    thetas = rng.uniform(*scatter_region.theta, size=n_s)
    ranges = rng.uniform(*scatter_region.range, size=n_s)
    refl = (rng.standard_normal(n_s) + 1j * rng.standard_normal(n_s)) / np.sqrt(2)
    scatterers = tuple(
        Scatterer(PolarPoint(float(t), float(r)), complex(p)) for t, r, p in zip(thetas, ranges, refl)
    )
    return ChannelScene(geom, user, scatterers)


def derive_noise(
    reference: PolarPoint, snr_db: float, geom: ArrayGeometry, mode: str = "per_antenna"
) -> NoiseModel:
    """Noise variance giving ``snr_db`` at ``reference`` without beamforming.

    ``mode="per_antenna"`` uses the single-antenna LoS power (lambda/(4 pi r))^2;
    ``mode="array"`` includes the array gain N.
    """
    if not np.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite, got {snr_db}", "noise.snr_db")
    g_ref = path_gain(geom.wavelength, reference.range)
    if mode == "per_antenna":
        power = g_ref**2
    elif mode == "array":
        power = geom.n_antennas * g_ref**2
    else:
        raise ConfigError(f"unknown snr reference {mode!r}", "noise.snr_reference")
    return NoiseModel(power / 10 ** (snr_db / 10), float(snr_db))
