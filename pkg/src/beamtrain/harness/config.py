"""Experiment configuration: dataclasses, presets, TOML/JSON loading."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

from ..channel import COSINE_MODES, SNR_REFERENCES, STEERING_MODELS, Region
from ..errors import ConfigError
from ..geometry import ArrayGeometry, PolarPoint, freq2wlen
from ..metrics import Scheme
from ..solver import LassoConfig, RefineConfig


@dataclass(frozen=True)
class GeometryConfig:
    n_antennas: int = 512
    spacing_wavelengths: float = 0.5
    carrier_hz: float = 100e9

    def build(self) -> ArrayGeometry:
        lam = freq2wlen(self.carrier_hz)
        return ArrayGeometry(self.n_antennas, self.spacing_wavelengths * lam, lam)


@dataclass(frozen=True)
class PolarCodebookConfig:
    """Polar codebook parameters. ``range_min``/``range_max`` of ``None`` fall
    back to the Fresnel and Rayleigh distances of the array."""

    beta: float = 1.6
    n_angles: int | None = None
    max_rings: int = 6
    range_min: float | None = None
    range_max: float | None = None


@dataclass(frozen=True)
class SceneConfig:
    L: int = 5
    user_theta: tuple[float, float] = (-0.8, 0.8)
    user_range: tuple[float, float] | None = None
    scatter_theta: tuple[float, float] = (-0.8, 0.8)
    scatter_range: tuple[float, float] | None = None
    n_seeds: int = 100
    base_seed: int = 0
    steering: str = "exact"
    cosine: str = "as_printed"


@dataclass(frozen=True)
class NoiseConfig:
    reference_theta: float = 0.0
    reference_range: float = 5.0
    snr_db: float = 40.0
    snr_reference: str = "per_antenna"

    @property
    def reference(self) -> PolarPoint:
        return PolarPoint(self.reference_theta, self.reference_range)


@dataclass(frozen=True)
class AxisConfig:
    k_list: tuple[int, ...] = tuple(range(1, 26))
    snr_list: tuple[float, ...] = (4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30)
    l_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9)
    fraction: float = 0.99
    k_max: int = 64
    snr_k_list: tuple[int, ...] = (15, 5)
    refine_k_list: tuple[int, ...] = (1, 5, 10, 15, 20, 25)
    refine_snr_db: float = 30.0
    energy_fraction: float = 0.95
    energy_user_range: float = 5.0


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "full"
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    codebook: PolarCodebookConfig = field(default_factory=PolarCodebookConfig)
    coarse_codebook: PolarCodebookConfig = field(
        default_factory=lambda: PolarCodebookConfig(beta=2.384, n_angles=332, max_rings=2)
    )
    scene: SceneConfig = field(default_factory=SceneConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    axis: AxisConfig = field(default_factory=AxisConfig)
    schemes: tuple[str, ...] = ("DFT", "NF", "NF_LASSO")
    lasso: LassoConfig = field(default_factory=LassoConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    pinv_tol: float = 1e-10
    max_failure_fraction: float = 0.05

    def validate(self) -> ExperimentConfig:
        geom = self.geometry.build()
        if not self.schemes:
            raise ConfigError("scheme list is empty", "schemes")
        for s in self.schemes:
            if s not in Scheme.__members__:
                raise ConfigError(f"unknown scheme {s!r}", "schemes")
        for path, cb in (("codebook", self.codebook), ("coarse_codebook", self.coarse_codebook)):
            if not cb.beta > 0:
                raise ConfigError("beta must be positive", f"{path}.beta")
            if cb.max_rings < 1:
                raise ConfigError("max_rings must be positive", f"{path}.max_rings")
        sc = self.scene
        if sc.L < 1:
            raise ConfigError("path count must be at least 1", "scene.L")
        if sc.n_seeds < 1:
            raise ConfigError("seed count must be at least 1", "scene.n_seeds")
        if sc.steering not in STEERING_MODELS:
            raise ConfigError(f"expected one of {STEERING_MODELS}", "scene.steering")
        if sc.cosine not in COSINE_MODES:
            raise ConfigError(f"expected one of {COSINE_MODES}", "scene.cosine")
        user, scatter = self.regions(geom)
        user.validate(geom, "scene.user")
        scatter.validate(geom, "scene.scatter")
        if self.noise.snr_reference not in SNR_REFERENCES:
            raise ConfigError(f"expected one of {SNR_REFERENCES}", "noise.snr_reference")
        ax = self.axis
        for name in ("k_list", "snr_list", "l_list", "snr_k_list", "refine_k_list"):
            if not getattr(ax, name):
                raise ConfigError("list is empty", f"axis.{name}")
        for name in ("k_list", "snr_k_list", "refine_k_list"):
            if min(getattr(ax, name)) < 1:
                raise ConfigError("K values must be positive", f"axis.{name}")
        if ax.k_max < 1:
            raise ConfigError("k_max must be positive", "axis.k_max")
        if min(ax.l_list) < 1:
            raise ConfigError("path counts must be positive", "axis.l_list")
        if not 0 <= ax.fraction <= 1:
            raise ConfigError("fraction must lie in [0, 1]", "axis.fraction")
        if not 0 < ax.energy_fraction <= 1:
            raise ConfigError("fraction must lie in (0, 1]", "axis.energy_fraction")
        if not ax.energy_user_range > geom.aperture / 2:
            raise ConfigError("user must sit outside the aperture", "axis.energy_user_range")
        if not 0 <= self.max_failure_fraction <= 1:
            raise ConfigError("fraction must lie in [0, 1]", "max_failure_fraction")
        return self

    def regions(self, geom: ArrayGeometry) -> tuple[Region, Region]:
        default = (geom.fresnel_distance, geom.rayleigh_distance)
        sc = self.scene
        return (
            Region(tuple(sc.user_theta), tuple(sc.user_range or default)),
            Region(tuple(sc.scatter_theta), tuple(sc.scatter_range or default)),
        )

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


# Ring lower bounds are Fresnel-adjacent values that reproduce the published
# codebook sizes (1890 and 520 codewords) at N = 512, lambda = 3 mm.
FULL = ExperimentConfig(
    name="full",
    codebook=PolarCodebookConfig(beta=1.6, n_angles=512, max_rings=6, range_min=6.276),
    coarse_codebook=PolarCodebookConfig(beta=2.384, n_angles=332, max_rings=2, range_min=5.875),
    scene=SceneConfig(L=5, user_range=(6.2, 20.0), scatter_range=(6.2, 20.0)),
)

DESK = replace(
    FULL,
    name="desk",
    geometry=GeometryConfig(n_antennas=128),
    codebook=PolarCodebookConfig(beta=1.6, n_angles=128, max_rings=6),
    coarse_codebook=PolarCodebookConfig(beta=2.384, n_angles=83, max_rings=2),
    scene=replace(FULL.scene, user_range=(0.8, 5.0), scatter_range=(0.8, 5.0), n_seeds=20),
    noise=replace(FULL.noise, reference_range=1.25),
    axis=replace(FULL.axis, k_max=32, energy_user_range=1.25),
)

PRESETS = {"full": FULL, "desk": DESK}


def _merge(base, data: dict, path: str = ""):
    """Overlay ``data`` onto dataclass instance ``base`` recursively."""
    if not isinstance(data, dict):
        raise ConfigError("expected a table", path or "<root>")
    known = {f.name for f in fields(base)}
    updates = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown field {key!r}", sub)
        current = getattr(base, key)
        if is_dataclass(current):
            updates[key] = _merge(current, value, sub)
        elif isinstance(current, tuple) or (isinstance(value, list)):
            if not isinstance(value, (list, tuple)):
                raise ConfigError("expected a list", sub)
            updates[key] = tuple(value)
        else:
            updates[key] = value
    try:
        return replace(base, **updates)
    except ConfigError as exc:
        if exc.path is None:
            raise ConfigError(str(exc), path or None) from exc
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path or None) from exc


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    """Build a config from a plain mapping. ``preset`` selects the base
    (default ``"full"``); remaining keys override it."""
    data = dict(data)
    preset = data.pop("preset", "full")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}", "preset")
    cfg = _merge(PRESETS[preset], data)
    return cfg.validate()


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Read a TOML or JSON config file; ``None`` gives the full-scale preset."""
    if path is None:
        return FULL.validate()
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    else:
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib

        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
    return config_from_dict(data)
