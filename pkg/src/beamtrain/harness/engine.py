"""One Monte Carlo trial: scene -> channel -> sweeps -> feedback -> estimates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from ..channel import ChannelScene, NoiseModel, derive_noise, sample_scene, synthesize_channel
from ..codebook import Codebook, build_dft_codebook, build_polar_codebook
from ..metrics import Scheme, TrialRecord, achievable_rate, l2_error, l2_error_aligned
from ..solver import ReconstructionResult, reconstruct_lasso, reconstruct_ls, reconstruct_orthonormal, refine
from ..sweep import beam_sweep, select_top_k
from .config import ExperimentConfig, PolarCodebookConfig

# rng stream identifiers, combined with the trial seed
_SCENE_STREAM = 0
_SWEEP_STREAM = {"dft": 1, "nf": 2}

_CODEBOOK_FOR = {
    Scheme.DFT: "dft",
    Scheme.DFT_REFINE: "dft",
    Scheme.NF: "nf",
    Scheme.NF_LASSO: "nf",
    Scheme.NF_REFINE: "nf",
}


@dataclass(frozen=True)
class TrialOutcome:
    record: TrialRecord
    l2_aligned: float
    iterations: int
    converged: bool
    flags: str


def polar_from_config(geom, cb: PolarCodebookConfig, name: str) -> Codebook:
    lo = geom.fresnel_distance if cb.range_min is None else cb.range_min
    hi = geom.rayleigh_distance if cb.range_max is None else cb.range_max
    return build_polar_codebook(geom, cb.beta, cb.max_rings, (lo, hi), cb.n_angles, name=name)


class Setup:
    """Geometry and codebooks derived once from a config (read-only afterwards)."""

    def __init__(self, cfg: ExperimentConfig, coarse: bool = False):
        self.cfg = cfg
        self.geometry = cfg.geometry.build()
        self.coarse = coarse
        self.user_region, self.scatter_region = cfg.regions(self.geometry)

    @cached_property
    def dft(self) -> Codebook:
        return build_dft_codebook(self.geometry)

    @cached_property
    def nf(self) -> Codebook:
        if self.coarse:
            return polar_from_config(self.geometry, self.cfg.coarse_codebook, "nf_coarse")
        return polar_from_config(self.geometry, self.cfg.codebook, "nf")

    def codebook(self, which: str) -> Codebook:
        return self.dft if which == "dft" else self.nf

    def scene(self, seed: int, n_paths: int) -> ChannelScene:
        rng = np.random.default_rng([seed, _SCENE_STREAM])
        return sample_scene(rng, n_paths, self.geometry, self.user_region, self.scatter_region)

    def channel(self, scene: ChannelScene) -> np.ndarray:
        sc = self.cfg.scene
        return synthesize_channel(scene, steering=sc.steering, cosine=sc.cosine)

    def noise(self, snr_db: float) -> NoiseModel:
        n = self.cfg.noise
        return derive_noise(n.reference, snr_db, self.geometry, n.snr_reference)


def reconstruct(setup: Setup, scheme: Scheme, sweep, K: int, noise: NoiseModel) -> ReconstructionResult:
    cfg = setup.cfg
    cb = setup.codebook(_CODEBOOK_FOR[scheme])
    report = select_top_k(sweep, K)
    subset = cb.subset(report.indices)
    if scheme is Scheme.DFT:
        return reconstruct_orthonormal(subset, report)
    if scheme is Scheme.NF:
        return reconstruct_ls(subset, report, cfg.pinv_tol)
    if scheme is Scheme.NF_LASSO:
        return reconstruct_lasso(subset, report, cfg.lasso, noise.sigma)
    init = [cb.meta[i] for i in report.indices]
    mode = "dft" if scheme is Scheme.DFT_REFINE else "polar"
    return refine(setup.geometry, subset, report, init, cfg.refine, cfg.lasso, mode, noise.sigma)


def run_trial(
    setup: Setup,
    seed: int,
    n_paths: int,
    snr_db: float,
    k_list: Sequence[int],
    schemes: Iterable[str],
) -> list[TrialOutcome]:
    """All (scheme, K) outcomes for one scene at one SNR.

    Every scheme sees the same scene; schemes sharing a codebook also share
    the sweep noise, and each codebook's noise is a fixed standard-normal draw
    scaled by sigma, so SNR points of one seed are paired as well.
    """
    scene = setup.scene(seed, n_paths)
    h = setup.channel(scene)
    noise = setup.noise(snr_db)
    upper = achievable_rate(h, h, noise.sigma_sq)
    sweeps = {}
    out = []
    for name in schemes:
        scheme = Scheme(name)
        which = _CODEBOOK_FOR[scheme]
        if which not in sweeps:
            rng = np.random.default_rng([seed, _SWEEP_STREAM[which]])
            sweeps[which] = beam_sweep(h, setup.codebook(which), noise, rng)
        for K in k_list:
            res = reconstruct(setup, scheme, sweeps[which], K, noise)
            rate = achievable_rate(h, res.h_hat, noise.sigma_sq)
            rec = TrialRecord(scheme.value, int(K), float(snr_db), int(n_paths), int(seed),
                              l2_error(h, res.h_hat), rate, upper)
            out.append(TrialOutcome(rec, l2_error_aligned(h, res.h_hat), res.iterations,
                                    res.converged, ";".join(res.flags)))
    return out
