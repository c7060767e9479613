"""Study-axis experiments: overhead, SNR, path count, refinement, energy split.

Each experiment expands into independent work units keyed by
``(seed, axis point)``. Units run serially or on a process pool; results are
sorted before aggregation, so output is identical either way.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..channel import ChannelScene
from ..geometry import PolarPoint
from ..metrics import (
    NOT_REACHED,
    Scheme,
    TrialRecord,
    captured_energy_count,
    format_float,
    mean_and_se,
    min_overhead_for_fraction,
    records_to_csv,
)
from .config import ExperimentConfig
from .engine import Setup, TrialOutcome, run_trial

log = logging.getLogger(__name__)

EXPERIMENTS = ("overhead", "snr", "paths", "refine")
REFINE_SCHEMES = ("NF_LASSO", "NF_REFINE", "DFT", "DFT_REFINE")
_ITERATIVE = {Scheme.NF_LASSO.value, Scheme.NF_REFINE.value, Scheme.DFT_REFINE.value}
_SCHEME_ORDER = {s.value: i for i, s in enumerate(Scheme)}


@dataclass(frozen=True)
class WorkUnit:
    seed: int
    n_paths: int
    snr_db: float
    k_list: tuple[int, ...]
    schemes: tuple[str, ...]
    coarse: bool = False


@dataclass
class ExperimentResult:
    """Sorted outcomes of one experiment plus its derived summary rows."""

    name: str
    config: ExperimentConfig
    outcomes: list[TrialOutcome]
    summary_header: tuple[str, ...] = ()
    summary: list[tuple] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def records(self) -> list[TrialRecord]:
        return [o.record for o in self.outcomes]

    def failures(self) -> tuple[int, int]:
        """(non-converged, total) over outcomes of iterative solvers."""
        it = [o for o in self.outcomes if o.record.scheme in _ITERATIVE]
        return sum(not o.converged for o in it), len(it)

    def failure_fraction(self) -> float:
        bad, total = self.failures()
        return bad / total if total else 0.0


# one Setup per (config, codebook choice) per process
_SETUPS: dict[tuple[str, bool], Setup] = {}


def _setup(cfg: ExperimentConfig, coarse: bool) -> Setup:
    key = (cfg.content_hash(), coarse)
    if key not in _SETUPS:
        _SETUPS[key] = Setup(cfg, coarse=coarse)
    return _SETUPS[key]


def _run_unit(args: tuple[ExperimentConfig, WorkUnit]) -> list[TrialOutcome]:
    cfg, u = args
    return run_trial(_setup(cfg, u.coarse), u.seed, u.n_paths, u.snr_db, u.k_list, u.schemes)


def _sort_key(o: TrialOutcome):
    r = o.record
    return (_SCHEME_ORDER[r.scheme], r.L, r.snr_db, r.K, r.seed)


def execute(cfg: ExperimentConfig, units: Sequence[WorkUnit], parallel: int = 1) -> list[TrialOutcome]:
    """Run work units and return all outcomes in canonical order."""
    jobs = [(cfg, u) for u in units]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            chunks = list(pool.map(_run_unit, jobs, chunksize=max(1, len(jobs) // (4 * parallel))))
    else:
        chunks = [_run_unit(j) for j in jobs]
    out = [o for chunk in chunks for o in chunk]
    out.sort(key=_sort_key)
    return out


def seeds(cfg: ExperimentConfig) -> list[int]:
    sc = cfg.scene
    return [sc.base_seed + i for i in range(sc.n_seeds)]


def group(outcomes: Sequence[TrialOutcome], key: Callable[[TrialRecord], tuple]) -> dict[tuple, list[TrialRecord]]:
    table: dict[tuple, list[TrialRecord]] = {}
    for o in outcomes:
        table.setdefault(key(o.record), []).append(o.record)
    return table


def _mean_rows(outcomes) -> tuple[tuple[str, ...], list[tuple]]:
    """Per (scheme, K, snr, L) ensemble means with standard errors."""
    header = ("scheme", "K", "snr_db", "L", "n", "l2_mean", "l2_se", "rate_mean", "rate_se", "rate_upper_mean")
    rows = []
    cells = group(outcomes, lambda r: (r.scheme, r.K, r.snr_db, r.L))
    for (scheme, K, snr, L), recs in sorted(cells.items(), key=lambda kv: (_SCHEME_ORDER[kv[0][0]],) + kv[0][1:]):
        l2m, l2s = mean_and_se([r.l2_error for r in recs])
        rm, rs = mean_and_se([r.rate for r in recs])
        um = float(np.mean([r.rate_upper for r in recs]))
        rows.append((scheme, K, snr, L, len(recs), l2m, l2s, rm, rs, um))
    return header, rows


def run_overhead_sweep(cfg: ExperimentConfig, parallel: int = 1) -> ExperimentResult:
    """Error and rate versus feedback overhead K at one SNR and path count."""
    t0 = time.perf_counter()
    units = [
        WorkUnit(s, cfg.scene.L, float(cfg.noise.snr_db), tuple(cfg.axis.k_list), tuple(cfg.schemes))
        for s in seeds(cfg)
    ]
    outcomes = execute(cfg, units, parallel)
    header, rows = _mean_rows(outcomes)
    return ExperimentResult("overhead", cfg, outcomes, header, rows, time.perf_counter() - t0)


def run_snr_sweep(cfg: ExperimentConfig, parallel: int = 1) -> ExperimentResult:
    """Error and rate versus SNR at the fixed overheads in ``axis.snr_k_list``."""
    t0 = time.perf_counter()
    units = [
        WorkUnit(s, cfg.scene.L, float(snr), tuple(cfg.axis.snr_k_list), tuple(cfg.schemes))
        for s in seeds(cfg)
        for snr in cfg.axis.snr_list
    ]
    outcomes = execute(cfg, units, parallel)
    header, rows = _mean_rows(outcomes)
    return ExperimentResult("snr", cfg, outcomes, header, rows, time.perf_counter() - t0)


def path_overheads(outcomes: Sequence[TrialOutcome], fraction: float, k_max: int) -> dict[tuple[str, int], int]:
    """Ensemble minimum overhead per (scheme, L)."""
    by_cell = group(outcomes, lambda r: (r.scheme, r.L))
    out = {}
    for (scheme, L), recs in by_cell.items():
        rates: dict[int, list[float]] = {}
        upper: dict[int, float] = {}
        for r in recs:
            rates.setdefault(r.K, []).append(r.rate)
            upper[r.seed] = r.rate_upper
        out[(scheme, L)] = min_overhead_for_fraction(rates, list(upper.values()), fraction, k_max)
    return out


def per_seed_overheads(outcomes: Sequence[TrialOutcome], fraction: float, k_max: int) -> dict[tuple[str, int, int], int]:
    """Minimum overhead per (scheme, L, seed), each scene judged on its own bound."""
    out = {}
    for (scheme, L, seed), recs in group(outcomes, lambda r: (r.scheme, r.L, r.seed)).items():
        rates = {r.K: [r.rate] for r in recs}
        out[(scheme, L, seed)] = min_overhead_for_fraction(rates, [recs[0].rate_upper], fraction, k_max)
    return out


def relative_reductions(per_seed: dict, L: int, ours: str = "NF", base: str = "DFT") -> list[float]:
    """Per-scene ``1 - K_ours / K_base``; a scene where ``ours`` never reaches
    the bar counts as -inf, one where only ``base`` fails is skipped."""
    out = []
    for (scheme, l, seed), kb in sorted(per_seed.items()):
        if scheme != base or l != L or kb == NOT_REACHED:
            continue
        ko = per_seed[(ours, L, seed)]
        out.append(-np.inf if ko == NOT_REACHED else 1 - ko / kb)
    return out


def run_path_sweep(cfg: ExperimentConfig, parallel: int = 1) -> ExperimentResult:
    """Minimum overhead for a near-perfect rate versus path count L."""
    t0 = time.perf_counter()
    ax = cfg.axis
    ks = tuple(range(1, ax.k_max + 1))
    units = [
        WorkUnit(s, int(L), float(cfg.noise.snr_db), ks, tuple(cfg.schemes))
        for s in seeds(cfg)
        for L in ax.l_list
    ]
    outcomes = execute(cfg, units, parallel)
    ens = path_overheads(outcomes, ax.fraction, ax.k_max)
    per_seed = per_seed_overheads(outcomes, ax.fraction, ax.k_max)
    header = ("scheme", "L", "min_overhead", "median_reduction_vs_DFT")
    rows = []
    for scheme, L in sorted(ens, key=lambda k: (_SCHEME_ORDER[k[0]], k[1])):
        red = float("nan")
        if scheme != "DFT" and "DFT" in cfg.schemes:
            vals = relative_reductions(per_seed, L, scheme)
            red = float(np.median(vals)) if vals else float("nan")
        rows.append((scheme, L, ens[(scheme, L)], red))
    return ExperimentResult("paths", cfg, outcomes, header, rows, time.perf_counter() - t0)


def run_refine_compare(cfg: ExperimentConfig, parallel: int = 1) -> dict[str, ExperimentResult]:
    """On-grid versus refined schemes with the fine and the coarse polar codebook."""
    out = {}
    ax = cfg.axis
    for label, coarse in (("fine", False), ("coarse", True)):
        t0 = time.perf_counter()
        units = [
            WorkUnit(s, cfg.scene.L, float(ax.refine_snr_db), tuple(ax.refine_k_list), REFINE_SCHEMES, coarse)
            for s in seeds(cfg)
        ]
        outcomes = execute(cfg, units, parallel)
        header, rows = _mean_rows(outcomes)
        out[label] = ExperimentResult(f"refine_{label}", cfg, outcomes, header, rows, time.perf_counter() - t0)
    return out


def energy_split_counts(cfg: ExperimentConfig) -> list[tuple[int, int, int]]:
    """(seed, DFT count, polar count) for each scene with the user moved to
    ``axis.energy_user_range``; counts are beams needed to capture
    ``axis.energy_fraction`` of the channel energy."""
    setup = _setup(cfg, False)
    ax = cfg.axis
    rows = []
    for s in seeds(cfg):
        base = setup.scene(s, cfg.scene.L)
        scene = ChannelScene(setup.geometry, PolarPoint(base.user.theta, ax.energy_user_range), base.scatterers)
        h = setup.channel(scene)
        rows.append(
            (
                s,
                captured_energy_count(h, setup.dft.columns, ax.energy_fraction),
                captured_energy_count(h, setup.nf.columns, ax.energy_fraction),
            )
        )
    return rows


def coefficient_profile(cfg: ExperimentConfig, seed: int) -> list[tuple]:
    """Projected power ``|v^H h|^2`` of every codeword for one scene, both codebooks."""
    setup = _setup(cfg, False)
    h = setup.channel(setup.scene(seed, cfg.scene.L))
    rows = []
    for name, cb in (("DFT", setup.dft), ("NF", setup.nf)):
        power = np.abs(cb.columns.conj().T @ h) ** 2
        for m, p in zip(cb.meta, power):
            rng = "inf" if m.range_grid is None else format_float(m.range_grid)
            rows.append((name, m.index, format_float(m.theta_grid), rng, format_float(p)))
    return rows


# ---------------------------------------------------------------- output


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    def cell(v):
        if isinstance(v, float):
            return format_float(v)
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def diagnostics_csv(outcomes: Sequence[TrialOutcome]) -> str:
    header = ("scheme", "K", "snr_db", "L", "seed", "l2_error_aligned", "iterations", "converged", "flags")
    rows = [
        (o.record.scheme, o.record.K, o.record.snr_db, o.record.L, o.record.seed,
         o.l2_aligned, o.iterations, int(o.converged), o.flags)
        for o in outcomes
    ]
    return csv_text(header, rows)


def _dat(result: ExperimentResult, axis: str) -> str:
    """Whitespace-separated means, one block per scheme, for gnuplot."""
    head = result.summary_header
    idx = head.index(axis)
    cols = [idx] + [i for i in range(1, len(head)) if i != idx]
    blocks = []
    for scheme in dict.fromkeys(r[0] for r in result.summary):
        lines = [f"# {scheme}: " + " ".join(head[i] for i in cols)]
        for r in result.summary:
            if r[0] == scheme:
                lines.append(" ".join(format_float(r[i]) if isinstance(r[i], float) else str(r[i]) for i in cols))
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"


def write_result(result: ExperimentResult, out_dir: Path, dat_axis: str | None = None) -> list[Path]:
    """Write ``<name>.csv`` (fixed header), diagnostics, summary and manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    def put(name, text):
        p = out_dir / name
        p.write_text(text)
        paths.append(p)

    put(f"{result.name}.csv", records_to_csv(result.records))
    put(f"{result.name}_diagnostics.csv", diagnostics_csv(result.outcomes))
    if result.summary_header:
        put(f"{result.name}_summary.csv", csv_text(result.summary_header, result.summary))
    if dat_axis and result.summary_header:
        put(f"{result.name}.dat", _dat(result, dat_axis))
    bad, total = result.failures()
    manifest = {
        "experiment": result.name,
        "config": result.config.to_dict(),
        "config_hash": result.config.content_hash(),
        "wall_time_s": result.wall_time,
        "trials": len(result.outcomes),
        "non_converged": bad,
        "iterative_trials": total,
        "files": [p.name for p in paths],
    }
    put(f"{result.name}_manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


def with_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    if seed is None:
        return cfg
    return replace(cfg, scene=replace(cfg.scene, base_seed=int(seed)))
