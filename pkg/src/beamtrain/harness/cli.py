"""Command-line entry point: ``beamtrain <command> [--config FILE] [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 too many solver failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from ..errors import ConfigError
from .config import load_config
from .engine import Setup
from .experiments import (
    coefficient_profile,
    energy_split_counts,
    run_overhead_sweep,
    run_path_sweep,
    run_refine_compare,
    run_snr_sweep,
    with_seed,
    write_result,
    csv_text,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

log = logging.getLogger("beamtrain")

COMMANDS = ("codebook", "sweep-demo", "overhead", "snr", "paths", "refine")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beamtrain", description="Near-field multi-beam training simulator.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, default=None, help="TOML or JSON config (default: full-scale preset)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--seed", type=int, default=None, help="base seed override")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _codebook(cfg, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for label, coarse in (("fine", False), ("coarse", True)):
        cb = Setup(cfg, coarse=coarse).nf
        cb.save(out / f"codebook_{label}.json")
        for rings, count in sorted(cb.ring_census().items()):
            rows.append((label, cb.size, rings, count))
        print(f"{label}: {cb.size} codewords, census {dict(sorted(cb.ring_census().items()))}")
    (out / "codebook_census.csv").write_text(csv_text(("codebook", "size", "rings", "angles"), rows))
    return EXIT_OK


def _sweep_demo(cfg, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    profile = coefficient_profile(cfg, cfg.scene.base_seed)
    (out / "sweep_profile.csv").write_text(csv_text(("codebook", "index", "theta", "range", "alpha_sq"), profile))
    counts = energy_split_counts(cfg)
    (out / "energy_split.csv").write_text(csv_text(("seed", "dft_beams", "nf_beams"), counts))
    wins = sum(d > n for _, d, n in counts)
    manifest = {
        "experiment": "sweep-demo",
        "config": cfg.to_dict(),
        "config_hash": cfg.content_hash(),
        "wall_time_s": time.perf_counter() - t0,
        "polar_sparser_fraction": wins / len(counts),
    }
    (out / "sweep_demo_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"polar codebook needs fewer beams in {wins}/{len(counts)} scenes")
    return EXIT_OK


def _experiment(command: str, cfg, out: Path, parallel: int) -> int:
    if command == "refine":
        results = list(run_refine_compare(cfg, parallel).values())
        axis = "K"
    else:
        runner, axis = {
            "overhead": (run_overhead_sweep, "K"),
            "snr": (run_snr_sweep, "snr_db"),
            "paths": (run_path_sweep, "L"),
        }[command]
        results = [runner(cfg, parallel)]
    worst = 0.0
    for res in results:
        paths = write_result(res, out, dat_axis=axis)
        bad, total = res.failures()
        worst = max(worst, res.failure_fraction())
        print(f"{res.name}: {len(res.outcomes)} trials, {bad}/{total} non-converged, "
              f"{res.wall_time:.1f} s -> {paths[0]}")
    if worst > cfg.max_failure_fraction:
        print(f"non-convergence fraction {worst:.3f} exceeds {cfg.max_failure_fraction}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.parallel < 1:
            raise ConfigError("must be at least 1", "--parallel")
        cfg = with_seed(load_config(args.config), args.seed).validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "codebook":
        return _codebook(cfg, args.out)
    if args.command == "sweep-demo":
        return _sweep_demo(cfg, args.out)
    return _experiment(args.command, cfg, args.out, args.parallel)


if __name__ == "__main__":
    sys.exit(main())
