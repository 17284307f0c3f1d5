"""Command-line entry point (``coopd2d`` / ``python -m coopd2d``).

Subcommands write plot-ready CSV files into ``--out`` (default from the
config's ``run.out_dir``). Exit status is 0 only when every requested file
was written; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import ConfigError, load_config, parse_range, tomllib
from .coopshare import nonconvexity_probe
from .topology import sample_scenario

__all__ = ["main", "build_parser"]

PROBE_BETAS = (0.1, 1.0, 10.0, 1e3)


def _override_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--preset", help="named parameter preset (paper, desk, smoke)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config field (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    p.add_argument("--out", type=Path, help="output directory (overrides run.out_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopd2d", description="Cooperative D2D resource allocation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over N; writes sweep.csv and runs.csv")
    _common(p)
    p.add_argument("--runs", type=int, help="runs per N (overrides run.runs_per_point)")
    p.add_argument("--n-sweep", help="N values, lo:hi[:step] or comma list")
    p.add_argument("--workers", type=int, help="agent-training processes (or COOPD2D_WORKERS)")
    p.add_argument("--timing", action="store_true", help="fill the wallclock columns (output no longer reproducible)")

    p = sub.add_parser("single-pair", help="single-pair convergence and timing; writes episodes.csv and timing.csv")
    _common(p)
    p.add_argument("--distances", help="CU-DT distances in metres, lo:hi:step or comma list")
    p.add_argument("--no-warm-start", action="store_true", help="train every distance from scratch")

    p = sub.add_parser("oracle", help="exhaustive per-pair optimum plus KM on one scenario; writes runs.csv")
    _common(p)
    p.add_argument("--n-links", type=int, help="number of D2D links (default: first of run.n_sweep)")
    p.add_argument("--run", type=int, default=0, help="scenario index under the master seed")

    p = sub.add_parser("probe-nonconvexity", help="Hessian eigenvalues of the auxiliary SE term; writes probe.csv")
    _common(p)
    p.add_argument("--points", type=int, default=50, help="grid points per axis")

    p = sub.add_parser("validate-config", help="parse and validate the configuration only")
    _common(p)
    return parser


def _load(args):
    overrides = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected SECTION.KEY=VALUE")
        overrides[key.strip()] = _override_value(raw.strip())
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        overrides["run.runs_per_point"] = args.runs
    if getattr(args, "n_sweep", None):
        overrides["run.n_sweep"] = parse_range(args.n_sweep, int)
    if getattr(args, "workers", None) is not None:
        overrides["run.workers"] = args.workers
    elif os.environ.get("COOPD2D_WORKERS"):
        overrides["run.workers"] = int(os.environ["COOPD2D_WORKERS"])
    if getattr(args, "distances", None):
        overrides["single_pair.distances_m"] = parse_range(args.distances, float)
    if getattr(args, "no_warm_start", False):
        overrides["single_pair.warm_start"] = False
    if args.out is not None:
        overrides["run.out_dir"] = str(args.out)
    return load_config(args.config, args.preset, overrides)


def _emit(out_dir: Path, name: str, text: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}", file=sys.stderr)


def _cmd_sweep(cfg, args):
    setup = cfg.experiment_setup()
    rows, runs = harness.monte_carlo(cfg.run.n_sweep, cfg.run.runs_per_point, setup, cfg.run.seed,
                                     cfg.run.schemes)
    timing = args.timing or cfg.run.record_timing
    out = Path(cfg.run.out_dir)
    _emit(out, "sweep.csv", harness.sweep_to_csv(rows, timing))
    _emit(out, "runs.csv", harness.runs_to_csv(runs, timing))


def _cmd_single_pair(cfg, args):
    sp = cfg.single_pair
    episodes, timing = harness.single_pair_study(
        sp.distances_m, cfg.qos_config(), cfg.training_grid(), cfg.fine_grid(), cfg.train_config(),
        cfg.single_pair_noise_model(), sp.d_cu_bs_m, sp.d_dt_bs_m, sp.d_dt_dr_m, cfg.scenario.pl_exponent,
        sp.warm_start, sp.timing_repeats, cfg.run.seed,
    )
    out = Path(cfg.run.out_dir)
    _emit(out, "episodes.csv", harness.episodes_to_csv(episodes))
    _emit(out, "timing.csv", harness.timing_to_csv(timing))


def _cmd_oracle(cfg, args):
    setup = cfg.experiment_setup()
    n_links = args.n_links if args.n_links is not None else cfg.run.n_sweep[0]
    if n_links < 1:
        raise ConfigError("--n-links", "must be positive")
    sc = sample_scenario(setup.m_links, n_links, setup.radius, setup.pl_exponent,
                         harness.scenario_seed(cfg.run.seed, args.run), setup.d2d_max_pair_distance)
    res = harness.run_all_schemes(sc, setup, cfg.run.seed, args.run, (harness.SchemeKind.OPTIMAL,))
    _emit(Path(cfg.run.out_dir), "runs.csv", harness.runs_to_csv(res.values()))


def probe_table(points: int = 50, betas=PROBE_BETAS):
    """Rows ``(beta, x, y, lambda1, lambda2)`` over the default probe grid."""
    xs = np.logspace(-3, 2, points + 1)[1:]
    ys = np.linspace(0.01, 0.49, points + 2)[1:-1]
    rows = []
    for beta in betas:
        lam = nonconvexity_probe(beta, xs, ys)
        k = 0
        for x in xs:
            for y in ys:
                rows.append((beta, float(x), float(y), *lam[k]))
                k += 1
    return rows


def _cmd_probe(cfg, args):
    if args.points < 1:
        raise ConfigError("--points", "must be positive")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "x", "y", "lambda1", "lambda2"])
    for row in probe_table(args.points):
        w.writerow([repr(float(v)) for v in row])
    _emit(Path(cfg.run.out_dir), "probe.csv", buf.getvalue())


def _cmd_validate(cfg, args):
    print("configuration ok", file=sys.stderr)


_COMMANDS = {
    "sweep": _cmd_sweep,
    "single-pair": _cmd_single_pair,
    "oracle": _cmd_oracle,
    "probe-nonconvexity": _cmd_probe,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        _COMMANDS[args.command](cfg, args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"coopd2d {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
