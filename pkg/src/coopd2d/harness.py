"""Experiment orchestration: the four allocation schemes, Monte Carlo sweeps
over the number of D2D links, and the single-pair convergence/timing study.

All randomness is derived from ``(master_seed, purpose, run, m, n)`` keys,
so results do not depend on how agents are scheduled across workers.
"""

from __future__ import annotations

import csv
import enum
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as _rng
from .channel import ChannelGains, NoiseModel, compute_gains
from .coopset import CoopSetConfig, cooperative_sets, masked_weight_matrix, nonzero_count
from .coopshare import (
    ActionGrid,
    QosConfig,
    brute_force_pair_opt,
    build_grid,
    evaluate_grid,
    feasibility_interval,
    interval_hits_grid,
)
from .dqn import TrainConfig, greedy_decision, train_agent
from .matching import km_match, system_wsee
from .topology import CellScenario, fixed_line_scenario, sample_scenario

__all__ = [
    "SchemeKind",
    "RunResult",
    "ExperimentSetup",
    "agent_seed",
    "scenario_seed",
    "run_scheme",
    "run_all_schemes",
    "monte_carlo",
    "single_pair_study",
    "convergence_episode",
    "runs_to_csv",
    "sweep_to_csv",
    "episodes_to_csv",
    "timing_to_csv",
]


class SchemeKind(enum.Enum):
    OPTIMAL = "Optimal"
    RANDOM = "Random"
    PROPOSED = "Proposed"
    PROPOSED_COOPSETS = "ProposedCoopSets"


ALL_SCHEMES = tuple(SchemeKind)

# the fixed single-pair geometry has no feasible time split above ~139 kHz
SINGLE_PAIR_BANDWIDTH_HZ = 15e3


@dataclass(frozen=True)
class RunResult:
    scheme: SchemeKind
    m: int
    n: int
    wsee: float
    nonzero_u: int
    wallclock_ms: float
    seed: int
    qos_violations: int = 0
    run: int = 0
    pairs: tuple = ()


@dataclass
class ExperimentSetup:
    """Everything a scheme needs besides the scenario itself."""

    q: QosConfig = field(default_factory=QosConfig)
    grid: ActionGrid | None = None
    train: TrainConfig = field(default_factory=lambda: TrainConfig(episodes=200, steps_per_episode=50))
    coop: CoopSetConfig = field(default_factory=CoopSetConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    m_links: int = 6
    radius: float = 500.0
    pl_exponent: float = 3.8
    d2d_max_pair_distance: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.grid is None:
            self.grid = build_grid(self.q.p_min, self.q.p_max, 9.0, 0.05)


def _derive(master_seed, *keys) -> int:
    return int(_rng.child_seed(master_seed, *keys).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def agent_seed(master_seed: int, run: int, m: int, n: int) -> int:
    return _derive(master_seed, _rng.AGENT_INIT, run, m, n)


def scenario_seed(master_seed: int, run: int) -> int:
    # shared across the N sweep: run k at N + 1 extends run k at N
    return _derive(master_seed, _rng.SCENARIO, run)


# ---------------------------------------------------------------------------
# schemes


def _optimal_matrix(gains: ChannelGains, q, grid):
    u = np.zeros((gains.m_links, gains.n_links))
    for m in range(gains.m_links):
        for n in range(gains.n_links):
            best = brute_force_pair_opt(gains.pair_gammas(m, n), q, grid)
            if best is not None:
                u[m, n] = best[1]
    return u


def _random_scheme(gains: ChannelGains, q, grid, gen: np.random.Generator):
    m_links, n_links = gains.m_links, gains.n_links
    k = min(m_links, n_links)
    rows = gen.permutation(m_links)[:k]
    cols = gen.permutation(n_links)[:k]
    total = 0.0
    violations = 0
    pairs = []
    for m, n in sorted(zip(rows.tolist(), cols.tolist())):
        a = int(gen.integers(grid.joint_size))
        ev = evaluate_grid(gains.pair_gammas(m, n), grid, q, indices=np.array([a]))
        if ev["feasible"][0]:
            total += float(ev["u"][0])
            pairs.append((m, n))
        else:
            violations += 1
    return total, violations, tuple(pairs)


def _train_one(job):
    gammas, q, grid, cfg, noise = job
    t0 = time.perf_counter()
    res = train_agent(gammas, q, grid, cfg, noise=noise)
    u = res.greedy[1] if res.greedy is not None else 0.0
    return u, (time.perf_counter() - t0) * 1e3


def _trainable(gammas, q, grid):
    return interval_hits_grid(feasibility_interval(*gammas, q), grid)


def _train_agents(gains: ChannelGains, setup: ExperimentSetup, master_seed: int, run: int, pairs):
    """Train one agent per pair in ``pairs``; returns {pair: (u, wallclock_ms)}."""
    jobs = []
    for m, n in pairs:
        cfg = replace(setup.train, seed=agent_seed(master_seed, run, m, n))
        jobs.append((gains.pair_gammas(m, n), setup.q, setup.grid, cfg, setup.noise))
    if setup.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=setup.workers) as pool:
            out = list(pool.map(_train_one, jobs))
    else:
        out = [_train_one(j) for j in jobs]
    return dict(zip(pairs, out))


def _result(scheme, gains, u, elapsed_ms, seed, run, violations=0):
    match = km_match(u)
    wsee = system_wsee(u, match)
    return RunResult(scheme, gains.m_links, gains.n_links, wsee, nonzero_count(u), elapsed_ms, seed,
                     violations, run, match.pairs)


def run_all_schemes(scenario: CellScenario, setup: ExperimentSetup, master_seed: int = 0, run: int = 0,
                    schemes=ALL_SCHEMES, gains: ChannelGains | None = None) -> dict:
    """Run the requested schemes on one scenario; returns {SchemeKind: RunResult}.

    Proposed and ProposedCoopSets share agents: an agent's seed depends only
    on ``(master_seed, run, m, n)``, so the agent for an admitted pair is the
    same network in both schemes and is trained once.
    """
    gains = gains or compute_gains(scenario, setup.noise)
    schemes = tuple(SchemeKind(s) for s in schemes)
    q, grid = setup.q, setup.grid
    out = {}

    if SchemeKind.OPTIMAL in schemes:
        t0 = time.perf_counter()
        u = _optimal_matrix(gains, q, grid)
        out[SchemeKind.OPTIMAL] = _result(SchemeKind.OPTIMAL, gains, u, (time.perf_counter() - t0) * 1e3,
                                          master_seed, run)

    if SchemeKind.RANDOM in schemes:
        t0 = time.perf_counter()
        gen = _rng.make_rng(master_seed, _rng.RANDOM_SCHEME, run, gains.n_links)
        total, viol, pairs = _random_scheme(gains, q, grid, gen)
        out[SchemeKind.RANDOM] = RunResult(SchemeKind.RANDOM, gains.m_links, gains.n_links, total, len(pairs),
                                           (time.perf_counter() - t0) * 1e3, master_seed, viol, run, pairs)

    want_p = SchemeKind.PROPOSED in schemes
    want_c = SchemeKind.PROPOSED_COOPSETS in schemes
    if want_p or want_c:
        t0 = time.perf_counter()
        sets = cooperative_sets(scenario, gains, q, setup.coop)
        set_ms = (time.perf_counter() - t0) * 1e3
        admitted = sets.mask()
        every = [(m, n) for m in range(gains.m_links) for n in range(gains.n_links)
                 if _trainable(gains.pair_gammas(m, n), q, grid)]
        todo = every if want_p else [p for p in every if admitted[p]]
        trained = _train_agents(gains, setup, master_seed, run, todo)
        u = np.zeros((gains.m_links, gains.n_links))
        for (m, n), (val, _) in trained.items():
            u[m, n] = val
        if want_p:
            t0 = time.perf_counter()
            res = _result(SchemeKind.PROPOSED, gains, u, 0.0, master_seed, run)
            ms = sum(t for _, t in trained.values()) + (time.perf_counter() - t0) * 1e3
            out[SchemeKind.PROPOSED] = replace(res, wallclock_ms=ms)
        if want_c:
            t0 = time.perf_counter()
            res = _result(SchemeKind.PROPOSED_COOPSETS, gains, masked_weight_matrix(u, sets), 0.0, master_seed, run)
            ms = set_ms + sum(t for p, (_, t) in trained.items() if admitted[p]) + (time.perf_counter() - t0) * 1e3
            out[SchemeKind.PROPOSED_COOPSETS] = replace(res, wallclock_ms=ms)

    return {s: out[s] for s in schemes}


def run_scheme(scenario: CellScenario, gains: ChannelGains, scheme, q: QosConfig, grid: ActionGrid,
               train_cfg: TrainConfig, coop_cfg: CoopSetConfig, seed: int, run: int = 0,
               noise: NoiseModel | None = None) -> RunResult:
    """Single-scheme entry point (see :func:`run_all_schemes`)."""
    setup = ExperimentSetup(q=q, grid=grid, train=train_cfg, coop=coop_cfg, noise=noise or gains.noise)
    return run_all_schemes(scenario, setup, seed, run, (SchemeKind(scheme),), gains)[SchemeKind(scheme)]


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    scheme: SchemeKind
    m: int
    n: int
    mean_wsee: float
    std_wsee: float
    mean_nonzero_u: float
    mean_wallclock_ms: float
    runs: int


def monte_carlo(n_sweep, runs_per_point: int, setup: ExperimentSetup | None = None, master_seed: int = 0,
                schemes=ALL_SCHEMES, progress=None):
    """Average every scheme over ``runs_per_point`` random scenarios per N.

    Returns ``(sweep_rows, run_results)``; both are ordered by N, then
    scheme, then run.
    """
    if runs_per_point < 1:
        raise ValueError("runs_per_point must be at least 1")
    setup = setup or ExperimentSetup()
    schemes = tuple(SchemeKind(s) for s in schemes)
    rows, runs = [], []
    for n_links in n_sweep:
        per = {s: [] for s in schemes}
        for run in range(runs_per_point):
            sc = sample_scenario(setup.m_links, n_links, setup.radius, setup.pl_exponent,
                                 scenario_seed(master_seed, run), setup.d2d_max_pair_distance)
            res = run_all_schemes(sc, setup, master_seed, run, schemes)
            for s in schemes:
                per[s].append(res[s])
            if progress is not None:
                progress(n_links, run, res)
        for s in schemes:
            rs = per[s]
            w = np.array([r.wsee for r in rs])
            rows.append(SweepRow(s, setup.m_links, n_links, float(w.mean()), float(w.std()),
                                 float(np.mean([r.nonzero_u for r in rs])),
                                 float(np.mean([r.wallclock_ms for r in rs])), len(rs)))
            runs.extend(rs)
    return rows, runs


def convergence_episode(greedy_u, fraction: float = 0.95):
    """First episode whose greedy utility reaches ``fraction`` of the final one."""
    u = np.asarray(greedy_u, dtype=float)
    if len(u) == 0:
        return None
    hits = np.flatnonzero(u >= fraction * u[-1])
    return int(hits[0])


def _timed(fn, repeats):
    best = float("inf")
    val = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        val = fn()
        best = min(best, time.perf_counter() - t0)
    return val, best * 1e3


def single_pair_study(distances, q: QosConfig | None = None, train_grid: ActionGrid | None = None,
                      oracle_grid: ActionGrid | None = None, train_cfg: TrainConfig | None = None,
                      noise: NoiseModel | None = None, d_cu_bs: float = 1000.0, d_dt_bs: float = 500.0,
                      d_dt_dr: float = 500.0, pl_exponent: float = 3.8, warm_start: bool = True,
                      timing_repeats: int = 5, master_seed: int = 0):
    """Train one agent per CU-DT distance and time the schemes on that pair.

    Returns ``(episodes, timing)``: ``episodes`` holds one dict per
    (distance, episode) with the greedy WSEE of the pair; ``timing`` one dict
    per (distance, scheme). Optimal and the deployed Proposed decision are
    both timed on ``oracle_grid`` (the fine grid); training runs on
    ``train_grid``. With ``warm_start`` each distance starts from the
    previous distance's network.
    """
    q = q or QosConfig()
    noise = noise or NoiseModel(bandwidth_hz=SINGLE_PAIR_BANDWIDTH_HZ)
    train_grid = train_grid or build_grid(q.p_min, q.p_max, 9.0, 0.05)
    oracle_grid = oracle_grid or build_grid(q.p_min, q.p_max, 3.0, 0.05)
    train_cfg = train_cfg or TrainConfig()
    episodes, timing = [], []
    prev = None
    for k, dist in enumerate(distances):
        sc = fixed_line_scenario(d_cu_bs, d_dt_bs, d_dt_dr, dist, pl_exponent)
        gammas = compute_gains(sc, noise).pair_gammas(0, 0)
        cfg = replace(train_cfg, seed=agent_seed(master_seed, k, 0, 0))

        oracle, opt_ms = _timed(lambda: brute_force_pair_opt(gammas, q, oracle_grid), timing_repeats)
        gen = _rng.make_rng(master_seed, _rng.RANDOM_SCHEME, k)

        def _random():
            ev = evaluate_grid(gammas, oracle_grid, q, indices=np.array([int(gen.integers(oracle_grid.joint_size))]))
            return float(ev["u"][0]) if ev["feasible"][0] else 0.0

        rand_u, rand_ms = _timed(_random, 1)

        if _trainable(gammas, q, train_grid):
            t0 = time.perf_counter()
            res = train_agent(gammas, q, train_grid, cfg, noise=noise, init_net=prev if warm_start else None)
            train_ms = (time.perf_counter() - t0) * 1e3
            net = res.net
            prev = net
            greedy_u = [r.greedy_u for r in res.log]
            for r in res.log:
                episodes.append({"distance_m": dist, "episode": r.episode, "wsee": r.greedy_u, "epsilon": r.epsilon})
            deployed, dep_ms = _timed(
                lambda: greedy_decision(net, gammas, oracle_grid, q, s=res.final_state, noise=noise), timing_repeats
            )
            prop_u = deployed[1] if deployed is not None else 0.0
            conv = convergence_episode(greedy_u)
        else:
            train_ms, dep_ms, prop_u, conv = 0.0, 0.0, 0.0, None
            for ep in range(cfg.episodes):
                episodes.append({"distance_m": dist, "episode": ep, "wsee": 0.0, "epsilon": cfg.epsilon(ep)})

        opt_u = oracle[1] if oracle is not None else 0.0
        timing += [
            {"distance_m": dist, "scheme": "Optimal", "wallclock_ms": opt_ms, "wsee": opt_u, "convergence_episode": None},
            {"distance_m": dist, "scheme": "Random", "wallclock_ms": rand_ms, "wsee": rand_u, "convergence_episode": None},
            {"distance_m": dist, "scheme": "Proposed", "wallclock_ms": dep_ms, "wsee": prop_u, "convergence_episode": conv},
            {"distance_m": dist, "scheme": "ProposedTraining", "wallclock_ms": train_ms, "wsee": prop_u,
             "convergence_episode": conv},
        ]
    return episodes, timing


# ---------------------------------------------------------------------------
# CSV output (floats as shortest round-trip decimals)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def runs_to_csv(runs, timing: bool = False) -> str:
    """``runs.csv``; wallclock is left blank unless ``timing`` (keeps output reproducible)."""
    header = ["scheme", "M", "N", "run", "seed", "wsee", "nonzero_u", "qos_violations", "wallclock_ms"]
    return _write(header, (
        [r.scheme.value, r.m, r.n, r.run, r.seed, r.wsee, r.nonzero_u, r.qos_violations,
         r.wallclock_ms if timing else None]
        for r in runs
    ))


def sweep_to_csv(rows, timing: bool = False) -> str:
    header = ["scheme", "M", "N", "mean_wsee", "std_wsee", "mean_nonzero_u", "mean_wallclock_ms", "runs"]
    return _write(header, (
        [r.scheme.value, r.m, r.n, r.mean_wsee, r.std_wsee, r.mean_nonzero_u,
         r.mean_wallclock_ms if timing else None, r.runs]
        for r in rows
    ))


def episodes_to_csv(episodes) -> str:
    header = ["distance", "episode", "wsee", "epsilon"]
    return _write(header, ([e["distance_m"], e["episode"], e["wsee"], e["epsilon"]] for e in episodes))


def timing_to_csv(timing) -> str:
    header = ["distance", "scheme", "wallclock_ms", "wsee", "convergence_episode"]
    return _write(header, (
        [t["distance_m"], t["scheme"], t["wallclock_ms"], t["wsee"], t["convergence_episode"]] for t in timing
    ))


def default_workers() -> int:
    env = os.environ.get("COOPD2D_WORKERS")
    return max(1, int(env)) if env else 1
