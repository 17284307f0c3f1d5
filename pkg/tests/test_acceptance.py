"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Criteria 2-4 share one 20-scenario experiment (M = 6, N = 6, 200 episodes x
50 steps, 9 dB training grid for every scheme); it takes roughly half an
hour on a single core.
"""

import math
import time

import numpy as np
import pytest

from coopd2d import cli
from coopd2d.channel import NoiseModel, compute_gains
from coopd2d.coopshare import (
    QosConfig,
    brute_force_pair_opt,
    build_grid,
    feasibility_interval,
    interval_hits_grid,
    nonconvexity_probe,
)
from coopd2d.dqn import QNetwork, TrainConfig, greedy_decision, train_agent
from coopd2d.harness import SINGLE_PAIR_BANDWIDTH_HZ, ExperimentSetup, SchemeKind, convergence_episode, monte_carlo, single_pair_study
from coopd2d.matching import brute_force_match, km_match
from coopd2d.topology import fixed_line_scenario

Q = QosConfig()


# -- 1 ---------------------------------------------------------------------


def test_c01_matching_exactness(record):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        m, n = rng.integers(1, 7, size=2)
        u = rng.uniform(0.0, 10.0, size=(m, n))
        u[rng.random((m, n)) < 0.3] = 0.0
        if km_match(u).total_weight != brute_force_match(u).total_weight:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 5.0
    record(1, ok, f"KM vs brute force on 200 matrices: {mismatches} mismatches, {elapsed:.2f} s (< 5 s)")
    assert ok


# -- 2, 3, 4 ---------------------------------------------------------------


@pytest.fixture(scope="module")
def desk_runs():
    setup = ExperimentSetup()  # M = 6, 200 x 50, 9 dB grid, 180 kHz
    assert setup.m_links == 6
    assert (setup.train.episodes, setup.train.steps_per_episode) == (200, 50)
    assert setup.grid.n_power == 8
    assert setup.noise.bandwidth_hz == 180e3
    _, runs = monte_carlo([6], 20, setup, master_seed=0)
    by = {s: sorted((r for r in runs if r.scheme is s), key=lambda r: r.run) for s in SchemeKind}
    assert all(len(v) == 20 for v in by.values())
    return by


def _ratio(a, b):
    return a / b if b > 0 else 1.0


@pytest.mark.slow
def test_c02_proposed_vs_oracle(desk_runs, record):
    ratios = [_ratio(p.wsee, o.wsee) for p, o in zip(desk_runs[SchemeKind.PROPOSED], desk_runs[SchemeKind.OPTIMAL])]
    med = float(np.median(ratios))
    ok = med >= 0.90
    record(2, ok, f"median WSEE(Proposed)/WSEE(Optimal) = {med:.4f} (>= 0.90), min {min(ratios):.4f}")
    assert ok


@pytest.mark.slow
def test_c03_coopsets_sparsity(desk_runs, record):
    prop, coop, opt = desk_runs[SchemeKind.PROPOSED], desk_runs[SchemeKind.PROPOSED_COOPSETS], desk_runs[SchemeKind.OPTIMAL]
    sparse = all(c.nonzero_u <= p.nonzero_u for c, p in zip(coop, prop))
    med = float(np.median([_ratio(c.wsee, o.wsee) for c, o in zip(coop, opt)]))
    ok = sparse and med >= 0.75
    nz_c = np.mean([c.nonzero_u for c in coop])
    nz_p = np.mean([p.nonzero_u for p in prop])
    record(3, ok, f"nonzero_u {nz_c:.1f} vs {nz_p:.1f} (sparser in every run: {sparse}); "
                  f"median WSEE(CoopSets)/WSEE(Optimal) = {med:.4f} (>= 0.75)")
    assert ok


@pytest.mark.slow
def test_c04_scheme_ordering(desk_runs, record):
    opt, prop, rnd = desk_runs[SchemeKind.OPTIMAL], desk_runs[SchemeKind.PROPOSED], desk_runs[SchemeKind.RANDOM]
    bound = sum(o.wsee >= p.wsee for o, p in zip(opt, prop))
    beats = sum(p.wsee > r.wsee for p, r in zip(prop, rnd))
    ok = bound == len(opt) and beats >= 0.9 * len(opt)
    record(4, ok, f"Optimal >= Proposed in {bound}/{len(opt)} runs; Proposed > Random in {beats}/{len(opt)} (>= 90%)")
    assert ok


# -- 5 ---------------------------------------------------------------------


@pytest.mark.slow
def test_c05_convergence_shape(record):
    episodes, _ = single_pair_study([500.0], train_cfg=TrainConfig(), timing_repeats=1, master_seed=0)
    curve = [e["wsee"] for e in episodes]
    assert len(curve) == 500
    ep = convergence_episode(curve, 0.95)
    ok = ep is not None and curve[-1] > 0 and ep <= 200
    record(5, ok, f"greedy WSEE first reaches 95% of final value at episode {ep} (<= 200 of 500)")
    assert ok


# -- 6 ---------------------------------------------------------------------


def _min_time(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_c06_timing_ordering(record):
    full = build_grid(Q.p_min, Q.p_max, 3.0, 0.05)
    coarse = build_grid(Q.p_min, Q.p_max, 9.0, 0.05)
    assert full.joint_size == 95_832
    noise = NoiseModel(bandwidth_hz=SINGLE_PAIR_BANDWIDTH_HZ)
    gammas = compute_gains(fixed_line_scenario(1000, 500, 500, 500), noise).pair_gammas(0, 0)
    res = train_agent(gammas, Q, coarse, TrainConfig(episodes=50, steps_per_episode=50), noise=noise)
    assert greedy_decision(res.net, gammas, full, Q, s=res.final_state, noise=noise) is not None
    t_opt = _min_time(lambda: brute_force_pair_opt(gammas, Q, full), 7)
    t_dep = _min_time(lambda: greedy_decision(res.net, gammas, full, Q, s=res.final_state, noise=noise), 7)
    ratio = t_opt / t_dep
    ok = ratio >= 10.0
    record(6, ok, f"full-grid oracle {t_opt * 1e3:.2f} ms vs greedy deployment {t_dep * 1e3:.2f} ms: ratio {ratio:.1f} (>= 10)")
    assert ok


# -- 7 ---------------------------------------------------------------------


def _aux(beta, x, y):
    return (2.0 * y - 1.0) * math.log2(1.0 + beta * x)


def _fd_hessian(beta, x, y):
    hx = 1e-3 * (1.0 + beta * x) / beta
    hy = 1e-3
    f = lambda a, b: _aux(beta, a, b)  # noqa: E731
    h11 = (f(x + hx, y) - 2.0 * f(x, y) + f(x - hx, y)) / hx**2
    h22 = (f(x, y + hy) - 2.0 * f(x, y) + f(x, y - hy)) / hy**2
    h12 = (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4.0 * hx * hy)
    return np.array([[h11, h12], [h12, h22]])


def test_c07_nonconvexity_probe(record):
    xs = np.logspace(-3, 2, 51)[1:]
    ys = np.linspace(0.01, 0.49, 52)[1:-1]
    assert len(xs) == len(ys) == 50
    signs_ok = True
    worst = 0.0
    for beta in (0.1, 1.0, 10.0, 1e3):
        lam = nonconvexity_probe(beta, xs, ys)
        k = 0
        for x in xs:
            for y in ys:
                l1, l2 = lam[k]
                k += 1
                signs_ok &= l1 > 0 and l2 < 0
                fd = np.sort(np.linalg.eigvalsh(_fd_hessian(beta, x, y)))[::-1]
                worst = max(worst, abs(fd[0] - l1) / abs(l1), abs(fd[1] - l2) / abs(l2))
    ok = signs_ok and worst <= 1e-4
    record(7, ok, f"10,000 probe points: lambda1 > 0 > lambda2 everywhere: {signs_ok}; "
                  f"max relative error vs finite differences {worst:.2e} (<= 1e-4)")
    assert ok


# -- 8 ---------------------------------------------------------------------


def test_c08_interval_equivalence(record):
    rng = np.random.default_rng(8)
    grids = {"9 dB": build_grid(Q.p_min, Q.p_max, 9.0, 0.05), "3 dB": build_grid(Q.p_min, Q.p_max, 3.0, 0.05)}
    disagree = {k: 0 for k in grids}
    feasible = {k: 0 for k in grids}
    for _ in range(500):
        gammas = tuple(10.0 ** rng.uniform(2.0, 10.0, size=4))
        interval = feasibility_interval(*gammas, Q)
        for name, grid in grids.items():
            hit = interval_hits_grid(interval, grid)
            found = brute_force_pair_opt(gammas, Q, grid) is not None
            disagree[name] += hit != found
            feasible[name] += found
    ok = all(v == 0 for v in disagree.values())
    record(8, ok, f"500 gamma draws: interval/oracle disagreements {disagree} (feasible counts {feasible})")
    assert ok


# -- 9 ---------------------------------------------------------------------


def test_c09_gradient_check(record):
    rng = np.random.default_rng(9)
    net = QNetwork.initialize(TrainConfig().layer_sizes, rng)
    x = rng.uniform(-1.0, 1.0, size=(16, 12))
    y = rng.normal(size=16)
    _, grads = net.gradients(x, y)
    h = 1e-6
    worst = 0.0
    for p, g in zip(net.params(), grads):
        flat_p, flat_g = p.reshape(-1), g.reshape(-1)
        for i in range(flat_p.size):
            old = flat_p[i]
            flat_p[i] = old + h
            lp = net.gradients(x, y)[0]
            flat_p[i] = old - h
            lm = net.gradients(x, y)[0]
            flat_p[i] = old
            num = (lp - lm) / (2.0 * h)
            denom = max(abs(num), abs(flat_g[i]), 1e-8)
            worst = max(worst, abs(num - flat_g[i]) / denom)
    n_params = sum(p.size for p in net.params())
    ok = worst <= 1e-4
    record(9, ok, f"{n_params} parameters: max relative error {worst:.2e} (<= 1e-4)")
    assert ok


# -- 10 --------------------------------------------------------------------


def test_c10_determinism(tmp_path, record):
    outs = []
    for label, workers in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / label
        argv = ["sweep", "--preset", "smoke", "--runs", "2", "--seed", "123", "--workers", str(workers), "--out", str(out)]
        assert cli.main(argv) == 0
        outs.append({name: (out / name).read_bytes() for name in ("sweep.csv", "runs.csv")})
    ok = outs[0] == outs[1] == outs[2]
    record(10, ok, "sweep --runs 2 --seed 123: byte-identical CSVs across two invocations and workers {1, 4}: " + str(ok))
    assert ok
