"""Evaluate one CU / D2D pair: utility of a hand-picked decision, the
closed-form feasible time-split interval, and the exhaustive optimum.

Run: python3 demos/02_pair_model_and_oracle.py
"""

from coopd2d import (
    NoiseModel,
    QosConfig,
    ResourceDecision,
    brute_force_pair_opt,
    build_grid,
    compute_gains,
    evaluate_pair,
    feasibility_interval,
    fixed_line_scenario,
)
from coopd2d.harness import SINGLE_PAIR_BANDWIDTH_HZ

q = QosConfig()
noise = NoiseModel(bandwidth_hz=SINGLE_PAIR_BANDWIDTH_HZ)  # single-pair geometry needs a narrow band
sc = fixed_line_scenario(d_cu_bs=1000, d_dt_bs=500, d_dt_dr=500, d_cu_dt=750)
gammas = compute_gains(sc, noise).pair_gammas(0, 0)

guess = ResourceDecision(p_c=q.p_max, p_r=q.p_max, p_d=q.p_max, theta=0.25)
ev = evaluate_pair(*gammas, guess, q)
print(f"all powers at p_max, theta = 0.25: SE_c {ev.se_c:.2f}, SE_d {ev.se_d:.2f} bit/s/Hz, "
      f"feasible {ev.feasible}, u = {ev.u:.3e}")

interval = feasibility_interval(*gammas, q)
print(f"theta must lie in {interval} for both rate floors to be reachable")

for dp in (9.0, 3.0):
    grid = build_grid(q.p_min, q.p_max, dp, 0.05)
    best = brute_force_pair_opt(gammas, q, grid)
    print(f"\n{dp:.0f} dB grid, {grid.joint_size} actions")
    if best is None:
        print("  no feasible action")
    else:
        d, u = best
        print(f"  best: p_c {d.p_c:.2e} W, p_r {d.p_r:.2e} W, p_d {d.p_d:.2e} W, theta {d.theta:.2f}, u = {u:.3e}")
