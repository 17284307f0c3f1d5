"""Train one pair's Q-network on the coarse grid and deploy it on the fine grid.

Run: python3 demos/04_train_one_agent.py   (about ten seconds)
"""

from coopd2d import (
    NoiseModel,
    QosConfig,
    TrainConfig,
    brute_force_pair_opt,
    build_grid,
    compute_gains,
    fixed_line_scenario,
    greedy_decision,
    train_agent,
)
from coopd2d.harness import SINGLE_PAIR_BANDWIDTH_HZ

q = QosConfig()
noise = NoiseModel(bandwidth_hz=SINGLE_PAIR_BANDWIDTH_HZ)  # single-pair geometry needs a narrow band
gammas = compute_gains(fixed_line_scenario(1000, 500, 500, 500), noise).pair_gammas(0, 0)
coarse = build_grid(q.p_min, q.p_max, 9.0, 0.05)
fine = build_grid(q.p_min, q.p_max, 3.0, 0.05)

cfg = TrainConfig(episodes=60, steps_per_episode=50, seed=1)
res = train_agent(gammas, q, coarse, cfg, noise=noise)
for rec in res.log[::10] + [res.log[-1]]:
    print(f"episode {rec.episode:3d}  epsilon {rec.epsilon:.2f}  greedy u {rec.greedy_u:.3e}  loss {rec.loss:.3e}")

oracle = brute_force_pair_opt(gammas, q, fine)
deployed = greedy_decision(res.net, gammas, fine, q, s=res.final_state, noise=noise)
print(f"\nfine-grid optimum u = {oracle[1]:.3e}")
print("deployed policy: " + ("infeasible" if deployed is None else f"u = {deployed[1]:.3e} "
                             f"({deployed[1] / oracle[1]:.1%} of optimum)"))
