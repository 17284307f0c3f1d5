"""Small Monte Carlo sweep over the number of D2D links, and a single-pair
convergence curve. The full-size runs use the ``coopd2d`` command.

Run: python3 demos/06_sweep_and_single_pair.py   (about a minute)
"""

from coopd2d import ExperimentSetup, TrainConfig, monte_carlo, single_pair_study
from coopd2d.harness import convergence_episode

setup = ExperimentSetup(m_links=3, train=TrainConfig(episodes=20, steps_per_episode=20))
rows, _ = monte_carlo([2, 3], runs_per_point=2, setup=setup, master_seed=5)
print(f"{'scheme':18s} {'N':>2s} {'mean WSEE':>11s} {'nonzero U':>10s}")
for r in rows:
    print(f"{r.scheme.value:18s} {r.n:2d} {r.mean_wsee:11.3e} {r.mean_nonzero_u:10.1f}")

episodes, timing = single_pair_study([500.0], train_cfg=TrainConfig(episodes=40, steps_per_episode=30),
                                     timing_repeats=1)
curve = [e["wsee"] for e in episodes]
print(f"\nsingle pair at 500 m: greedy WSEE reaches 95% of its final value at episode "
      f"{convergence_episode(curve, 0.95)} of {len(curve)}")
for t in timing:
    print(f"  {t['scheme']:17s} {t['wallclock_ms']:9.2f} ms")
