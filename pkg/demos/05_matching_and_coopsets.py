"""Pair CUs with D2D links by maximum-weight matching, with and without
the distance-based cooperative sets.

Run: python3 demos/05_matching_and_coopsets.py
"""

import numpy as np

from coopd2d import (
    CoopSetConfig,
    NoiseModel,
    QosConfig,
    brute_force_pair_opt,
    build_grid,
    compute_gains,
    cooperative_sets,
    km_match,
    sample_scenario,
    system_wsee,
)

q = QosConfig()
grid = build_grid(q.p_min, q.p_max, 9.0, 0.05)
sc = sample_scenario(m_links=5, n_links=4, seed=3)
gains = compute_gains(sc, NoiseModel())

u = np.zeros((sc.m_links, sc.n_links))
for m in range(sc.m_links):
    for n in range(sc.n_links):
        best = brute_force_pair_opt(gains.pair_gammas(m, n), q, grid)
        u[m, n] = 0.0 if best is None else best[1]
print("pair utilities (0 = QoS cannot be met):")
print(np.array2string(u, precision=2, max_line_width=120))

match = km_match(u)
print(f"\nmatching {match.pairs}, WSEE {system_wsee(u, match):.3e}")

sets = cooperative_sets(sc, gains, q, CoopSetConfig())
masked = np.where(sets.mask(), u, 0.0)
coop_match = km_match(masked)
print(f"cooperative sets keep {sets.size()} of {u.size} candidate pairs")
print(f"matching on the sets {coop_match.pairs}, WSEE {system_wsee(u, coop_match):.3e}")
