"""Drop a cell, compute link gains, and see how the scenario grows with N.

Run: python3 demos/01_geometry_and_gains.py
"""

import numpy as np

from coopd2d import NoiseModel, compute_gains, sample_scenario

noise = NoiseModel()
print(f"noise power over {noise.bandwidth_hz / 1e3:.0f} kHz: {noise.noise_power_w:.3e} W")

sc = sample_scenario(m_links=4, n_links=3, radius=500.0, seed=7)
print(f"\n{sc.m_links} CUs, {sc.n_links} D2D links in a {sc.radius:.0f} m cell")
for n, (dt, dr) in enumerate(zip(sc.dt_positions, sc.dr_positions)):
    print(f"  link {n}: DT {np.round(dt, 1)} -> DR {np.round(dr, 1)}, {np.hypot(*(dr - dt)):.1f} m apart")

gains = compute_gains(sc, noise)
print("\ngamma (gain / noise) for CU 0 sharing with D2D link 0:")
for name, g in zip(("CU->DT", "CU->BS", "DT->BS", "DT->DR"), gains.pair_gammas(0, 0)):
    print(f"  {name:7s} {10 * np.log10(g):6.1f} dB")

# adding a D2D link keeps the existing nodes where they were
bigger = sample_scenario(m_links=4, n_links=4, radius=500.0, seed=7)
same = np.array_equal(bigger.dt_positions[:3], sc.dt_positions)
print(f"\nN = 4 scenario keeps the first three DTs of N = 3: {same}")
