"""Large-scale link budget: distance-based path gain and per-watt SNR coefficients."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .topology import CellScenario

__all__ = ["NoiseModel", "ChannelGains", "path_gain", "compute_gains", "snr_coeff", "gains_to_csv"]

REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class NoiseModel:
    n0_dbm_per_hz: float = -174.0
    bandwidth_hz: float = 180e3

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be positive")

    @property
    def noise_power_w(self) -> float:
        return 10.0 ** ((self.n0_dbm_per_hz - 30.0) / 10.0) * self.bandwidth_hz


def path_gain(d, pl_exponent: float = 3.8):
    """Power gain ``max(d, 1 m) ** -pl_exponent``; works on scalars and arrays."""
    d = np.maximum(np.asarray(d, dtype=float), REFERENCE_DISTANCE_M)
    g = d ** (-pl_exponent)
    return float(g) if g.ndim == 0 else g


def snr_coeff(gain, noise: NoiseModel):
    """SNR per watt of transmit power: ``gain / noise_power``."""
    if not np.all(np.asarray(gain) > 0):
        raise ValueError("gain must be positive")
    return gain / noise.noise_power_w


@dataclass(frozen=True)
class ChannelGains:
    """Path gains of one scenario.

    ``g_mn[m, n]`` is CU m to DT n, ``g_mb[m]`` CU m to BS, ``g_nb[n]`` DT n
    to BS and ``g_nn[n]`` DT n to its own DR.
    """

    g_mn: np.ndarray
    g_mb: np.ndarray
    g_nb: np.ndarray
    g_nn: np.ndarray
    noise: NoiseModel

    @property
    def m_links(self) -> int:
        return self.g_mn.shape[0]

    @property
    def n_links(self) -> int:
        return self.g_mn.shape[1]

    def pair_gains(self, m: int, n: int) -> tuple[float, float, float, float]:
        return float(self.g_mn[m, n]), float(self.g_mb[m]), float(self.g_nb[n]), float(self.g_nn[n])

    def pair_gammas(self, m: int, n: int) -> tuple[float, float, float, float]:
        """``(gamma_mn, gamma_mb, gamma_nb, gamma_nn)`` in 1/W for the pair (m, n)."""
        p = self.noise.noise_power_w
        return tuple(g / p for g in self.pair_gains(m, n))


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def compute_gains(
    scenario: CellScenario,
    noise: NoiseModel | None = None,
    shadowing_db: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ChannelGains:
    """Gains for every link of ``scenario``.

    ``shadowing_db`` > 0 multiplies each gain by an independent log-normal
    factor with that standard deviation (needs ``rng``); gains are capped at 1.
    """
    noise = noise or NoiseModel()
    a = scenario.pl_exponent
    cu, dt, dr = scenario.cu_positions, scenario.dt_positions, scenario.dr_positions
    g_mn = path_gain(_pairwise(cu, dt), a)
    g_mb = path_gain(np.hypot(cu[:, 0], cu[:, 1]), a)
    g_nb = path_gain(np.hypot(dt[:, 0], dt[:, 1]), a)
    g_nn = path_gain(np.hypot(*(dt - dr).T), a)
    g_mn, g_mb, g_nb, g_nn = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (g_mn, g_mb, g_nb, g_nn))
    g_mn = g_mn.reshape(scenario.m_links, scenario.n_links)
    if shadowing_db > 0:
        if rng is None:
            raise ValueError("shadowing requires an rng")
        g_mn, g_mb, g_nb, g_nn = (
            np.minimum(g * 10.0 ** (rng.normal(0.0, shadowing_db, g.shape) / 10.0), 1.0)
            for g in (g_mn, g_mb, g_nb, g_nn)
        )
    return ChannelGains(g_mn, g_mb, g_nb, g_nn, noise)


def gains_to_csv(gains: ChannelGains) -> str:
    """Rows ``link_kind,m,n,gain``; the unused index is left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["link_kind", "m", "n", "gain"])
    for m in range(gains.m_links):
        for n in range(gains.n_links):
            w.writerow(["mn", m, n, repr(float(gains.g_mn[m, n]))])
    for m in range(gains.m_links):
        w.writerow(["mb", m, "", repr(float(gains.g_mb[m]))])
    for n in range(gains.n_links):
        w.writerow(["nb", "", n, repr(float(gains.g_nb[n]))])
    for n in range(gains.n_links):
        w.writerow(["nn", "", n, repr(float(gains.g_nn[n]))])
    return buf.getvalue()
