"""Per-pair cooperative spectrum sharing model.

A matched pair (CU m, D2D link n) shares one resource block in three
phases: the CU broadcasts for a fraction ``theta`` of the block, the DT
relays the CU's data to the BS (decode-and-forward) for another ``theta``,
and the DT then sends its own data to its DR for the remaining
``1 - 2*theta``. Everything here works in watts and per-watt SNR
coefficients (``gamma = gain / noise_power``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ConfigurationError",
    "QosConfig",
    "ResourceDecision",
    "ActionGrid",
    "PairEvaluation",
    "Gammas",
    "dbm_to_watt",
    "watt_to_dbm",
    "evaluate_pair",
    "evaluate_grid",
    "reward",
    "shaped_reward",
    "build_grid",
    "feasibility_interval",
    "interval_hits_grid",
    "brute_force_pair_opt",
    "best_feasible_index",
    "aux_hessian",
    "nonconvexity_probe",
]


class ConfigurationError(ValueError):
    """Inconsistent model or grid parameters."""


def dbm_to_watt(dbm):
    w = 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return float(w) if w.ndim == 0 else w


def watt_to_dbm(w):
    return 10.0 * np.log10(w) + 30.0


class Gammas(NamedTuple):
    """Per-watt SNR coefficients of one cellular/D2D pair."""

    mn: float
    mb: float
    nb: float
    nn: float


@dataclass(frozen=True)
class QosConfig:
    q_c: float = 5.0
    q_d: float = 3.0
    mu: float = 1.0
    nu: float = 1.0
    p_min: float = 1e-7  # -40 dBm
    p_max: float = 10.0 ** -0.7  # 23 dBm
    phi: float = 1.0
    phi2: float = 1.0

    def __post_init__(self):
        checks = {
            "q_c": self.q_c > 0,
            "q_d": self.q_d > 0,
            "mu": self.mu > 0,
            "nu": self.nu > 0,
            "p_min": 0 < self.p_min <= self.p_max,
            "phi": self.phi >= 0,
            "phi2": self.phi2 >= 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ConfigurationError(f"invalid QoS parameters: {', '.join(bad)}")


@dataclass(frozen=True)
class ResourceDecision:
    p_c: float
    p_r: float
    p_d: float
    theta: float

    def check(self, q: QosConfig):
        tol = 1e-12 * q.p_max
        for name in ("p_c", "p_r", "p_d"):
            p = getattr(self, name)
            if not (q.p_min - tol <= p <= q.p_max + tol):
                raise ValueError(f"{name}={p!r} W outside [{q.p_min}, {q.p_max}]")
        if not 0.0 < self.theta < 0.5:
            raise ValueError(f"theta={self.theta!r} outside (0, 0.5)")


@dataclass(frozen=True)
class PairEvaluation:
    se_c: float
    se_d: float
    pbar_c: float
    pbar_d: float
    ee_c: float
    ee_d: float
    u: float
    c1_ok: bool
    c2_ok: bool

    @property
    def feasible(self) -> bool:
        return self.c1_ok and self.c2_ok


def _metrics(g, p_c, p_r, p_d, theta, q):
    # shared by the scalar and grid-wide evaluators so both agree bitwise
    snr_c = np.minimum(g.mn * p_c, g.mb * p_c + g.nb * p_r)
    se_c = theta * np.log2(1.0 + snr_c)
    se_d = (1.0 - 2.0 * theta) * np.log2(1.0 + g.nn * p_d)
    pbar_c = theta * p_c
    pbar_d = theta * p_r + (1.0 - 2.0 * theta) * p_d
    ee_c = se_c / pbar_c
    ee_d = se_d / pbar_d
    u = q.mu * ee_c + q.nu * ee_d
    return se_c, se_d, pbar_c, pbar_d, ee_c, ee_d, u


def evaluate_pair(gamma_mn, gamma_mb, gamma_nb, gamma_nn, d: ResourceDecision, q: QosConfig) -> PairEvaluation:
    """SE, average power, EE and weighted utility of one decision."""
    g = Gammas(float(gamma_mn), float(gamma_mb), float(gamma_nb), float(gamma_nn))
    if min(g) <= 0:
        raise ValueError("SNR coefficients must be positive")
    d.check(q)
    vals = _metrics(
        g,
        np.float64(d.p_c),
        np.float64(d.p_r),
        np.float64(d.p_d),
        np.float64(d.theta),
        q,
    )
    se_c, se_d, pbar_c, pbar_d, ee_c, ee_d, u = map(float, vals)
    return PairEvaluation(se_c, se_d, pbar_c, pbar_d, ee_c, ee_d, u, se_c >= q.q_c, se_d >= q.q_d)


def shaped_reward(u, se_c, se_d, q: QosConfig):
    """QoS-shaped reward; elementwise on arrays."""
    pen_c = np.minimum(se_c - q.q_c, 0.0) / q.q_c
    pen_d = np.minimum(se_d - q.q_d, 0.0) / q.q_d
    return u * (1.0 + q.phi * pen_c + q.phi2 * pen_d)


def reward(ev: PairEvaluation, q: QosConfig) -> float:
    """Utility scaled down in proportion to the relative C1/C2 shortfall.

    Equals ``ev.u`` whenever both SE requirements hold.
    """
    if ev.feasible:
        return ev.u
    return float(shaped_reward(ev.u, ev.se_c, ev.se_d, q))


class ActionGrid:
    """Discrete joint action lattice ``(p_c, p_r, p_d, theta)``.

    Joint indices are mixed-radix with theta varying fastest::

        index = ((i_c * I + i_r) * I + i_d) * L + i_theta
    """

    def __init__(self, power_levels, theta_levels):
        self.power_levels = np.asarray(power_levels, dtype=float)
        self.theta_levels = np.asarray(theta_levels, dtype=float)
        self.power_levels.setflags(write=False)
        self.theta_levels.setflags(write=False)
        self.n_power = len(self.power_levels)
        self.n_theta = len(self.theta_levels)
        self.joint_size = self.n_power**3 * self.n_theta
        self._columns = None

    def __repr__(self):
        return f"ActionGrid(n_power={self.n_power}, n_theta={self.n_theta}, joint_size={self.joint_size})"

    def encode(self, i_c, i_r, i_d, i_t):
        I, L = self.n_power, self.n_theta
        return ((i_c * I + i_r) * I + i_d) * L + i_t

    def decode(self, index):
        """Level indices ``(i_c, i_r, i_d, i_theta)``; accepts arrays."""
        if np.any(np.asarray(index) < 0) or np.any(np.asarray(index) >= self.joint_size):
            raise IndexError(f"joint index out of range [0, {self.joint_size})")
        I, L = self.n_power, self.n_theta
        rest, i_t = divmod(index, L)
        rest, i_d = divmod(rest, I)
        i_c, i_r = divmod(rest, I)
        return i_c, i_r, i_d, i_t

    def decision(self, index) -> ResourceDecision:
        i_c, i_r, i_d, i_t = self.decode(int(index))
        pl = self.power_levels
        return ResourceDecision(float(pl[i_c]), float(pl[i_r]), float(pl[i_d]), float(self.theta_levels[i_t]))

    def level_indices(self):
        """Level-index columns for every joint action, in joint-index order."""
        return self.decode(np.arange(self.joint_size))

    def columns(self):
        """``(p_c, p_r, p_d, theta)`` arrays over the whole grid (cached)."""
        if self._columns is None:
            i_c, i_r, i_d, i_t = self.level_indices()
            pl = self.power_levels
            cols = (pl[i_c], pl[i_r], pl[i_d], self.theta_levels[i_t])
            for c in cols:
                c.setflags(write=False)
            self._columns = cols
        return self._columns

    def midpoint_index(self) -> int:
        return self.encode(self.n_power // 2, self.n_power // 2, self.n_power // 2, self.n_theta // 2)


def build_grid(p_min: float, p_max: float, dp_db: float, dtheta: float) -> ActionGrid:
    """Geometric power ladder with step ``dp_db`` and arithmetic theta ladder.

    The dB span and ``0.5 / dtheta`` must divide exactly; nothing is rounded
    silently.
    """
    if not (0 < p_min < p_max):
        raise ConfigurationError(f"need 0 < p_min < p_max, got {p_min}, {p_max}")
    if not dp_db > 0:
        raise ConfigurationError("dp_db must be positive")
    span_db = 10.0 * math.log10(p_max / p_min)
    steps = span_db / dp_db
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ConfigurationError(f"power step {dp_db} dB does not divide the {span_db:.6g} dB span")
    steps = int(round(steps))
    if not 0 < dtheta < 0.5:
        raise ConfigurationError("dtheta must lie in (0, 0.5)")
    slots = 0.5 / dtheta
    if abs(slots - round(slots)) > 1e-9 * slots or round(slots) < 2:
        raise ConfigurationError(f"0.5 / dtheta must be an integer >= 2, got {slots:.6g}")
    slots = int(round(slots))

    power = p_min * 10.0 ** (np.arange(steps + 1) * dp_db / 10.0)
    power[-1] = p_max
    theta = np.arange(1, slots) * (0.5 / slots)
    return ActionGrid(power, theta)


def evaluate_grid(gammas, grid: ActionGrid, q: QosConfig, indices=None):
    """Vectorized evaluation of every (or the selected) joint action.

    Returns a dict of arrays: se_c, se_d, pbar_c, pbar_d, ee_c, ee_d, u,
    feasible, reward.
    """
    g = Gammas(*map(float, gammas))
    p_c, p_r, p_d, theta = grid.columns()
    if indices is not None:
        p_c, p_r, p_d, theta = (c[indices] for c in (p_c, p_r, p_d, theta))
    se_c, se_d, pbar_c, pbar_d, ee_c, ee_d, u = _metrics(g, p_c, p_r, p_d, theta, q)
    feasible = (se_c >= q.q_c) & (se_d >= q.q_d)
    r = np.where(feasible, u, shaped_reward(u, se_c, se_d, q))
    return {
        "se_c": se_c,
        "se_d": se_d,
        "pbar_c": pbar_c,
        "pbar_d": pbar_d,
        "ee_c": ee_c,
        "ee_d": ee_d,
        "u": u,
        "feasible": feasible,
        "reward": r,
    }


def feasibility_interval(gamma_mn, gamma_mb, gamma_nb, gamma_nn, q: QosConfig):
    """Spectrum-sharing factors compatible with both SE floors at full power.

    Returns ``(theta_lo, theta_hi)`` or ``None`` when no theta in (0, 0.5)
    can satisfy both requirements even with every power at ``p_max``.
    """
    cell = math.log2(1.0 + q.p_max * min(gamma_mn, gamma_mb + gamma_nb))
    d2d = math.log2(1.0 + q.p_max * gamma_nn)
    if cell <= 0 or d2d <= 0:
        return None
    lo = q.q_c / cell
    hi = 0.5 - q.q_d / (2.0 * d2d)
    if lo > hi or lo >= 0.5 or hi <= 0.0:
        return None
    return lo, hi


def interval_hits_grid(interval, grid: ActionGrid) -> bool:
    if interval is None:
        return False
    lo, hi = interval
    return bool(np.any((grid.theta_levels >= lo) & (grid.theta_levels <= hi)))


def best_feasible_index(gammas, grid: ActionGrid, q: QosConfig):
    """Joint index of the feasible action with the largest utility, or None.

    Ties go to the lowest index (``argmax`` returns the first maximum).
    """
    ev = evaluate_grid(gammas, grid, q)
    if not ev["feasible"].any():
        return None, ev
    masked = np.where(ev["feasible"], ev["u"], -np.inf)
    return int(np.argmax(masked)), ev


def brute_force_pair_opt(gammas, q: QosConfig, grid: ActionGrid):
    """Exhaustive sweep of the grid: ``(decision, u)`` of the best feasible action or None."""
    idx, ev = best_feasible_index(gammas, grid, q)
    if idx is None:
        return None
    return grid.decision(idx), float(ev["u"][idx])


def aux_hessian(beta, x, y):
    """Hessian entries ``(h11, h12, h22)`` of ``(2y - 1) * log2(1 + beta * x)``."""
    ln2 = math.log(2.0)
    h11 = beta**2 * (1.0 - 2.0 * y) / ((1.0 + beta * x) ** 2 * ln2)
    h12 = 2.0 * beta / ((1.0 + beta * x) * ln2)
    return h11, h12, 0.0 * h11


def nonconvexity_probe(beta, x_grid, y_grid):
    """Closed-form Hessian eigenvalues of the D2D SE term over a grid.

    Returns ``[(lambda1, lambda2), ...]`` in row-major (x outer, y inner)
    order. A positive and a negative eigenvalue at the same point means the
    Hessian is indefinite there.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    out = []
    for x in x_grid:
        if not x > 0:
            raise ValueError("x must be positive")
        for y in y_grid:
            if not 0 < y < 0.5:
                raise ValueError("y must lie in (0, 0.5)")
            h11, h12, _ = aux_hessian(beta, x, y)
            half = h11 / 2.0
            root = math.sqrt(half * half + h12 * h12)
            out.append((half + root, half - root))
    return out
