"""Cooperative link sets: which cellular links each D2D link may consider."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .channel import ChannelGains
from .coopshare import QosConfig, feasibility_interval
from .topology import CellScenario, distance

__all__ = ["CoopSetConfig", "CoopSets", "cooperative_sets", "masked_weight_matrix", "nonzero_count", "sets_to_csv"]


@dataclass(frozen=True)
class CoopSetConfig:
    r_n1: float = 375.0  # CU-DT range, m
    r_n2: float = 375.0  # CU-BS range, m

    def __post_init__(self):
        if not (self.r_n1 > 0 and self.r_n2 > 0):
            raise ValueError("cooperative ranges must be positive")


@dataclass(frozen=True)
class CoopSets:
    """``sets[n]`` is the ascending tuple of admitted cellular indices for D2D link n."""

    sets: tuple
    m_links: int

    def mask(self) -> np.ndarray:
        out = np.zeros((self.m_links, len(self.sets)), dtype=bool)
        for n, members in enumerate(self.sets):
            out[list(members), n] = True
        return out

    def size(self) -> int:
        return sum(len(s) for s in self.sets)


def cooperative_sets(scenario: CellScenario, gains: ChannelGains, q: QosConfig, cfg: CoopSetConfig) -> CoopSets:
    """Admit CU m for D2D link n when both distance gates pass and the
    full-power feasibility interval is non-empty."""
    if (gains.m_links, gains.n_links) != (scenario.m_links, scenario.n_links):
        raise ValueError("gains and scenario dimensions differ")
    sets = []
    bs = scenario.bs_pos
    for n in range(scenario.n_links):
        dt = scenario.dt_positions[n]
        members = []
        for m in range(scenario.m_links):
            cu = scenario.cu_positions[m]
            if distance(cu, dt) > cfg.r_n1 or distance(cu, bs) > cfg.r_n2:
                continue
            if feasibility_interval(*gains.pair_gammas(m, n), q) is None:
                continue
            members.append(m)
        sets.append(tuple(members))
    return CoopSets(tuple(sets), scenario.m_links)


def masked_weight_matrix(u, sets: CoopSets) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    mask = sets.mask()
    if mask.shape != u.shape:
        raise ValueError(f"mask shape {mask.shape} does not match matrix shape {u.shape}")
    return np.where(mask, u, 0.0)


def nonzero_count(u) -> int:
    return int(np.count_nonzero(np.asarray(u) > 0))


def sets_to_csv(sets: CoopSets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m"])
    for n, members in enumerate(sets.sets):
        for m in members:
            w.writerow([n, m])
    return buf.getvalue()
