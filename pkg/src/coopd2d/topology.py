"""Node layouts: random single-cell drops and fixed single-pair geometries."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng

__all__ = [
    "CellScenario",
    "GeometryError",
    "sample_scenario",
    "fixed_line_scenario",
    "distance",
    "scenario_to_csv",
    "scenario_from_csv",
]


class GeometryError(ValueError):
    """Requested distances cannot be realized in the plane."""


@dataclass(frozen=True)
class CellScenario:
    """Positions (meters) of the BS, M cellular users and N D2D pairs.

    The BS sits at the origin. ``cu_positions`` has shape (M, 2),
    ``dt_positions`` and ``dr_positions`` have shape (N, 2).
    """

    radius: float
    cu_positions: np.ndarray
    dt_positions: np.ndarray
    dr_positions: np.ndarray
    pl_exponent: float = 3.8

    def __post_init__(self):
        for name in ("cu_positions", "dt_positions", "dr_positions"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1, 2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.cu_positions) < 1:
            raise ValueError("scenario needs at least one cellular user")
        if len(self.dt_positions) < 1 or len(self.dt_positions) != len(self.dr_positions):
            raise ValueError("DT and DR lists must be non-empty and of equal length")
        if not self.pl_exponent > 0:
            raise ValueError("path-loss exponent must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def bs_pos(self) -> np.ndarray:
        return np.zeros(2)

    @property
    def m_links(self) -> int:
        return len(self.cu_positions)

    @property
    def n_links(self) -> int:
        return len(self.dt_positions)


def distance(a, b) -> float:
    """Euclidean distance between two 2-D points."""
    return math.hypot(float(a[0]) - float(b[0]), float(a[1]) - float(b[1]))


def _disk_points(gen: np.random.Generator, count: int, radius: float) -> np.ndarray:
    # inverse-CDF radius makes the drop exactly uniform over the disk;
    # row-wise draws keep the first k points independent of count
    draws = gen.random((count, 2))
    phi = draws[:, 1] * 2.0 * math.pi
    r = radius * np.sqrt(draws[:, 0])
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_scenario(
    m_links: int,
    n_links: int,
    radius: float = 500.0,
    pl_exponent: float = 3.8,
    seed: int = 0,
    d2d_max_pair_distance: float | None = None,
) -> CellScenario:
    """Drop M CUs, N DTs and N DRs independently and uniformly in the cell.

    CUs, DTs and DRs come from separate streams, so for a fixed seed the
    scenario with N + 1 D2D links extends the one with N (and likewise
    for M). With ``d2d_max_pair_distance`` set, a DR further than that from its DT
    is redrawn (uniform over the cell again) until it lands within range.
    """
    if m_links < 1 or n_links < 1:
        raise ValueError(f"need m_links >= 1 and n_links >= 1, got {m_links}, {n_links}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if d2d_max_pair_distance is not None and not d2d_max_pair_distance > 0:
        raise ValueError("d2d_max_pair_distance must be positive")

    cu = _disk_points(_rng.make_rng(seed, _rng.SCENARIO, 0), m_links, radius)
    dt = _disk_points(_rng.make_rng(seed, _rng.SCENARIO, 1), n_links, radius)
    dr_gen = _rng.make_rng(seed, _rng.SCENARIO, 2)
    if d2d_max_pair_distance is None:
        dr = _disk_points(dr_gen, n_links, radius)
    else:
        dr = np.empty((n_links, 2))
        for i in range(n_links):
            dr[i] = _disk_points(dr_gen, 1, radius)[0]
            while np.hypot(*(dr[i] - dt[i])) > d2d_max_pair_distance:
                dr[i] = _disk_points(dr_gen, 1, radius)[0]
    # r = R*sqrt(u) can round a hair above R
    for pts in (cu, dt, dr):
        norms = np.hypot(pts[:, 0], pts[:, 1])
        over = norms > radius
        pts[over] *= (radius / norms[over])[:, None]
    return CellScenario(radius, cu, dt, dr, pl_exponent)


def fixed_line_scenario(
    d_cu_bs: float,
    d_dt_bs: float,
    d_dt_dr: float,
    d_cu_dt: float,
    pl_exponent: float = 3.8,
) -> CellScenario:
    """Single CU / single D2D pair placed at prescribed mutual distances.

    DT lies on the positive x-axis, the CU at the upper intersection of the
    two circles around BS and DT, and the DR perpendicular to the BS-DT axis
    on the side opposite the CU.
    """
    if min(d_cu_bs, d_dt_bs, d_dt_dr, d_cu_dt) < 0 or d_dt_bs <= 0:
        raise GeometryError("distances must be non-negative and d_dt_bs positive")
    tol = 1e-9 * max(d_cu_bs, d_dt_bs, d_cu_dt, 1.0)
    if not (abs(d_cu_bs - d_dt_bs) - tol <= d_cu_dt <= d_cu_bs + d_dt_bs + tol):
        raise GeometryError(
            f"triangle inequality violated: |{d_cu_bs} - {d_dt_bs}| <= {d_cu_dt}"
            f" <= {d_cu_bs} + {d_dt_bs} does not hold"
        )
    x = (d_cu_bs**2 - d_cu_dt**2 + d_dt_bs**2) / (2.0 * d_dt_bs)
    y = math.sqrt(max(d_cu_bs**2 - x * x, 0.0))
    cu = np.array([[x, y]])
    dt = np.array([[d_dt_bs, 0.0]])
    dr = np.array([[d_dt_bs, -d_dt_dr]])
    radius = max(d_cu_bs, math.hypot(d_dt_bs, d_dt_dr), d_dt_bs)
    return CellScenario(radius, cu, dt, dr, pl_exponent)


def scenario_to_csv(scenario: CellScenario) -> str:
    """One row per node: ``kind,index,x_m,y_m``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "index", "x_m", "y_m"])
    w.writerow(["BS", 0, repr(0.0), repr(0.0)])
    for kind, pts in (
        ("CU", scenario.cu_positions),
        ("DT", scenario.dt_positions),
        ("DR", scenario.dr_positions),
    ):
        for i, (x, y) in enumerate(pts):
            w.writerow([kind, i, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def scenario_from_csv(text: str, radius: float | None = None, pl_exponent: float = 3.8) -> CellScenario:
    """Inverse of :func:`scenario_to_csv`; radius defaults to the farthest node."""
    rows = list(csv.DictReader(io.StringIO(text)))
    pts: dict[str, dict[int, tuple[float, float]]] = {"CU": {}, "DT": {}, "DR": {}}
    for row in rows:
        kind = row["kind"]
        if kind == "BS":
            continue
        if kind not in pts:
            raise ValueError(f"unknown node kind {kind!r}")
        pts[kind][int(row["index"])] = (float(row["x_m"]), float(row["y_m"]))

    def ordered(kind):
        d = pts[kind]
        if sorted(d) != list(range(len(d))):
            raise ValueError(f"{kind} indices must be 0..{len(d) - 1}")
        return np.array([d[i] for i in range(len(d))]).reshape(-1, 2)

    cu, dt, dr = ordered("CU"), ordered("DT"), ordered("DR")
    if radius is None:
        allpts = np.vstack((cu, dt, dr))
        radius = float(np.max(np.hypot(allpts[:, 0], allpts[:, 1])))
    return CellScenario(radius, cu, dt, dr, pl_exponent)
