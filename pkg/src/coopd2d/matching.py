"""BS-side link matching over the pair-utility matrix.

Rows are cellular links, columns are D2D links. A zero entry means the pair
cannot (or should not) cooperate; such edges never appear in a matching.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Matching",
    "as_weight_matrix",
    "km_match",
    "brute_force_match",
    "system_wsee",
    "matrix_to_csv",
    "matrix_from_csv",
]

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class Matching:
    """One-to-one set of ``(m, n)`` pairs (0-based) and its summed weight."""

    pairs: tuple
    total_weight: float

    def __len__(self):
        return len(self.pairs)


def as_weight_matrix(u) -> np.ndarray:
    """Validate and return ``u`` as a float M x N array."""
    u = np.array(u, dtype=float)
    if u.ndim != 2:
        raise ValueError(f"weight matrix must be 2-D, got shape {u.shape}")
    if not np.all(np.isfinite(u)) or np.any(u < 0):
        raise ValueError("weights must be finite and non-negative")
    return u


def _weight(u, pairs):
    return float(sum(u[m, n] for m, n in pairs))


def _hungarian_max(u: np.ndarray):
    """Maximum-weight perfect assignment on a square non-negative matrix.

    Shortest augmenting path with row/column potentials, O(n^3). Returns
    ``col_of_row`` with ``col_of_row[i]`` the column assigned to row i.
    """
    n = u.shape[0]
    cost = u.max() - u if n else u
    INF = float("inf")
    pot_r = np.zeros(n + 1)
    pot_c = np.zeros(n + 1)
    row_of_col = np.zeros(n + 1, dtype=int)  # 1-based, 0 = free
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - pot_r[i0] - pot_c[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            pot_r[row_of_col[used]] += delta
            pot_c[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=int)
    for j in range(1, n + 1):
        col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row


def _optimum(u: np.ndarray) -> float:
    """Best achievable total weight (zero edges contribute nothing)."""
    m, n = u.shape
    if m == 0 or n == 0:
        return 0.0
    k = max(m, n)
    sq = np.zeros((k, k))
    sq[:m, :n] = u
    cols = _hungarian_max(sq)
    return _weight(sq, [(i, int(cols[i])) for i in range(k)])


def _tol(w):
    return 1e-9 * max(1.0, abs(w))


def km_match(u) -> Matching:
    """Maximum-weight one-to-one matching (Kuhn-Munkres).

    Rectangular inputs are zero-padded to square. Among all weight-optimal
    matchings the lexicographically smallest sorted pair list is returned;
    the final scan fixes pairs in (m, n) order and keeps each one only if
    the remaining sub-problem can still reach the optimum.
    """
    u = as_weight_matrix(u)
    best = _optimum(u)
    if best <= 0.0:
        return Matching((), 0.0)
    rows = list(range(u.shape[0]))
    cols = list(range(u.shape[1]))
    chosen = []
    need = best
    for m in range(u.shape[0]):
        for n in range(u.shape[1]):
            if need <= _tol(best):
                break
            if u[m, n] <= 0.0 or m not in rows or n not in cols:
                continue
            sub_rows = [r for r in rows if r != m]
            sub_cols = [c for c in cols if c != n]
            rest = _optimum(u[np.ix_(sub_rows, sub_cols)])
            if u[m, n] + rest >= need - _tol(best):
                chosen.append((m, n))
                rows, cols = sub_rows, sub_cols
                need -= u[m, n]
    pairs = tuple(chosen)
    return Matching(pairs, _weight(u, pairs))


def brute_force_match(u) -> Matching:
    """Enumerate every injective partial assignment (test oracle).

    Same conventions as :func:`km_match`: zero edges are dropped and the
    lexicographically smallest optimal pair list wins.
    """
    u = as_weight_matrix(u)
    m_links, n_links = u.shape
    if min(m_links, n_links) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to min(M, N) <= {BRUTE_FORCE_LIMIT}")
    transpose = m_links > n_links
    w = u.T if transpose else u
    small, large = w.shape
    best_pairs, best_w = (), 0.0
    # every full assignment of the smaller side; partial ones are covered by dropping zero edges
    for perm in itertools.permutations(range(large), small):
        pairs = [(i, perm[i]) for i in range(small)]
        if transpose:
            pairs = [(b, a) for a, b in pairs]
        pairs = tuple(sorted(p for p in pairs if u[p] > 0.0))
        wt = _weight(u, pairs)
        if wt > best_w + _tol(best_w) or (abs(wt - best_w) <= _tol(best_w) and pairs < best_pairs):
            best_pairs, best_w = pairs, wt
    return Matching(best_pairs, _weight(u, best_pairs))


def system_wsee(u, match: Matching) -> float:
    """Summed pair utility of a matching."""
    u = as_weight_matrix(u)
    rows, cols = set(), set()
    for m, n in match.pairs:
        if not (0 <= m < u.shape[0] and 0 <= n < u.shape[1]):
            raise ValueError(f"pair {(m, n)} outside a {u.shape} matrix")
        if m in rows or n in cols:
            raise ValueError("matching is not one-to-one")
        rows.add(m)
        cols.add(n)
    return _weight(u, sorted(match.pairs))


def matrix_to_csv(u) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(u, dtype=float):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    rows = [[float(x) for x in r] for r in csv.reader(io.StringIO(text)) if r]
    return as_weight_matrix(rows)
