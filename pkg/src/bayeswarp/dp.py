"""Dynamic-programming solution of the elastic alignment problem.

Finds the piecewise-linear warp ``gamma`` on a lattice that minimizes
``||q1 - (q2, gamma)||``.  Used as the deterministic baseline.
"""

from dataclasses import dataclass
from math import gcd

import numpy as np

from .exceptions import InvalidInputError
from .functions import as_function, check_same_length, interp_uniform, uniform_grid


def _diagonal_first(steps, refine):
    return tuple(
        sorted(set(steps), key=lambda ab: (abs(np.log(ab[1] / (ab[0] * refine))), ab))
    )


def coprime_steps(max_step=4):
    """All coprime ``(a, b)`` with ``1 <= a, b <= max_step``, nearest-diagonal first."""
    steps = [
        (a, b)
        for a in range(1, max_step + 1)
        for b in range(1, max_step + 1)
        if gcd(a, b) == 1
    ]
    return _diagonal_first(steps, 1)


def refined_steps(refine=8, max_cells=2, max_slope=4.0):
    """Steps over ``a <= max_cells`` cells in t on a gamma lattice ``refine`` times finer.

    Keeps every slope ``b / (a * refine)`` in ``[1 / max_slope, max_slope]``
    once, in lowest terms.
    """
    steps = []
    for a in range(1, max_cells + 1):
        for b in range(1, int(max_slope * a * refine) + 1):
            slope = b / (a * refine)
            if 1.0 / max_slope <= slope <= max_slope and gcd(a, b) == 1:
                steps.append((a, b))
    return _diagonal_first(steps, refine)


@dataclass(frozen=True)
class DpConfig:
    """DP lattice and admissible steps.

    The lattice has ``grid_size`` points in ``t`` (``None``: the data grid)
    and ``refine`` times as many cells in ``gamma(t)``.  A step ``(a, b)``
    advances ``a`` cells in ``t`` and ``b`` cells in ``gamma``, i.e. a
    segment of slope ``b / (a * refine)``.  ``DpConfig(refine=1,
    neighborhood=coprime_steps(4))`` is the classical square lattice with
    slopes ``b / a``, ``a, b <= 4``.
    """

    grid_size: int | None = None
    refine: int = 8
    neighborhood: tuple = refined_steps(8, 2, 4.0)

    def __post_init__(self):
        if self.grid_size is not None and self.grid_size < 2:
            raise InvalidInputError("DP lattice needs at least 2 points")
        if self.refine < 1:
            raise InvalidInputError("refine must be a positive integer")
        if not self.neighborhood or any(
            a < 1 or b < 1 for a, b in self.neighborhood
        ):
            raise InvalidInputError("DP steps must have strictly positive components")

    @classmethod
    def square(cls, grid_size=None, max_step=4):
        return cls(grid_size=grid_size, refine=1, neighborhood=coprime_steps(max_step))


def _edge_costs(q1l, q2, k, a, b, l_idx, refine):
    """Trapezoidal cost of the segments from (k, l) to (k + a, l + b) for all l."""
    m = q1l.size
    h = 1.0 / (m - 1)
    hg = h / refine
    slope = b / (a * refine)
    root = np.sqrt(slope)
    total = np.zeros(l_idx.size)
    for p in range(a + 1):
        x = (l_idx + p * b / a) * hg
        r = q1l[k + p] - interp_uniform(q2, x) * root
        wt = 0.5 if p in (0, a) else 1.0
        total += wt * r * r
    return total * h


def _solve(q1l, q2, steps, refine):
    m = q1l.size
    mg = refine * (m - 1) + 1
    cost = np.full((m, mg), np.inf)
    cost[0, 0] = 0.0
    back = np.full((m, mg), -1, dtype=np.intp)
    for i in range(1, m):
        for s_idx, (a, b) in enumerate(steps):
            k = i - a
            if k < 0 or b > mg - 1:
                continue
            l_idx = np.arange(0, mg - b)
            prev = cost[k, l_idx]
            live = np.isfinite(prev)
            if not live.any():
                continue
            l_idx = l_idx[live]
            cand = prev[live] + _edge_costs(q1l, q2, k, a, b, l_idx, refine)
            j_idx = l_idx + b
            better = cand < cost[i, j_idx]
            cost[i, j_idx[better]] = cand[better]
            back[i, j_idx[better]] = s_idx
    return cost, back


def _backtrack(back, steps):
    m, mg = back.shape
    i, j = m - 1, mg - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        s_idx = back[i, j]
        if s_idx < 0:
            raise RuntimeError("DP backtrack reached an unreachable node")
        a, b = steps[s_idx]
        i, j = i - a, j - b
        path.append((i, j))
    path = np.array(path[::-1], dtype=float)
    return np.column_stack((path[:, 0] / (m - 1), path[:, 1] / (mg - 1)))


def dp_solve(q1, q2, cfg=None):
    """Run the DP and return ``(gamma, cost)``.

    ``gamma`` is sampled on the grid of ``q1`` and ``cost`` is the optimal
    squared distance on the lattice.
    """
    cfg = cfg or DpConfig()
    q1 = as_function(q1, "q1")
    q2 = as_function(q2, "q2")
    check_same_length(q1, q2)
    n = q1.size
    m = cfg.grid_size or n
    lattice = uniform_grid(m)
    q1l = q1 if m == n else interp_uniform(q1, lattice)
    steps = tuple(cfg.neighborhood)
    cost, back = _solve(q1l, q2, steps, cfg.refine)
    path = _backtrack(back, steps)
    gamma = np.interp(uniform_grid(n), path[:, 0], path[:, 1])
    gamma[0], gamma[-1] = 0.0, 1.0
    return gamma, float(cost[-1, -1])


def dp_align(q1, q2, cfg=None):
    """Warp ``gamma_DP`` minimizing ``||q1 - (q2, gamma)||`` over lattice paths."""
    return dp_solve(q1, q2, cfg)[0]


def dp_distance(q1, q2, cfg=None):
    """Elastic distance ``||q1 - (q2, gamma_DP)||`` at the DP optimum."""
    return float(np.sqrt(max(dp_solve(q1, q2, cfg)[1], 0.0)))
