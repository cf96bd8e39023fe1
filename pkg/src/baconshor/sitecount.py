"""Site-counting bounds for encoded random circuits.

A depth-``T`` circuit has on average ``8T/3`` physical fault locations
(2, 2 and 4 for X_L, Z_L, H_L).  With ``M`` syndrome measurements those
locations are spread over ``M + 1`` blocks of ``N = (8/3) T / (M + 1)``.
The preparation block adds ``N_A = 6`` locations and every measurement
block ``N_B = 18``.  An undetected logical failure needs two faults inside
one block.

The reported "gates between measurements" for ``M >= 1`` measurements is
``T / M``; candidate gaps are the divisors of ``T``.  (The alternative
reading ``T / (M + 1)`` reproduces far fewer of the published optimal gaps.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_A = 6
N_B = 18
SITES_PER_GATE = 8.0 / 3.0
P_MAX = 0.1
SCAN_STEP = 1e-4
TOL = 1e-7
COMPARISONS = ("conditional", "raw")


@dataclass(frozen=True)
class SiteCountParams:
    T: int
    M: int
    p: float

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if np.any(np.asarray(self.p) < 0) or np.any(np.asarray(self.p) > 1):
            raise ValueError("p must lie in [0, 1]")

    @property
    def N(self) -> float:
        return block_sites(self.T, self.M)


def block_sites(T: int, M: int) -> float:
    return SITES_PER_GATE * T / (M + 1)


def pairs(x):
    """x (x - 1) / 2, the binomial C(x, 2) extended to real x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("pairs() needs x >= 0")
    out = x * (x - 1) / 2
    return float(out) if out.ndim == 0 else out


def _factors(T: int, M: int, p):
    N = block_sites(T, M)
    p = np.asarray(p, dtype=float)
    ls = (1 - pairs(N_A + N) * p**2, 1 - pairs(N_B + N) * p**2)
    ps = (1 - (N_A + N) * p, 1 - (N_B + N) * p)
    return ls, ps


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def logical_success_bound(params: SiteCountParams):
    """Lower bound on 1 - p_l, clamped to [0, 1]."""
    (a, b), _ = _factors(params.T, params.M, params.p)
    return _out(np.clip(np.clip(a, 0, 1) * np.clip(b, 0, 1) ** params.M, 0, 1))


def ps_bound(params: SiteCountParams):
    """Lower bound on the post-selection probability, clamped to [0, 1]."""
    _, (a, b) = _factors(params.T, params.M, params.p)
    return _out(np.clip(np.clip(a, 0, 1) * np.clip(b, 0, 1) ** params.M, 0, 1))


def bound_validity(params: SiteCountParams):
    """True where no factor of either bound had to be clamped."""
    (a, b), (c, d) = _factors(params.T, params.M, params.p)
    ok = (a >= 0) & (c >= 0)
    if params.M:
        ok &= (b >= 0) & (d >= 0)
    return _out(ok)


def conditional_success_bound(params: SiteCountParams):
    """Lower bound on P(logical success | accepted): 1 - (1 - LS) / PS."""
    ls = np.asarray(logical_success_bound(params))
    ps = np.asarray(ps_bound(params))
    safe = np.where(ps > 0, ps, 1.0)
    with np.errstate(over="ignore"):
        val = np.where(ps > 0, 1 - (1 - ls) / safe, 0.0)
    return _out(np.clip(val, 0, 1))


def unencoded_success(T: int, p):
    return _out(1 - np.minimum(T * np.asarray(p, dtype=float), 1.0))


def encoded_success(T: int, M: int, p, comparison: str = "conditional"):
    params = SiteCountParams(T, M, p)
    if comparison == "conditional":
        return conditional_success_bound(params)
    if comparison == "raw":
        return logical_success_bound(params)
    raise ValueError(f"comparison must be one of {COMPARISONS}")


def _wins(T: int, M: int, p: float, comparison: str) -> bool:
    return encoded_success(T, M, p, comparison) >= unencoded_success(T, p)


def sitecount_threshold(
    T: int,
    M: int,
    comparison: str = "conditional",
    p_max: float = P_MAX,
    tol: float = TOL,
) -> float:
    """Largest p <= p_max below which the encoded bound never loses.

    Scans in steps of 1e-4 for the first losing point, then bisects.
    Returns 0 if the encoded bound loses already at the first bracket
    and ``p_max`` if it never loses.
    """
    if T < 1 or M < 0:
        raise ValueError("need T >= 1 and M >= 0")
    grid = np.arange(SCAN_STEP, p_max + SCAN_STEP / 2, SCAN_STEP)
    grid = grid[grid <= p_max]
    if grid.size == 0 or grid[-1] < p_max:
        grid = np.append(grid, p_max)
    wins = np.asarray(encoded_success(T, M, grid, comparison)) >= np.asarray(unencoded_success(T, grid))
    if wins.all():
        return float(p_max)
    first = int(np.argmin(wins))
    lo = float(grid[first - 1]) if first > 0 else 0.0
    hi = float(grid[first])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _wins(T, M, mid, comparison):
            lo = mid
        else:
            hi = mid
    if lo == 0.0 and not _wins(T, M, hi, comparison) and hi <= tol:
        return 0.0
    return lo


def measurements_for_gap(T: int, gap: int) -> int:
    if gap < 1 or T % gap:
        raise ValueError(f"gap {gap} does not divide depth {T}")
    return T // gap


def candidate_gaps(T: int) -> list[int]:
    return [g for g in range(1, T + 1) if T % g == 0]


@dataclass(frozen=True)
class GapChoice:
    T: int
    gap: int
    M: int
    threshold: float


def optimal_gap(T: int, comparison: str = "conditional", tol: float = TOL) -> GapChoice:
    """Gap maximizing the site-count threshold; near-ties go to the larger gap."""
    if T < 1:
        raise ValueError("T must be >= 1")
    best = None
    for gap in candidate_gaps(T):
        M = measurements_for_gap(T, gap)
        thr = sitecount_threshold(T, M, comparison, tol=tol)
        if best is None or thr > best.threshold + tol or (abs(thr - best.threshold) <= tol and gap > best.gap):
            best = GapChoice(T, gap, M, thr)
    return best


@dataclass(frozen=True)
class SiteCountRow:
    T: int
    M: int
    gap: int
    threshold: float
    ps_at_threshold: float
    validity: bool


def sitecount_rows(depths, comparison: str = "conditional") -> list[SiteCountRow]:
    rows = []
    for T in depths:
        for gap in candidate_gaps(T):
            M = measurements_for_gap(T, gap)
            thr = sitecount_threshold(T, M, comparison)
            params = SiteCountParams(T, M, thr)
            rows.append(SiteCountRow(T, M, gap, thr, ps_bound(params), bool(bound_validity(params))))
    return rows


def numerics_ps_lower_bound(T: int, n_rounds: int, p: float) -> float:
    """Site-count p_ps bound matched to a simulated schedule with ``n_rounds`` rounds."""
    return ps_bound(SiteCountParams(T, n_rounds, p))
