"""Random-circuit pseudo-threshold experiments.

For each circuit depth a fixed sample of random logical circuits over
{X_L, Z_L, H_L} is drawn once and reused for every error rate and every
syndrome gap.  Encoded runs are compared against a single bare qubit
running the same gates, and the crossing of ``delta_L / p_ps`` (quadratic
fit) with ``delta_s`` (linear fit) gives the threshold.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bacon_shor import DEFAULT_ORDER, AcceptanceRule, LogicalGate, assemble_encoded_circuit
from .densmat import MIN_ACCEPTANCE, check_error_rate, depolarize_kernel, gate_kernel, run_encoded_batch
from .pauli import Gate
from .stabsim import estimate

log = logging.getLogger(__name__)

DEFAULT_DEPTHS = (1, 2, 5, 10, 20, 30, 40, 48, 60, 84, 100)
GATE_SET = (LogicalGate.X_L, LogicalGate.Z_L, LogicalGate.H_L)
ENGINES = ("densmat", "stab")
AVERAGING = ("ratio_of_means", "mean_of_ratios")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    depths: list = field(default_factory=lambda: list(DEFAULT_DEPTHS))
    gaps: list = field(default_factory=lambda: [1])
    p_grid: Optional[list] = None
    n_circuits: int = 200
    seed: int = 0
    after_prep_round: bool = False
    final_parity_check: bool = True
    engine: str = "densmat"
    n_trajectories: int = 20000
    workers: Optional[int] = None
    averaging: str = "ratio_of_means"
    measurement_order: list = field(default_factory=lambda: list(DEFAULT_ORDER))
    pilot_grid: list = field(default_factory=lambda: [1e-3, 3e-3, 1e-2, 3e-2, 1e-1])
    pilot_circuits: int = 40
    grid_points: int = 12
    window_factor: float = 1.5
    refine_points: int = 8
    grid_floor: float = 1e-4
    grid_cap: float = 0.15

    def __post_init__(self):
        if self.workers is None:
            self.workers = os.cpu_count() or 1
        self.validate()

    def validate(self) -> None:
        for key in ("depths", "gaps"):
            vals = getattr(self, key)
            if not isinstance(vals, (list, tuple)) or not vals:
                raise ConfigError(key, "must be a non-empty list")
            if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in vals):
                raise ConfigError(key, "entries must be integers >= 1")
        for key in ("p_grid", "pilot_grid"):
            grid = getattr(self, key)
            if grid is None and key == "p_grid":
                continue
            if not isinstance(grid, (list, tuple)) or len(grid) < 2:
                raise ConfigError(key, "must be a list of at least two error rates")
            arr = np.asarray(grid, dtype=float)
            if np.any(np.diff(arr) <= 0):
                raise ConfigError(key, "must be strictly increasing")
            if arr[0] < 0 or arr[-1] > 0.75:
                raise ConfigError(key, "must lie within [0, 3/4]")
        if not isinstance(self.n_circuits, int) or self.n_circuits < 2:
            raise ConfigError("n_circuits", "must be an integer >= 2")
        if not isinstance(self.pilot_circuits, int) or self.pilot_circuits < 1:
            raise ConfigError("pilot_circuits", "must be an integer >= 1")
        if not isinstance(self.grid_points, int) or self.grid_points < 4:
            raise ConfigError("grid_points", "must be an integer >= 4")
        if not isinstance(self.refine_points, int) or self.refine_points < 0:
            raise ConfigError("refine_points", "must be an integer >= 0")
        if not isinstance(self.window_factor, (int, float)) or not self.window_factor > 1:
            raise ConfigError("window_factor", "must be a number > 1")
        if not isinstance(self.n_trajectories, int) or self.n_trajectories < 1:
            raise ConfigError("n_trajectories", "must be an integer >= 1")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "must be an integer >= 1")
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer")
        if self.engine not in ENGINES:
            raise ConfigError("engine", f"must be one of {ENGINES}")
        if self.averaging not in AVERAGING:
            raise ConfigError("averaging", f"must be one of {AVERAGING}")
        if sorted(self.measurement_order) != sorted(DEFAULT_ORDER):
            raise ConfigError("measurement_order", f"must be a permutation of {list(DEFAULT_ORDER)}")
        if not 0 < self.grid_floor < self.grid_cap <= 0.75:
            raise ConfigError("grid_cap", "need 0 < grid_floor < grid_cap <= 3/4")
        for key in ("after_prep_round", "final_parity_check"):
            if not isinstance(getattr(self, key), bool):
                raise ConfigError(key, "must be a boolean")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepPoint:
    depth: int
    gap: int
    p: float
    mean_delta_L: float
    mean_p_ps: float
    mean_delta_s: float
    weighted: float
    n_circuits: int


@dataclass
class ThresholdEstimate:
    depth: int
    gap: int
    threshold: float
    q: tuple  # (q2, q1, q0)
    l: tuple  # (l1, l0)
    residual_q: float
    residual_l: float
    roots: tuple = ()
    status: str = "ok"
    ps_at_threshold: float = math.nan


# ------------------------------------------------------------ primitives


def circuit_rng(seed: int, depth: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(depth), int(index)]))


def sample_logical_circuit(depth: int, rng: np.random.Generator) -> list[LogicalGate]:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return [GATE_SET[i] for i in rng.integers(0, 3, depth)]


def true_output(logical_seq: Sequence[LogicalGate]) -> tuple[str, int]:
    """Measurement basis and deterministic outcome bit of the noiseless circuit.

    Tracks the signed single-qubit stabilizer of the state, starting at +Z.
    """
    axis, sign = "Z", 1
    for g in logical_seq:
        g = LogicalGate(g)
        if g is LogicalGate.X_L and axis == "Z":
            sign = -sign
        elif g is LogicalGate.Z_L and axis == "X":
            sign = -sign
        elif g is LogicalGate.H_L:
            axis = "X" if axis == "Z" else "Z"
    return axis, 0 if sign == 1 else 1


def point_mass(bit: int) -> np.ndarray:
    out = np.zeros(2)
    out[bit] = 1.0
    return out


def tvd(p_a: Sequence[float], p_b: Sequence[float]) -> float:
    a, b = np.asarray(p_a, dtype=float), np.asarray(p_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("distributions must have the same support")
    for d in (a, b):
        if np.any(d < -1e-12) or abs(d.sum() - 1.0) > 1e-9:
            raise ValueError(f"not a normalized distribution: {d}")
    return float(0.5 * np.abs(a - b).sum())


_BARE_GATES = {LogicalGate.X_L: "X", LogicalGate.Z_L: "Z", LogicalGate.H_L: "H"}


def run_bare(logical_seq: Sequence[LogicalGate], ps, true: Optional[tuple[str, int]] = None):
    """TVD between a noisy bare qubit and the noiseless output.

    Every gate, including the basis-change Hadamard before an X readout, is
    followed by one depolarizing channel.  Accepts a scalar or an array of
    error rates.
    """
    scalar = np.ndim(ps) == 0
    ps = np.atleast_1d(check_error_rate(ps))
    basis, bit = true if true is not None else true_output(logical_seq)
    rho = np.zeros((ps.size, 2, 2))
    rho[:, 0, 0] = 1.0
    kinds = [_BARE_GATES[LogicalGate(g)] for g in logical_seq]
    if basis == "X":
        kinds.append("H")
    for k in kinds:
        rho = gate_kernel(rho, 1, Gate(k, (0,)))
        rho = depolarize_kernel(rho, 1, 0, ps, inplace=True)
    probs = np.stack([rho[:, 0, 0], rho[:, 1, 1]], axis=1)
    delta = 0.5 * np.abs(probs - point_mass(bit)[None, :]).sum(axis=1)
    return float(delta[0]) if scalar else delta


# ---------------------------------------------------------------- sweeps


@dataclass
class CircuitResult:
    delta_L: np.ndarray
    p_ps: np.ndarray
    delta_s: np.ndarray


def evaluate_circuit(
    logical_seq: Sequence[LogicalGate],
    gap: int,
    ps: np.ndarray,
    config: ExperimentConfig,
    stream_key: tuple = (),
) -> CircuitResult:
    basis, bit = true_output(logical_seq)
    truth = point_mass(bit)
    circ = assemble_encoded_circuit(
        logical_seq,
        gap,
        after_prep_round=config.after_prep_round,
        basis=basis,
        final_parity_check=config.final_parity_check,
        order=config.measurement_order,
    )
    delta_s = run_bare(logical_seq, ps, (basis, bit))
    if config.engine == "densmat":
        res = run_encoded_batch(circ, ps, AcceptanceRule(), truth)
        return CircuitResult(res.delta_L, res.p_ps, delta_s)
    delta_L = np.empty(ps.size)
    p_ps = np.empty(ps.size)
    for i, p in enumerate(ps):
        seed = int(np.random.SeedSequence([config.seed, *stream_key, i]).generate_state(1)[0])
        tally = estimate(circ, float(p), config.n_trajectories, seed)
        p_ps[i] = tally.p_ps
        delta_L[i] = np.nan if tally.degenerate else 0.5 * np.abs(tally.logical - truth).sum()
    return CircuitResult(delta_L, p_ps, delta_s)


def _evaluate_task(args) -> CircuitResult:
    seq, gap, ps, config, key = args
    return evaluate_circuit(seq, gap, ps, config, key)


def circuit_sample(config: ExperimentConfig, depth: int, n: Optional[int] = None) -> list[list[LogicalGate]]:
    n = config.n_circuits if n is None else n
    return [sample_logical_circuit(depth, circuit_rng(config.seed, depth, i)) for i in range(n)]


def _average(results: list[CircuitResult], averaging: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    dl = np.array([r.delta_L for r in results])
    pp = np.array([r.p_ps for r in results])
    ds = np.array([r.delta_s for r in results])
    mean_dl = dl.mean(axis=0)
    mean_pp = pp.mean(axis=0)
    mean_ds = ds.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if averaging == "ratio_of_means":
            weighted = mean_dl / mean_pp
        else:
            weighted = (dl / pp).mean(axis=0)
    return mean_dl, mean_pp, mean_ds, weighted


def _run_many(tasks: list, workers: int) -> list[CircuitResult]:
    if workers <= 1 or len(tasks) < 2:
        return [_evaluate_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def pilot_crossing(ps: Sequence[float], weighted: Sequence[float], delta_s: Sequence[float]) -> float:
    """Coarse threshold guess: first p where ``weighted`` overtakes ``delta_s``.

    Both curves are roughly power laws in p, so log(weighted / delta_s) is
    interpolated linearly in log p.  Falls back to the grid ends when the
    encoded curve is better (or worse) everywhere.
    """
    ps = np.asarray(ps, dtype=float)
    w = np.asarray(weighted, dtype=float)
    s = np.asarray(delta_s, dtype=float)
    keep = (ps > 0) & (s > 0)
    ps, w, s = ps[keep], w[keep], s[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log(w) - np.log(s)
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    if ratio[0] > 0:
        return float(ps[0])
    for i in range(1, len(ps)):
        if ratio[i] > 0:
            a, b = ratio[i - 1], ratio[i]
            la, lb = math.log(ps[i - 1]), math.log(ps[i])
            frac = 1.0 if not np.isfinite(b) else -a / (b - a)
            return float(math.exp(la + frac * (lb - la)))
    return float(ps[-1])


def adaptive_grid(p_hat: float, config: ExperimentConfig, factor: Optional[float] = None, n: Optional[int] = None) -> np.ndarray:
    """Geometric grid over [p_hat / factor, p_hat * factor], clipped to the floor and cap."""
    factor = config.window_factor if factor is None else factor
    n = config.grid_points if n is None else n
    lo = max(config.grid_floor, p_hat / factor)
    hi = min(config.grid_cap, p_hat * factor)
    if hi <= lo * 1.01:
        if lo == config.grid_floor:
            hi = min(config.grid_cap, lo * factor**2)
        else:
            lo = max(config.grid_floor, hi / factor**2)
    return np.geomspace(lo, hi, n)


def _pilot(config: ExperimentConfig, depth: int, gap: int, circuits: list, ps: np.ndarray, stage: int) -> float:
    sub = circuits[: config.pilot_circuits]
    tasks = [(seq, gap, ps, config, (depth, gap, stage, i)) for i, seq in enumerate(sub)]
    _, _, mean_ds, weighted = _average(_run_many(tasks, config.workers), config.averaging)
    return pilot_crossing(ps, weighted, mean_ds)


def sweep_depth_gap(
    config: ExperimentConfig,
    depth: int,
    gap: int,
    circuits: Optional[list] = None,
) -> tuple[list[SweepPoint], dict]:
    """All sweep points for one (depth, gap) plus grid metadata."""
    circuits = circuit_sample(config, depth) if circuits is None else circuits
    meta: dict = {"depth": depth, "gap": gap}
    if config.p_grid is not None:
        ps = np.asarray(config.p_grid, dtype=float)
        meta["grid"] = "fixed"
    else:
        # coarse scan, then an optional refinement over [p/3, 3p]
        p_hat = _pilot(config, depth, gap, circuits, np.asarray(config.pilot_grid, dtype=float), 1)
        meta["pilot_estimate"] = p_hat
        if config.refine_points:
            p_hat = _pilot(config, depth, gap, circuits, adaptive_grid(p_hat, config, 3.0, config.refine_points), 2)
            meta["refined_estimate"] = p_hat
        ps = adaptive_grid(p_hat, config)
        meta["grid"] = "adaptive"
    tasks = [(seq, gap, ps, config, (depth, gap, 0, i)) for i, seq in enumerate(circuits)]
    try:
        results = _run_many(tasks, config.workers)
    except Exception as exc:
        raise RuntimeError(f"engine failure at depth={depth} gap={gap}: {exc}") from exc
    mean_dl, mean_pp, mean_ds, weighted = _average(results, config.averaging)
    points = [
        SweepPoint(depth, gap, float(p), float(a), float(b), float(c), float(w), len(circuits))
        for p, a, b, c, w in zip(ps, mean_dl, mean_pp, mean_ds, weighted)
    ]
    return points, meta


def sweep(
    config: ExperimentConfig,
    progress: Optional[Callable[[int, int], None]] = None,
) -> tuple[list[SweepPoint], list[dict]]:
    points: list[SweepPoint] = []
    metas = []
    for depth in config.depths:
        circuits = circuit_sample(config, depth)
        for gap in config.gaps:
            pts, meta = sweep_depth_gap(config, depth, gap, circuits)
            points += pts
            metas.append(meta)
            if progress is not None:
                progress(depth, gap)
    return points, metas


# ------------------------------------------------------------------ fits


def _rms(resid: np.ndarray) -> float:
    return float(np.sqrt(np.mean(resid**2))) if resid.size else math.nan


def fit_threshold(points: Sequence[SweepPoint]) -> ThresholdEstimate:
    """Intersect a quadratic fit of ``weighted`` with a linear fit of ``delta_s``."""
    pts = [pt for pt in points if np.isfinite(pt.weighted) and np.isfinite(pt.mean_delta_s)]
    if len(pts) < 4:
        raise ValueError("need at least 4 finite sweep points to fit")
    depth, gap = pts[0].depth, pts[0].gap
    p = np.array([pt.p for pt in pts])
    y = np.array([pt.weighted for pt in pts])
    s = np.array([pt.mean_delta_s for pt in pts])
    q = np.polyfit(p, y, 2)
    lin = np.polyfit(p, s, 1)
    res_q = _rms(np.polyval(q, p) - y)
    res_l = _rms(np.polyval(lin, p) - s)
    span = float(y.max() - y.min())
    if span > 0 and res_q > 0.1 * span:
        log.warning("quadratic fit residual %.3g exceeds 10%% of range at depth=%d gap=%d", res_q, depth, gap)
    diff = np.array([q[0], q[1] - lin[0], q[2] - lin[1]])
    roots = _real_roots(diff)
    lo, hi = p.min(), p.max()
    inside = sorted(r for r in roots if r > 0 and lo - 1e-12 <= r <= hi + 1e-12)
    est = ThresholdEstimate(
        depth,
        gap,
        inside[0] if inside else math.nan,
        tuple(float(c) for c in q),
        tuple(float(c) for c in lin),
        res_q,
        res_l,
        tuple(float(r) for r in roots),
        "ok" if inside else "no_crossing",
    )
    if inside:
        est.ps_at_threshold = float(np.interp(est.threshold, p, [pt.mean_p_ps for pt in pts]))
    return est


def _real_roots(coeffs: np.ndarray) -> list[float]:
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size < 2:
        return []
    roots = np.roots(c)
    scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    return sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-9 * scale)


def fit_all(points: Sequence[SweepPoint]) -> list[ThresholdEstimate]:
    groups: dict = {}
    for pt in points:
        groups.setdefault((pt.depth, pt.gap), []).append(pt)
    return [fit_threshold(pts) for pts in groups.values()]
