"""Self-contained validation suite run by ``baconshor validate``.

Every check returns a :class:`CheckResult`; none of them needs stored
reference numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .bacon_shor import (
    STABILIZERS,
    LogicalGate,
    assemble_encoded_circuit,
    classify_residual,
    gauge_center,
    gauge_group,
    prep_fault_residuals,
)
from .densmat import DensityState, depolarize_kernel, logical_zero, run_encoded, run_encoded_batch
from .experiment import GATE_SET, point_mass, true_output
from .pauli import Gate, PauliString, commutes, conjugate_by_gate, multiply, product_phase
from .sitecount import encoded_success, sitecount_threshold, unencoded_success
from .stabsim import estimate

GAUGE_TOL = 1e-10
MERGE_TOL = 1e-10
SIGMA = 4.0
GRID_STEP = 1e-6
GRID_TOL = 2e-6


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ValidateOptions:
    seed: int = 0
    n_trajectories: int = 1000
    n_configs: int = 20
    n_threshold_pairs: int = 10


# ------------------------------------------------------------------ checks


def check_pauli_algebra(opts: ValidateOptions) -> tuple[bool, str]:
    for a, b, c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
        _, letters = product_phase(PauliString(a), PauliString(b))
        if letters != c:
            return False, f"{a}{b} gave {letters}"
    if multiply(PauliString("XX"), PauliString("ZZ")) != PauliString("YY", -1):
        return False, "XX*ZZ != -YY"
    images = {
        ("H", "X"): "+Z",
        ("H", "Z"): "+X",
        ("H", "Y"): "-Y",
    }
    for (kind, letter), want in images.items():
        got = str(conjugate_by_gate(PauliString(letter), Gate(kind, (0,))))
        if got != want:
            return False, f"{kind} {letter} {kind} = {got}, expected {want}"
    cnot = Gate("CNOT", (0, 1))
    for src, want in (("XI", "+XX"), ("IX", "+IX"), ("ZI", "+ZI"), ("IZ", "+ZZ")):
        got = str(conjugate_by_gate(PauliString(src), cnot))
        if got != want:
            return False, f"CNOT maps {src} to {got}, expected {want}"
    rng = np.random.default_rng(opts.seed)
    gates = [Gate("H", (q,)) for q in range(3)] + [Gate("CNOT", (0, 1)), Gate("CNOT", (2, 0))]
    for _ in range(50):
        p = PauliString("".join(rng.choice(list("IXYZ"), 3)))
        q = PauliString("".join(rng.choice(list("IXYZ"), 3)))
        before = commutes(p, q)
        for g in rng.choice(len(gates), 4):
            p, q = conjugate_by_gate(p, gates[g]), conjugate_by_gate(q, gates[g])
        if commutes(p, q) != before:
            return False, "conjugation changed a commutation relation"
    return True, "products, H/CNOT images and commutation preservation"


def check_gauge_center(opts: ValidateOptions) -> tuple[bool, str]:
    center = gauge_center()
    want = sorted(s.letters for s in STABILIZERS)
    return center == want, f"center = {center}"


def check_distance_two(opts: ValidateOptions) -> tuple[bool, str]:
    missed = [
        f"{letter}{q}"
        for q in range(4)
        for letter in "XYZ"
        if classify_residual(PauliString.single(4, q, letter)) != "detectable"
    ]
    return not missed, "all 12 weight-1 Paulis detected" if not missed else f"undetected: {missed}"


def gauge_reduced_weight(p: PauliString) -> int:
    """Smallest weight of ``p`` times any gauge-group element."""
    return min(PauliString(product_phase(p, PauliString(g))[1]).weight for g in gauge_group())


def check_prep_faults(opts: ValidateOptions) -> tuple[bool, str]:
    bad = []
    cases = prep_fault_residuals()
    for qubit, letter, res in cases:
        if gauge_reduced_weight(res) > 1 or classify_residual(res) == "logical":
            bad.append(f"{letter} on {qubit} -> {res}")
    if len(cases) != 18:
        return False, f"expected 18 fault cases, got {len(cases)}"
    return not bad, f"{len(cases)} cases benign" if not bad else f"harmful: {bad}"


def _random_sequence(rng: np.random.Generator, depth: int) -> list[LogicalGate]:
    return [GATE_SET[i] for i in rng.integers(0, 3, depth)]


def check_gauge_invariance(opts: ValidateOptions) -> tuple[bool, str]:
    rng = np.random.default_rng([opts.seed, 1])
    worst = 0.0
    for _ in range(5):
        seq = _random_sequence(rng, int(rng.integers(1, 5)))
        basis, bit = true_output(seq)
        circ = assemble_encoded_circuit(seq, int(rng.integers(1, 3)), basis=basis, include_prep=False)
        p = float(rng.uniform(0.001, 0.05))
        a = run_encoded(circ, p, initial=logical_zero(), true_dist=point_mass(bit))
        b = run_encoded(circ, p, initial=logical_zero(gauge_flipped=True), true_dist=point_mass(bit))
        worst = max(worst, abs(a.p_ps - b.p_ps), float(np.abs(a.logical - b.logical).max()))
    return worst <= GAUGE_TOL, f"max deviation {worst:.3g}"


def check_full_depolarizing(opts: ValidateOptions) -> tuple[bool, str]:
    rng = np.random.default_rng([opts.seed, 2])
    n = 5
    vecs = rng.normal(size=(3, 2**n))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    weights = rng.dirichlet(np.ones(3))
    rho = np.einsum("k,ki,kj->ij", weights, vecs, vecs)[None]
    if not DensityState(n, rho[0]).is_physical():
        return False, "random test state is not physical"
    for q in range(n):
        rho = depolarize_kernel(rho, n, q, np.array([0.75]))
    err = float(np.abs(rho[0] - np.eye(2**n) / 2**n).max())
    return err <= 1e-12, f"max deviation from I/32 {err:.3g}"


def check_noiseless(opts: ValidateOptions) -> tuple[bool, str]:
    rng = np.random.default_rng([opts.seed, 3])
    for _ in range(5):
        seq = _random_sequence(rng, int(rng.integers(1, 8)))
        basis, bit = true_output(seq)
        circ = assemble_encoded_circuit(seq, int(rng.integers(1, 4)), basis=basis)
        res = run_encoded(circ, 0.0, true_dist=point_mass(bit))
        if abs(res.p_ps - 1) > 1e-12 or res.delta_L > 1e-12:
            return False, f"p_ps={res.p_ps}, delta_L={res.delta_L} for {[str(g) for g in seq]}"
    return True, "delta_L = 0 and p_ps = 1 on 5 random circuits"


def check_merge_vs_exhaustive(opts: ValidateOptions) -> tuple[bool, str]:
    rng = np.random.default_rng([opts.seed, 4])
    worst = 0.0
    for _ in range(3):
        seq = _random_sequence(rng, 2)
        basis, _ = true_output(seq)
        circ = assemble_encoded_circuit(seq, 1, basis=basis)
        ps = rng.uniform(0.001, 0.05, 2)
        a = run_encoded_batch(circ, ps)
        b = run_encoded_batch(circ, ps, merge=False)
        worst = max(worst, float(np.abs(a.p_ps - b.p_ps).max()), float(np.abs(a.logical - b.logical).max()))
    return worst <= MERGE_TOL, f"max deviation {worst:.3g}"


def _z(hat: float, exact: float, n: int) -> float:
    """Binomial z-score with a half-count continuity correction."""
    se = math.sqrt(max(exact * (1 - exact), 0.0) / n)
    gap = max(abs(hat - exact) - 0.5 / n, 0.0)
    if se == 0:
        return 0.0 if gap == 0 else math.inf
    return gap / se


def check_cross_engine(opts: ValidateOptions) -> tuple[bool, str]:
    rng = np.random.default_rng([opts.seed, 5])
    worst = 0.0
    for k in range(opts.n_configs):
        seq = _random_sequence(rng, int(rng.integers(1, 6)))
        basis, _ = true_output(seq)
        circ = assemble_encoded_circuit(
            seq, int(rng.integers(1, 4)), basis=basis, after_prep_round=bool(rng.integers(2))
        )
        p = float(rng.uniform(0.005, 0.05))
        exact = run_encoded_batch(circ, [p])
        tally = estimate(circ, p, opts.n_trajectories, int(rng.integers(2**31)))
        z_ps = _z(tally.p_ps, float(exact.p_ps[0]), tally.n_total)
        z_l = 0.0 if tally.degenerate else _z(tally.logical[1], float(exact.logical[0, 1]), tally.n_accepted)
        worst = max(worst, z_ps, z_l)
        if worst > SIGMA:
            return False, f"config {k}: z(p_ps)={z_ps:.2f}, z(logical)={z_l:.2f}"
    return True, f"{opts.n_configs} configs, max z {worst:.2f}"


def grid_scan_threshold(T: int, M: int, step: float = GRID_STEP, p_max: float = 0.1) -> float:
    grid = np.arange(1, int(round(p_max / step)) + 1) * step
    wins = np.asarray(encoded_success(T, M, grid)) >= np.asarray(unencoded_success(T, grid))
    if wins.all():
        return float(p_max)
    first = int(np.argmin(wins))
    return float(grid[first - 1]) if first else 0.0


def check_bisection(opts: ValidateOptions) -> tuple[bool, str]:
    rng = np.random.default_rng([opts.seed, 6])
    pairs = [(1, 1)] + [
        (int(t), int(rng.integers(0, t + 1)))
        for t in rng.integers(1, 101, opts.n_threshold_pairs - 1)
    ]
    worst = 0.0
    for T, M in pairs:
        worst = max(worst, abs(sitecount_threshold(T, M) - grid_scan_threshold(T, M)))
    return worst <= GRID_TOL, f"{len(pairs)} pairs, max difference {worst:.3g}"


CHECKS: dict[str, Callable[[ValidateOptions], tuple[bool, str]]] = {
    "pauli_algebra": check_pauli_algebra,
    "gauge_center": check_gauge_center,
    "distance_two": check_distance_two,
    "prep_faults": check_prep_faults,
    "gauge_invariance": check_gauge_invariance,
    "full_depolarizing": check_full_depolarizing,
    "noiseless_end_to_end": check_noiseless,
    "merge_vs_exhaustive": check_merge_vs_exhaustive,
    "cross_engine": check_cross_engine,
    "bisection_vs_grid": check_bisection,
}


def run_checks(opts: ValidateOptions = ValidateOptions(), names=None) -> list[CheckResult]:
    out = []
    for name in names or CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = CHECKS[name](opts)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
