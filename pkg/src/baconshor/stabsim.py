"""Monte-Carlo stabilizer simulation of the encoded circuits.

Two samplers share the same noise semantics (at each noise site, with
probability p apply X, Y or Z uniformly):

* :func:`run_trajectory` follows one trajectory on an Aaronson-Gottesman
  tableau and stops at the first rejected syndrome round.
* :func:`sample_frames` propagates Pauli frames for many shots at once
  against a single noiseless reference run; :func:`estimate` uses it by
  default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .bacon_shor import AcceptanceRule, decode_z_readout
from .densmat import NoiseModel, check_error_rate
from .pauli import Gate, Measure, NoiseSite, PhysicalCircuit, Prep, Readout, RoundCheck

FRAME_CHUNK = 1 << 14


class NonCliffordError(ValueError):
    pass


class FrameMismatchError(AssertionError):
    """The propagated error frame disagreed with a tableau measurement."""


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


class Tableau:
    """Stabilizer/destabilizer tableau with sign bits (CHP layout).

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers, row ``2n``
    is scratch space for deterministic measurements.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros(2 * n + 1, dtype=np.uint8)
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1

    def copy(self) -> Tableau:
        t = Tableau.__new__(Tableau)
        t.n, t.x, t.z, t.r = self.n, self.x.copy(), self.z.copy(), self.r.copy()
        return t

    def stabilizers(self) -> list[str]:
        out = []
        for i in range(self.n, 2 * self.n):
            letters = "".join("IXZY"[xb + 2 * zb] for xb, zb in zip(self.x[i], self.z[i]))
            out.append(("-" if self.r[i] else "+") + letters)
        return out

    # gates -------------------------------------------------------------
    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def cnot(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def pauli(self, a: int, letter: str) -> None:
        if letter == "X":
            self.r ^= self.z[:, a]
        elif letter == "Z":
            self.r ^= self.x[:, a]
        elif letter == "Y":
            self.r ^= self.x[:, a] ^ self.z[:, a]

    def relabel(self, g: Gate) -> None:
        cols = list(range(self.n))
        for old, new in g.mapping().items():
            cols[new] = old
        self.x = self.x[:, cols]
        self.z = self.z[:, cols]

    def apply(self, g: Gate) -> None:
        if g.kind == "H":
            self.h(g.targets[0])
        elif g.kind == "CNOT":
            self.cnot(*g.targets)
        elif g.kind in ("X", "Y", "Z"):
            self.pauli(g.targets[0], g.kind)
        elif g.kind == "RELABEL":
            self.relabel(g)
        else:
            raise NonCliffordError(f"gate {g.kind} is not supported by the tableau")

    # measurement -------------------------------------------------------
    def _rowsum(self, h: int, i: int) -> None:
        x1, z1 = self.x[i].astype(np.int8), self.z[i].astype(np.int8)
        x2, z2 = self.x[h].astype(np.int8), self.z[h].astype(np.int8)
        g = np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1), np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
        )
        total = 2 * int(self.r[h]) + 2 * int(self.r[i]) + int(g.sum())
        self.r[h] = 0 if total % 4 == 0 else 1
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(
        self, a: int, rng: Optional[np.random.Generator] = None, forced: Optional[int] = None
    ) -> tuple[int, bool]:
        """Measure Z on qubit ``a``; returns ``(bit, was_random)``."""
        n = self.n
        rows = np.nonzero(self.x[n : 2 * n, a])[0]
        if rows.size:
            p = n + int(rows[0])
            for i in range(2 * n):
                if i != p and self.x[i, a]:
                    self._rowsum(i, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            if forced is not None:
                bit = int(forced) & 1
            else:
                bit = int(rng.integers(2)) if rng is not None else 0
            self.r[p] = bit
            return bit, True
        s = 2 * n
        self.x[s] = 0
        self.z[s] = 0
        self.r[s] = 0
        for i in range(n):
            if self.x[i, a]:
                self._rowsum(s, i + n)
        return int(self.r[s]), False

    def reset(self, a: int, basis: str = "Z0") -> None:
        bit, _ = self.measure(a, forced=0)
        if bit:
            self.pauli(a, "X")
        if basis == "Xplus":
            self.h(a)


# ------------------------------------------------------------ trajectories


def _p(noise: Union[NoiseModel, float]) -> float:
    return noise.p if isinstance(noise, NoiseModel) else float(check_error_rate(noise))


class _Frame:
    """Pauli frame carried alongside an ideal tableau for self-checking."""

    def __init__(self, n: int):
        self.x = np.zeros(n, dtype=np.uint8)
        self.z = np.zeros(n, dtype=np.uint8)

    def apply(self, g: Gate) -> None:
        if g.kind == "H":
            (a,) = g.targets
            self.x[a], self.z[a] = self.z[a], self.x[a]
        elif g.kind == "CNOT":
            a, b = g.targets
            self.x[b] ^= self.x[a]
            self.z[a] ^= self.z[b]
        elif g.kind == "RELABEL":
            nx, nz = self.x.copy(), self.z.copy()
            for old, new in g.mapping().items():
                nx[new], nz[new] = self.x[old], self.z[old]
            self.x, self.z = nx, nz

    def inject(self, q: int, letter: str) -> None:
        self.x[q] ^= letter in "XY"
        self.z[q] ^= letter in "ZY"


def run_trajectory(
    circuit: PhysicalCircuit,
    noise: Union[NoiseModel, float],
    rng: np.random.Generator,
    rule: AcceptanceRule = AcceptanceRule(),
    *,
    self_check: bool = False,
    forced_errors: Optional[dict] = None,
) -> Optional[int]:
    """Sample one noisy run.  Returns the decoded logical bit or None if rejected.

    ``forced_errors`` maps item indices of noise sites to a Pauli letter that
    is applied there unconditionally (in addition to sampled noise).
    """
    p = _p(noise)
    tab = Tableau(circuit.n_qubits)
    ideal = tab.copy() if self_check else None
    frame = _Frame(circuit.n_qubits) if self_check else None
    outcomes: dict[str, int] = {}

    def measure(q: int) -> int:
        bit, _ = tab.measure(q, rng)
        if self_check:
            expect, was_random = ideal.measure(q, forced=bit ^ int(frame.x[q]))
            if not was_random and expect != bit ^ int(frame.x[q]):
                raise FrameMismatchError(f"frame predicts {expect ^ frame.x[q]}, tableau gave {bit}")
        return bit

    for idx, it in enumerate(circuit.items):
        if isinstance(it, Gate):
            tab.apply(it)
            if self_check:
                ideal.apply(it)
                frame.apply(it)
        elif isinstance(it, NoiseSite):
            letters = []
            if p > 0 and rng.random() < p:
                letters.append("XYZ"[int(rng.integers(3))])
            if forced_errors and idx in forced_errors:
                letters.append(forced_errors[idx])
            for letter in letters:
                tab.pauli(it.qubit, letter)
                if self_check:
                    frame.inject(it.qubit, letter)
        elif isinstance(it, Prep):
            tab.reset(it.qubit, it.basis)
            if self_check:
                ideal.reset(it.qubit, it.basis)
                frame.x[it.qubit] = frame.z[it.qubit] = 0
        elif isinstance(it, Measure):
            outcomes[it.label] = measure(it.qubit)
        elif isinstance(it, RoundCheck):
            if not rule.accepts(outcomes):
                return None
            outcomes = {}
        elif isinstance(it, Readout):
            bits = [measure(q) for q in it.qubits]
            return decode_z_readout(bits, it.parity_check)
        else:
            raise NonCliffordError(f"unsupported circuit item {it!r}")
    raise ValueError("circuit has no readout")


# ------------------------------------------------------------------ tallies


@dataclass
class TrajectoryTally:
    n_total: int = 0
    n_accepted: int = 0
    counts: list = field(default_factory=lambda: [0, 0])

    def __post_init__(self):
        if self.n_accepted > self.n_total or sum(self.counts) != self.n_accepted:
            raise ValueError(f"inconsistent tally {self}")

    def __add__(self, other: TrajectoryTally) -> TrajectoryTally:
        return TrajectoryTally(
            self.n_total + other.n_total,
            self.n_accepted + other.n_accepted,
            [a + b for a, b in zip(self.counts, other.counts)],
        )

    def record(self, outcome: Optional[int]) -> None:
        self.n_total += 1
        if outcome is not None:
            self.n_accepted += 1
            self.counts[outcome] += 1

    @property
    def degenerate(self) -> bool:
        return self.n_accepted == 0

    @property
    def p_ps(self) -> float:
        return self.n_accepted / self.n_total if self.n_total else math.nan

    @property
    def se_p_ps(self) -> float:
        q = self.p_ps
        return math.sqrt(q * (1 - q) / self.n_total) if self.n_total else math.nan

    @property
    def logical(self) -> np.ndarray:
        if self.degenerate:
            return np.full(2, np.nan)
        return np.asarray(self.counts, dtype=float) / self.n_accepted

    @property
    def se_logical(self) -> float:
        if self.degenerate:
            return math.nan
        q = self.counts[1] / self.n_accepted
        return math.sqrt(q * (1 - q) / self.n_accepted)


# ------------------------------------------------------------ frame sampler


def reference_outcomes(circuit: PhysicalCircuit) -> list[int]:
    """Noiseless outcome of every measured bit, random outcomes fixed to 0."""
    tab = Tableau(circuit.n_qubits)
    out = []
    for it in circuit.items:
        if isinstance(it, Gate):
            tab.apply(it)
        elif isinstance(it, Prep):
            tab.reset(it.qubit, it.basis)
        elif isinstance(it, Measure):
            out.append(tab.measure(it.qubit, forced=0)[0])
        elif isinstance(it, Readout):
            out.extend(tab.measure(q, forced=0)[0] for q in it.qubits)
            break
    return out


def sample_frames(
    circuit: PhysicalCircuit,
    p: float,
    shots: int,
    rng: np.random.Generator,
    rule: AcceptanceRule = AcceptanceRule(),
    reference: Optional[list[int]] = None,
) -> np.ndarray:
    """Logical outcome per shot (-1 where rejected)."""
    n = circuit.n_qubits
    ref = reference_outcomes(circuit) if reference is None else reference
    fx = np.zeros((shots, n), dtype=np.uint8)
    fz = np.zeros((shots, n), dtype=np.uint8)
    alive = np.ones(shots, dtype=bool)
    outcomes: dict[str, np.ndarray] = {}
    k = 0
    for it in circuit.items:
        if isinstance(it, Gate):
            if it.kind == "H":
                (a,) = it.targets
                fx[:, a], fz[:, a] = fz[:, a].copy(), fx[:, a].copy()
            elif it.kind == "CNOT":
                a, b = it.targets
                fx[:, b] ^= fx[:, a]
                fz[:, a] ^= fz[:, b]
            elif it.kind == "RELABEL":
                cols = list(range(n))
                for old, new in it.mapping().items():
                    cols[new] = old
                fx, fz = fx[:, cols], fz[:, cols]
            elif it.kind not in ("X", "Y", "Z"):
                raise NonCliffordError(it.kind)
        elif isinstance(it, NoiseSite):
            hit = rng.random(shots) < p
            which = rng.integers(1, 4, shots)
            fx[:, it.qubit] ^= (hit & (which != 3)).astype(np.uint8)
            fz[:, it.qubit] ^= (hit & (which != 1)).astype(np.uint8)
        elif isinstance(it, Prep):
            rand = rng.integers(0, 2, shots, dtype=np.uint8)
            if it.basis == "Z0":
                fx[:, it.qubit], fz[:, it.qubit] = 0, rand
            else:
                fx[:, it.qubit], fz[:, it.qubit] = rand, 0
        elif isinstance(it, Measure):
            outcomes[it.label] = ref[k] ^ fx[:, it.qubit]
            k += 1
            fz[:, it.qubit] ^= rng.integers(0, 2, shots, dtype=np.uint8)
        elif isinstance(it, RoundCheck):
            for pair in rule.pairs:
                par = np.zeros(shots, dtype=np.uint8)
                for lbl in pair:
                    par ^= outcomes.get(lbl, np.zeros(shots, dtype=np.uint8))
                alive &= par == 0
            outcomes = {}
        elif isinstance(it, Readout):
            bits = np.stack([ref[k + j] ^ fx[:, q] for j, q in enumerate(it.qubits)], axis=1)
            if it.parity_check:
                alive &= (bits.sum(axis=1) % 2) == 0
            logical = (bits[:, 0] ^ bits[:, 1]).astype(np.int64)
            return np.where(alive, logical, -1)
    raise ValueError("circuit has no readout")


def estimate(
    circuit: PhysicalCircuit,
    noise: Union[NoiseModel, float],
    n_trajectories: int,
    seed: int,
    rule: AcceptanceRule = AcceptanceRule(),
    *,
    method: str = "frame",
) -> TrajectoryTally:
    """Aggregate ``n_trajectories`` independent runs into a tally.

    ``method="tableau"`` loops :func:`run_trajectory` with one stream per
    trajectory index; ``"frame"`` samples fixed-size chunks, one stream per
    chunk index.  Both are reproducible from ``seed`` alone.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    p = _p(noise)
    tally = TrajectoryTally()
    if method == "tableau":
        for i in range(n_trajectories):
            tally.record(run_trajectory(circuit, p, _stream(seed, i), rule))
        return tally
    if method != "frame":
        raise ValueError(f"unknown method {method!r}")
    ref = reference_outcomes(circuit)
    for chunk, start in enumerate(range(0, n_trajectories, FRAME_CHUNK)):
        shots = min(FRAME_CHUNK, n_trajectories - start)
        res = sample_frames(circuit, p, shots, _stream(seed, chunk), rule, ref)
        acc = res >= 0
        tally = tally + TrajectoryTally(
            shots, int(acc.sum()), [int((res == 0).sum()), int((res == 1).sum())]
        )
    return tally
