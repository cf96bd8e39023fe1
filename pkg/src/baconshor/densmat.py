"""Exact density-matrix simulation with depolarizing noise and post-selection.

All gates used here (H, X, Y, Z, CNOT, relabels) and the Pauli noise map
real density matrices to real density matrices, so states are stored as
float64.  Every kernel acts on arrays of shape ``(..., 2**n, 2**n)``; the
leading axes hold a batch of error probabilities and, inside
:func:`run_encoded_batch`, a stack of measurement branches.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .bacon_shor import AcceptanceRule, decode_z_readout
from .pauli import Gate, Measure, NoiseSite, PhysicalCircuit, Prep, Readout, RoundCheck

ATOL = 1e-10
MIN_ACCEPTANCE = 1e-12
_S = 1.0 / np.sqrt(2.0)


class FullyRejectedError(RuntimeError):
    """Post-selection discarded (numerically) all probability mass."""


@dataclass(frozen=True)
class NoiseModel:
    p: float

    def __post_init__(self):
        check_error_rate(self.p)


def check_error_rate(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 0.75):
        raise ValueError(f"error probability must lie in [0, 3/4], got {p!r}")
    return arr


@dataclass
class DensityState:
    """A (possibly sub-normalized) state, or a batch of them.

    ``matrix`` has shape ``(..., 2**n, 2**n)``.
    """

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        d = 2**self.n_qubits
        if self.matrix.shape[-2:] != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {self.n_qubits} qubits")

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> DensityState:
        v = np.asarray(vec, dtype=float)
        n = int(round(np.log2(v.size)))
        return cls(n, np.outer(v, v))

    @classmethod
    def basis(cls, bits: Sequence[int]) -> DensityState:
        n = len(bits)
        idx = int("".join(str(b) for b in bits), 2)
        m = np.zeros((2**n, 2**n))
        m[idx, idx] = 1.0
        return cls(n, m)

    def trace(self) -> np.ndarray:
        return np.trace(self.matrix, axis1=-2, axis2=-1)

    def batched(self, size: int) -> DensityState:
        return DensityState(self.n_qubits, np.broadcast_to(self.matrix, (size,) + self.matrix.shape[-2:]).copy())

    def is_physical(self, atol: float = ATOL) -> bool:
        m = self.matrix
        if not np.allclose(m, np.swapaxes(m, -1, -2), atol=atol):
            return False
        return bool(np.all(np.linalg.eigvalsh(m) > -atol))


def logical_zero(n_qubits: int = 5, gauge_flipped: bool = False) -> DensityState:
    """|0_L> (or the gauge-flipped (|0011>+|1100>)/sqrt2) with the ancilla in |0>."""
    v = np.zeros(16)
    if gauge_flipped:
        v[0b0011] = v[0b1100] = _S
    else:
        v[0b0000] = v[0b1111] = _S
    if n_qubits == 5:
        v = np.kron(v, [1.0, 0.0])
    return DensityState.from_vector(v)


# ------------------------------------------------------------------ kernels


def _split(rho: np.ndarray, n: int, q: int) -> np.ndarray:
    left, right = 2**q, 2 ** (n - q - 1)
    return rho.reshape(rho.shape[:-2] + (left, 2, right, left, 2, right))


@lru_cache(maxsize=None)
def _permutation(kind: str, targets: tuple, perm: tuple, n: int) -> np.ndarray:
    """Index array ``src`` such that ``(U rho U^T)[i, j] = rho[src[i], src[j]]``."""
    d = 2**n
    bits = (np.arange(d)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    out = bits.copy()
    if kind == "X":
        out[:, targets[0]] ^= 1
    elif kind == "CNOT":
        c, t = targets
        out[:, t] ^= out[:, c]
    elif kind == "RELABEL":
        m = Gate(kind, targets, perm).mapping()
        for old, new in m.items():
            out[:, new] = bits[:, old]
    else:  # pragma: no cover
        raise ValueError(kind)
    image = (out << (n - 1 - np.arange(n))[None, :]).sum(axis=1)
    src = np.empty(d, dtype=np.intp)
    src[image] = np.arange(d)
    return src


@lru_cache(maxsize=None)
def _z_signs(q: int, n: int) -> np.ndarray:
    d = 2**n
    bit = (np.arange(d) >> (n - 1 - q)) & 1
    return 1.0 - 2.0 * bit


def _permute(rho: np.ndarray, src: np.ndarray) -> np.ndarray:
    return rho[..., src, :][..., :, src]


def _hadamard(rho: np.ndarray, n: int, q: int) -> np.ndarray:
    v = _split(rho, n, q)
    a, b = v[..., :, 0, :, :, :, :], v[..., :, 1, :, :, :, :]
    v = np.stack(((a + b) * _S, (a - b) * _S), axis=-5)
    a, b = v[..., 0, :], v[..., 1, :]
    v = np.stack(((a + b) * _S, (a - b) * _S), axis=-2)
    return v.reshape(rho.shape)


def gate_kernel(rho: np.ndarray, n: int, g: Gate) -> np.ndarray:
    if any(t >= n for t in g.targets):
        raise ValueError(f"gate {g} out of range")
    if g.kind in ("X", "CNOT", "RELABEL"):
        return _permute(rho, _permutation(g.kind, g.targets, g.perm, n))
    if g.kind == "Z":
        s = _z_signs(g.targets[0], n)
        return rho * s[:, None] * s[None, :]
    if g.kind == "Y":
        s = _z_signs(g.targets[0], n)
        rho = rho * s[:, None] * s[None, :]
        return _permute(rho, _permutation("X", g.targets, (), n))
    if g.kind == "H":
        return _hadamard(rho, n, g.targets[0])
    raise ValueError(f"unsupported gate {g.kind}")


def _coef(p: np.ndarray, extra: int) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(np.shape(p) + (1,) * extra)


def depolarize_kernel(rho: np.ndarray, n: int, q: int, p, inplace: bool = False) -> np.ndarray:
    """(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on qubit ``q``.

    ``p`` may be an array matching the batch axis that sits directly before
    the matrix axes.  Uses the equivalent form
    ``(1 - 4p/3) rho + (2p/3) * (I (x) Tr_q rho)``.
    """
    p = np.asarray(p, dtype=float)
    if not inplace or not rho.flags.c_contiguous:
        rho = np.array(rho, dtype=float, order="C")
    v = _split(rho, n, q)
    traced = v[..., :, 0, :, :, 0, :] + v[..., :, 1, :, :, 1, :]
    traced *= _coef(2.0 * p / 3.0, 4)
    v *= _coef(1.0 - 4.0 * p / 3.0, 6)
    v[..., :, 0, :, :, 0, :] += traced
    v[..., :, 1, :, :, 1, :] += traced
    return rho


def reset_kernel(rho: np.ndarray, n: int, q: int, basis: str) -> np.ndarray:
    """Trace out qubit ``q`` and re-prepare it in |0> or |+>."""
    v = _split(rho, n, q)
    reduced = v[..., :, 0, :, :, 0, :] + v[..., :, 1, :, :, 1, :]
    out = np.zeros_like(v)
    if basis == "Z0":
        out[..., :, 0, :, :, 0, :] = reduced
    elif basis == "Xplus":
        for a in (0, 1):
            for b in (0, 1):
                out[..., :, a, :, :, b, :] = 0.5 * reduced
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return out.reshape(rho.shape)


def project_kernel(rho: np.ndarray, n: int, q: int, bit: int) -> np.ndarray:
    v = _split(rho, n, q)
    out = np.zeros_like(v)
    out[..., :, bit, :, :, bit, :] = v[..., :, bit, :, :, bit, :]
    return out.reshape(rho.shape)


# ------------------------------------------------------- state-level API


def apply_gate(state: DensityState, g: Gate) -> DensityState:
    return DensityState(state.n_qubits, gate_kernel(state.matrix, state.n_qubits, g))


def apply_depolarizing(state: DensityState, qubit: int, noise: Union[NoiseModel, float]) -> DensityState:
    p = noise.p if isinstance(noise, NoiseModel) else check_error_rate(noise)
    return DensityState(state.n_qubits, depolarize_kernel(state.matrix, state.n_qubits, qubit, p))


def apply_reset(state: DensityState, qubit: int, basis: str = "Z0") -> DensityState:
    return DensityState(state.n_qubits, reset_kernel(state.matrix, state.n_qubits, qubit, basis))


def measure_ancilla_branches(state: DensityState, qubit: Optional[int] = None) -> list[tuple[int, DensityState]]:
    """Split on a Z measurement of ``qubit`` (default: the last qubit).

    Returns ``[(+1, rho_0), (-1, rho_1)]`` with unnormalized branch states.
    """
    n = state.n_qubits
    q = n - 1 if qubit is None else qubit
    return [
        (1 - 2 * bit, DensityState(n, project_kernel(state.matrix, n, q, bit)))
        for bit in (0, 1)
    ]


# ----------------------------------------------------------- encoded runs


@dataclass
class EncodedRunResult:
    p_ps: float
    logical: np.ndarray  # conditional distribution over logical bit 0/1
    delta_L: Optional[float] = None


@dataclass
class EncodedBatchResult:
    """Per-error-rate results; rows with p_ps < 1e-12 carry NaN distributions."""

    ps: np.ndarray
    p_ps: np.ndarray
    logical: np.ndarray
    delta_L: Optional[np.ndarray] = None

    @property
    def degenerate(self) -> np.ndarray:
        return self.p_ps < MIN_ACCEPTANCE


def _merge(stack: np.ndarray, keys: list) -> tuple[np.ndarray, list]:
    uniq = sorted(set(keys))
    if len(uniq) == len(keys):
        return stack, keys
    out = np.zeros((len(uniq),) + stack.shape[1:])
    where = {k: i for i, k in enumerate(uniq)}
    for k, s in zip(keys, stack):
        out[where[k]] += s
    return out, uniq


def run_encoded_batch(
    circuit: PhysicalCircuit,
    ps,
    rule: AcceptanceRule = AcceptanceRule(),
    true_dist: Optional[Sequence[float]] = None,
    *,
    merge: bool = True,
    initial: Optional[DensityState] = None,
    check: bool = False,
) -> EncodedBatchResult:
    """Run ``circuit`` exactly for every error rate in ``ps``.

    With ``merge`` (the default) accepted syndrome branches are summed at
    the end of each round; measurement branches inside a round are keyed by
    the running parity of each rule pair so at most ``2**len(rule.pairs)``
    branches are live.  ``merge=False`` keeps the full outcome tree and is
    only meant as a reference for short circuits.  ``check`` asserts trace
    bookkeeping and symmetry after every item.
    """
    ps = np.atleast_1d(check_error_rate(ps))
    n = circuit.n_qubits
    d = 2**n
    batch = ps.size
    if initial is None:
        rho0 = DensityState.basis([0] * n).matrix
    else:
        if initial.n_qubits != n:
            raise ValueError("initial state width does not match circuit")
        rho0 = initial.matrix
    stack = np.broadcast_to(rho0, (1, batch, d, d)).copy()
    n_pairs = len(rule.pairs)
    # merge mode: key = pair parities of the current round
    # exhaustive mode: key = (finished rounds, current round outcomes)
    keys: list = [(0,) * n_pairs] if merge else [((), ())]
    expected = np.einsum("kbii->b", stack)
    readout: Optional[Readout] = None

    for it in circuit.items:
        if isinstance(it, Gate):
            stack = gate_kernel(stack, n, it)
        elif isinstance(it, NoiseSite):
            stack = depolarize_kernel(stack, n, it.qubit, ps, inplace=True)
        elif isinstance(it, Prep):
            stack = reset_kernel(stack, n, it.qubit, it.basis)
        elif isinstance(it, Measure):
            new_stack = np.concatenate(
                [project_kernel(stack, n, it.qubit, 0), project_kernel(stack, n, it.qubit, 1)]
            )
            if merge:
                j = rule.pair_index(it.label)
                new_keys = [
                    k[:j] + (k[j] ^ bit,) + k[j + 1 :] for bit in (0, 1) for k in keys
                ]
                stack, keys = _merge(new_stack, new_keys)
            else:
                stack = new_stack
                keys = [(done, cur + ((it.label, bit),)) for bit in (0, 1) for done, cur in keys]
        elif isinstance(it, RoundCheck):
            if merge:
                ok = [i for i, k in enumerate(keys) if not any(k)]
                stack = stack[ok].sum(axis=0, keepdims=True) if ok else np.zeros((1, batch, d, d))
                keys = [(0,) * n_pairs]
            else:
                ok = [i for i, (_, cur) in enumerate(keys) if rule.accepts(dict(cur))]
                stack = stack[ok] if ok else np.zeros((1, batch, d, d))
                keys = [(done + (cur,), ()) for done, cur in (keys[i] for i in ok)] or [((), ())]
            expected = np.einsum("kbii->b", stack)
        elif isinstance(it, Readout):
            readout = it
            break
        else:
            raise ValueError(f"unknown circuit item {it!r}")
        if check:
            tr = np.einsum("kbii->b", stack)
            if not np.allclose(tr, expected, atol=ATOL, rtol=0):
                raise AssertionError(f"trace drifted at {it!r}: {tr} vs {expected}")
            if not np.allclose(stack, np.swapaxes(stack, -1, -2), atol=ATOL):
                raise AssertionError(f"lost symmetry at {it!r}")

    if readout is None:
        raise ValueError("circuit has no readout")
    diag = np.einsum("kbii->bi", stack)
    # marginalise the qubits that are not read out
    full = diag.reshape((batch,) + (2,) * n)
    keep = list(readout.qubits)
    drop = tuple(1 + q for q in range(n) if q not in keep)
    probs = full.sum(axis=drop) if drop else full
    probs = probs.reshape(batch, -1)
    logical_w = np.zeros((batch, 2))
    for idx in range(probs.shape[1]):
        bits = [(idx >> (len(keep) - 1 - i)) & 1 for i in range(len(keep))]
        lb = decode_z_readout(bits, readout.parity_check)
        if lb is not None:
            logical_w[:, lb] += probs[:, idx]
    p_ps = logical_w.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        logical = np.where(p_ps[:, None] >= MIN_ACCEPTANCE, logical_w / p_ps[:, None], np.nan)
    delta = None
    if true_dist is not None:
        t = np.asarray(true_dist, dtype=float)
        delta = 0.5 * np.abs(logical - t[None, :]).sum(axis=1)
    return EncodedBatchResult(ps=ps, p_ps=p_ps, logical=logical, delta_L=delta)


def run_encoded(
    circuit: PhysicalCircuit,
    noise: Union[NoiseModel, float],
    rule: AcceptanceRule = AcceptanceRule(),
    true_dist: Optional[Sequence[float]] = None,
    **kwargs,
) -> EncodedRunResult:
    p = noise.p if isinstance(noise, NoiseModel) else float(noise)
    res = run_encoded_batch(circuit, [p], rule, true_dist, **kwargs)
    if res.p_ps[0] < MIN_ACCEPTANCE:
        raise FullyRejectedError(f"acceptance probability {res.p_ps[0]:.3g} at p={p}")
    delta = None if res.delta_L is None else float(res.delta_L[0])
    return EncodedRunResult(float(res.p_ps[0]), res.logical[0], delta)
