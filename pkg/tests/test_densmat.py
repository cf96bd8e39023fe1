import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baconshor.bacon_shor import AcceptanceRule, LogicalGate, assemble_encoded_circuit, syndrome_round_circuit
from baconshor.densmat import (
    DensityState,
    FullyRejectedError,
    NoiseModel,
    apply_depolarizing,
    apply_gate,
    apply_reset,
    depolarize_kernel,
    logical_zero,
    measure_ancilla_branches,
    run_encoded,
    run_encoded_batch,
)
from baconshor.experiment import point_mass, true_output
from baconshor.pauli import Gate, NoiseSite, PhysicalCircuit, Readout, swap_labels

X, Z, H = LogicalGate.X_L, LogicalGate.Z_L, LogicalGate.H_L


def ket(bits):
    return DensityState.basis(bits)


def random_state(n, rng, rank=3):
    vecs = rng.normal(size=(rank, 2**n))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    w = rng.dirichlet(np.ones(rank))
    return DensityState(n, np.einsum("k,ki,kj->ij", w, vecs, vecs))


def test_x_flips_basis_state():
    out = apply_gate(ket([0]), Gate("X", (0,)))
    assert np.allclose(out.matrix, ket([1]).matrix)


def test_hadamard_is_involution():
    rho = random_state(3, np.random.default_rng(1))
    twice = apply_gate(apply_gate(rho, Gate("H", (1,))), Gate("H", (1,)))
    assert np.abs(twice.matrix - rho.matrix).max() < 1e-12


def test_cnot_makes_bell_state():
    plus0 = apply_gate(ket([0, 0]), Gate("H", (0,)))
    bell = apply_gate(plus0, Gate("CNOT", (0, 1)))
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(bell.matrix, np.outer(v, v))


def test_relabel_permutes_factors():
    rho = ket([0, 1, 0])
    assert np.allclose(apply_gate(rho, swap_labels(1, 2)).matrix, ket([0, 0, 1]).matrix)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.3, 0.75])
def test_depolarizing_on_zero(p):
    out = apply_depolarizing(ket([0]), 0, NoiseModel(p))
    assert np.allclose(out.matrix, np.diag([1 - 2 * p / 3, 2 * p / 3]))


def test_depolarizing_matches_kraus_form():
    rng = np.random.default_rng(2)
    rho = random_state(2, rng)
    p = 0.17
    paulis = [Gate(k, (1,)) for k in "XYZ"]
    want = (1 - p) * rho.matrix + sum(p / 3 * apply_gate(rho, g).matrix for g in paulis)
    assert np.allclose(apply_depolarizing(rho, 1, p).matrix, want, atol=1e-14)


def test_full_depolarizing_gives_maximally_mixed():
    rho = random_state(2, np.random.default_rng(3)).matrix[None]
    for q in range(2):
        rho = depolarize_kernel(rho, 2, q, np.array([0.75]))
    assert np.allclose(rho[0], np.eye(4) / 4, atol=1e-14)


@pytest.mark.parametrize("p", [-0.1, 0.8, float("nan")])
def test_error_rate_range(p):
    with pytest.raises(ValueError):
        NoiseModel(p)


def test_batched_depolarizing_matches_scalar():
    rho = random_state(3, np.random.default_rng(4)).matrix
    ps = np.array([0.0, 0.01, 0.2])
    batch = depolarize_kernel(np.broadcast_to(rho, (3, 8, 8)).copy(), 3, 2, ps)
    for i, p in enumerate(ps):
        assert np.allclose(batch[i], apply_depolarizing(DensityState(3, rho), 2, float(p)).matrix)


def test_measure_branches():
    rho = random_state(3, np.random.default_rng(5))
    branches = measure_ancilla_branches(rho)
    assert [o for o, _ in branches] == [1, -1]
    assert sum(b.trace() for _, b in branches) == pytest.approx(1.0)
    zero = measure_ancilla_branches(ket([1, 0, 0]))
    assert [b.trace() for _, b in zero] == pytest.approx([1.0, 0.0])
    plus = apply_gate(ket([1, 0, 0]), Gate("H", (2,)))
    assert [b.trace() for _, b in measure_ancilla_branches(plus)] == pytest.approx([0.5, 0.5])


def test_reset():
    rho = apply_reset(random_state(2, np.random.default_rng(6)), 1, "Xplus")
    q1 = rho.matrix.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)
    assert np.allclose(q1, np.full((2, 2), 0.5))


def test_fig1_circuit_noiseless():
    circ = assemble_encoded_circuit([X, Z], 1, after_prep_round=True)
    res = run_encoded(circ, 0.0, true_dist=point_mass(1))
    assert res.p_ps == pytest.approx(1.0)
    assert res.logical == pytest.approx([0.0, 1.0])
    assert res.delta_L == pytest.approx(0.0, abs=1e-12)


def test_injected_data_error_is_always_rejected():
    items = (Gate("X", (0,)), *syndrome_round_circuit().items, Readout())
    circ = PhysicalCircuit(5, items)
    res = run_encoded_batch(circ, [0.0], initial=logical_zero())
    assert res.p_ps[0] == pytest.approx(0.0, abs=1e-14)
    assert res.degenerate[0]
    with pytest.raises(FullyRejectedError):
        run_encoded(circ, 0.0, initial=logical_zero())


def test_final_parity_check_flag():
    # X on qubit 0 gives |1000> + |0111>: odd parity, but b0 ^ b1 = 1 in both
    off = run_encoded_batch(PhysicalCircuit(5, (Gate("X", (0,)), Readout(parity_check=False))), [0.0], initial=logical_zero())
    assert off.p_ps[0] == pytest.approx(1.0)
    assert off.logical[0] == pytest.approx([0.0, 1.0])
    on = run_encoded_batch(PhysicalCircuit(5, (Gate("X", (0,)), Readout())), [0.0], initial=logical_zero())
    assert on.p_ps[0] == pytest.approx(0.0)


seqs = st.lists(st.sampled_from([X, Z, H]), min_size=1, max_size=6)


@settings(max_examples=25, deadline=None)
@given(seqs, st.integers(1, 3), st.floats(0.0, 0.1))
def test_gauge_invariance(seq, gap, p):
    basis, bit = true_output(seq)
    circ = assemble_encoded_circuit(seq, gap, basis=basis, include_prep=False)
    a = run_encoded_batch(circ, [p], initial=logical_zero())
    b = run_encoded_batch(circ, [p], initial=logical_zero(gauge_flipped=True))
    assert abs(a.p_ps[0] - b.p_ps[0]) < 1e-10
    assert np.abs(a.logical - b.logical).max() < 1e-10


@settings(max_examples=10, deadline=None)
@given(st.lists(st.sampled_from([X, Z, H]), min_size=1, max_size=2), st.floats(0.0, 0.2))
def test_merge_matches_exhaustive(seq, p):
    basis, _ = true_output(seq)
    circ = assemble_encoded_circuit(seq, 1, basis=basis)
    a = run_encoded_batch(circ, [p])
    b = run_encoded_batch(circ, [p], merge=False)
    assert abs(a.p_ps[0] - b.p_ps[0]) < 1e-10
    if a.p_ps[0] > 1e-12:
        assert np.abs(a.logical - b.logical).max() < 1e-10


@settings(max_examples=15, deadline=None)
@given(seqs, st.integers(1, 4))
def test_noiseless_runs_are_perfect(seq, gap):
    basis, bit = true_output(seq)
    res = run_encoded(assemble_encoded_circuit(seq, gap, basis=basis), 0.0, true_dist=point_mass(bit))
    assert res.p_ps == pytest.approx(1.0, abs=1e-12)
    assert res.delta_L == pytest.approx(0.0, abs=1e-12)


def test_trace_bookkeeping_and_batch_consistency():
    seq = [H, X, Z, H, X]
    basis, bit = true_output(seq)
    circ = assemble_encoded_circuit(seq, 2, basis=basis)
    ps = np.array([0.0, 0.001, 0.01, 0.05])
    batch = run_encoded_batch(circ, ps, true_dist=point_mass(bit), check=True)
    for i, p in enumerate(ps):
        single = run_encoded(circ, float(p), true_dist=point_mass(bit))
        assert single.p_ps == pytest.approx(batch.p_ps[i], abs=1e-14)
    # detection only removes weight; acceptance falls with p and delta_L starts at 0
    assert np.all(np.diff(batch.p_ps) < 0)
    assert batch.delta_L[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diff(batch.delta_L) >= -1e-12)


def test_state_checks():
    with pytest.raises(ValueError):
        DensityState(2, np.eye(3))
    assert logical_zero().is_physical()
    assert logical_zero().trace() == pytest.approx(1.0)


def test_noise_only_circuit_keeps_trace():
    circ = PhysicalCircuit(5, (NoiseSite(0), NoiseSite(4), Readout(parity_check=False)))
    res = run_encoded_batch(circ, [0.3], initial=logical_zero(), check=True)
    assert res.p_ps[0] == pytest.approx(1.0)
