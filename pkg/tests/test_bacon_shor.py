import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baconshor.bacon_shor import (
    ANCILLA,
    DEFAULT_ORDER,
    AcceptanceRule,
    LogicalGate,
    assemble_encoded_circuit,
    classify_residual,
    compile_logical,
    decode_z_readout,
    expected_noise_sites,
    gauge_center,
    gauge_group,
    prep_circuit,
    prep_fault_residuals,
    residual_after,
    round_positions,
    syndrome_round_circuit,
)
from baconshor.densmat import DensityState, apply_gate, logical_zero, measure_ancilla_branches, run_encoded_batch
from baconshor.pauli import Gate, Measure, NoiseSite, PauliString, PhysicalCircuit, Prep, Readout, check_noise_placement

X, Z, H = LogicalGate.X_L, LogicalGate.Z_L, LogicalGate.H_L
gate_lists = st.lists(st.sampled_from([X, Z, H]), min_size=0, max_size=12)


def _run_pure(circ: PhysicalCircuit) -> np.ndarray:
    """Apply the gates of a noiseless circuit to |00000>, honouring preps."""
    state = DensityState.basis([0] * 5)
    for it in circ.items:
        if isinstance(it, Gate):
            state = apply_gate(state, it)
        elif isinstance(it, Prep) and it.basis == "Xplus":
            state = apply_gate(state, Gate("H", (it.qubit,)))
    return state.matrix


def test_gauge_group_and_center():
    assert len(gauge_group()) == 16
    assert gauge_center() == ["IIII", "XXXX", "YYYY", "ZZZZ"]


def test_prep_circuit_shape_and_output():
    circ = prep_circuit()
    assert circ.noise_sites == 6
    assert circ.count("CNOT") == 3
    check_noise_placement(circ)
    assert np.allclose(_run_pure(circ), logical_zero().matrix, atol=1e-12)


def test_prep_single_x_fault_becomes_gauge_operator():
    circ = prep_circuit()
    first_noise = next(i for i, it in enumerate(circ.items) if isinstance(it, NoiseSite) and it.qubit == 0)
    res = residual_after(circ, first_noise + 1, PauliString.single(5, 0, "X"))
    assert res.letters[:4] == "XXII"
    assert classify_residual(PauliString(res.letters[:4])) == "gauge"


def test_prep_faults_never_logical():
    cases = prep_fault_residuals()
    assert len(cases) == 18
    assert all(classify_residual(res) != "logical" for _, _, res in cases)


@pytest.mark.parametrize("q", range(4))
@pytest.mark.parametrize("letter", "XYZ")
def test_weight_one_errors_detected(q, letter):
    assert classify_residual(PauliString.single(4, q, letter)) == "detectable"


@pytest.mark.parametrize(
    "s, role",
    [("XXXX", "stabilizer"), ("XXII", "gauge"), ("XIXI", "logical"), ("ZZII", "logical"), ("YXII", "detectable")],
)
def test_classify_residual(s, role):
    assert classify_residual(PauliString(s)) == role


def test_syndrome_round_counts():
    circ = syndrome_round_circuit()
    assert circ.count("CNOT") == 8
    assert circ.noise_sites == 18
    assert circ.count("H") == 2
    labels = [it.label for it in circ.items if isinstance(it, Measure)]
    assert labels == list(DEFAULT_ORDER)
    check_noise_placement(circ)


def test_syndrome_round_rejects_bad_order():
    with pytest.raises(ValueError):
        syndrome_round_circuit(("XXII", "XXII", "ZIZI", "IZIZ"))


def test_noiseless_round_accepts_with_uniform_gauge_outcomes():
    rnd = syndrome_round_circuit().items
    circ = PhysicalCircuit(5, (*rnd, Readout()))
    res = run_encoded_batch(circ, [0.0], initial=logical_zero())
    assert res.p_ps[0] == pytest.approx(1.0, abs=1e-12)
    # a single XXII outcome is uniform on |0_L>
    state = logical_zero()
    for g in (Gate("H", (4,)), Gate("CNOT", (4, 0)), Gate("CNOT", (4, 1)), Gate("H", (4,))):
        state = apply_gate(state, g)
    traces = [float(b.trace()) for _, b in measure_ancilla_branches(state)]
    assert traces == pytest.approx([0.5, 0.5], abs=1e-12)


@pytest.mark.parametrize("g, sites", [(X, 2), (Z, 2), (H, 4)])
def test_compile_logical_sites(g, sites):
    circ = compile_logical(g)
    assert circ.noise_sites == sites
    assert circ.count("RELABEL") == (1 if g is H else 0)


def test_logical_x_on_zero():
    circ = prep_circuit() + compile_logical(X)
    v = np.zeros(32)
    v[0b10100] = v[0b01010] = 1 / np.sqrt(2)
    assert np.allclose(_run_pure(circ), np.outer(v, v), atol=1e-12)


@pytest.mark.parametrize(
    "bits, parity, want",
    [
        ("0000", True, 0),
        ("1100", True, 0),
        ("1010", True, 1),
        ("0101", True, 1),
        ("1000", True, None),
        ("1000", False, 1),
        ("0111", False, 1),
    ],
)
def test_decode_z_readout(bits, parity, want):
    assert decode_z_readout([int(b) for b in bits], parity) == want


def test_decode_wrong_length():
    with pytest.raises(ValueError):
        decode_z_readout([0, 0, 0])


@pytest.mark.parametrize(
    "outcomes, ok",
    [
        ({"XXII": 0, "IIXX": 0, "ZIZI": 0, "IZIZ": 0}, True),
        ({"XXII": 1, "IIXX": 1, "ZIZI": 0, "IZIZ": 0}, True),
        ({"XXII": 1, "IIXX": 0, "ZIZI": 0, "IZIZ": 0}, False),
        ({"XXII": 0, "IIXX": 0, "ZIZI": 1, "IZIZ": 0}, False),
    ],
)
def test_acceptance_rule(outcomes, ok):
    assert AcceptanceRule().accepts(outcomes) is ok


def test_fig1_layout():
    circ = assemble_encoded_circuit([X, Z], 1, after_prep_round=True)
    kinds = []
    for it in circ.items:
        if isinstance(it, Measure) and it.label == "XXII":
            kinds.append("S")
        elif isinstance(it, Gate) and it.kind in "XZ" and len(it.targets) == 1:
            if not kinds or kinds[-1] != it.kind:
                kinds.append(it.kind)
        elif isinstance(it, Readout):
            kinds.append("R")
    assert kinds == ["S", "X", "S", "Z", "S", "R"]
    assert circ.n_rounds == 3


@pytest.mark.parametrize(
    "depth, gap, want",
    [(30, 15, [15, 30]), (5, 100, [5]), (10, 3, [3, 6, 9, 10]), (4, 1, [1, 2, 3, 4])],
)
def test_round_positions(depth, gap, want):
    assert round_positions(depth, gap) == want


def test_assemble_rejects_bad_input():
    with pytest.raises(ValueError):
        assemble_encoded_circuit([X], 0)
    with pytest.raises(ValueError):
        assemble_encoded_circuit([], 1, final_round=False)
    with pytest.raises(ValueError):
        assemble_encoded_circuit([X], 1, basis="Y")


@settings(max_examples=60, deadline=None)
@given(gate_lists, st.integers(1, 15), st.booleans(), st.sampled_from(["Z", "X"]))
def test_noise_site_count(seq, gap, after_prep, basis):
    circ = assemble_encoded_circuit(seq, gap, after_prep_round=after_prep, basis=basis)
    check_noise_placement(circ)
    extra = [H] if basis == "X" else []
    assert circ.noise_sites == expected_noise_sites(list(seq) + extra, circ.n_rounds)
    rounds = len(round_positions(len(seq), gap)) if seq else 1
    assert circ.n_rounds == rounds + int(after_prep and bool(seq))
    assert isinstance(circ.items[-1], Readout)
    # ancilla is only ever touched inside syndrome rounds
    for it in circ.items:
        if isinstance(it, Gate) and it.kind in "XYZ" and len(it.targets) == 1:
            assert it.targets[0] != ANCILLA


def test_serialization_is_deterministic():
    a = assemble_encoded_circuit([H, X, Z], 2).serialize()
    b = assemble_encoded_circuit([H, X, Z], 2).serialize()
    assert a == b
    assert a.splitlines()[0] == "PREP 0 Xplus"
