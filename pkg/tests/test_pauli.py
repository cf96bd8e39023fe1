import pytest
from hypothesis import given
from hypothesis import strategies as st

from baconshor.bacon_shor import GAUGE_GENERATORS, LOGICAL_X, LOGICAL_Z, STABILIZERS, logical_gate_sequence, LogicalGate
from baconshor.pauli import (
    Gate,
    Measure,
    NoiseSite,
    PauliError,
    PauliString,
    PhysicalCircuit,
    Prep,
    Readout,
    RoundCheck,
    check_noise_placement,
    commutes,
    conjugate_by_gate,
    conjugate_by_gates,
    multiply,
    product_phase,
    swap_labels,
    with_gate_noise,
)

H_L = logical_gate_sequence(LogicalGate.H_L)

paulis4 = st.text(alphabet="IXYZ", min_size=4, max_size=4).map(PauliString)
signed4 = st.builds(PauliString, st.text(alphabet="IXYZ", min_size=4, max_size=4), st.sampled_from([1, -1]))
clifford = st.one_of(
    st.builds(lambda k, q: Gate(k, (q,)), st.sampled_from("HXYZ"), st.integers(0, 3)),
    st.builds(
        lambda pair: Gate("CNOT", pair),
        st.permutations(range(4)).map(lambda p: (p[0], p[1])),
    ),
)


@pytest.mark.parametrize(
    "a, b, want",
    [
        ("XXII", "IIXX", "+XXXX"),
        ("ZIZI", "IZIZ", "+ZZZZ"),
        ("XIXI", "XIXI", "+IIII"),
        ("XX", "ZZ", "-YY"),
        ("XXXX", "ZZZZ", "+YYYY"),
    ],
)
def test_multiply(a, b, want):
    assert str(multiply(PauliString(a), PauliString(b))) == want


def test_multiply_rejects_imaginary_product():
    with pytest.raises(PauliError):
        multiply(PauliString("X"), PauliString("Z"))


def test_length_mismatch():
    with pytest.raises(PauliError):
        multiply(PauliString("XX"), PauliString("XXX"))
    with pytest.raises(PauliError):
        commutes(PauliString("XX"), PauliString("X"))


@pytest.mark.parametrize(
    "a, b, want",
    [("XXXX", "ZZZZ", True), ("XIXI", "ZZII", False), ("XXII", "ZIZI", False), ("XXII", "IIXX", True)],
)
def test_commutes(a, b, want):
    assert commutes(PauliString(a), PauliString(b)) is want


def test_parse_and_render():
    assert str(PauliString.parse("-ZZII")) == "-ZZII"
    assert PauliString.parse("XIXI") == PauliString("XIXI", 1)
    with pytest.raises(PauliError):
        PauliString("XQ")
    with pytest.raises(PauliError):
        PauliString("IIIIII")


@pytest.mark.parametrize(
    "src, gates, want",
    [
        ("XIII", [Gate("H", (0,))], "+ZIII"),
        ("XIXI", H_L, "+ZZII"),
        ("ZZII", H_L, "+XIXI"),
        ("YIII", [Gate("H", (0,))], "-YIII"),
        ("XIII", [Gate("CNOT", (0, 1))], "+XXII"),
        ("IZII", [Gate("CNOT", (0, 1))], "+ZZII"),
        ("YIII", [Gate("Z", (0,))], "-YIII"),
        ("XIII", [Gate("Y", (0,))], "-XIII"),
        ("XIYI", [swap_labels(1, 2)], "+XYII"),
    ],
)
def test_conjugation(src, gates, want):
    assert str(conjugate_by_gates(PauliString(src), gates)) == want


def test_logical_operators_commute_with_gauge_and_anticommute():
    for g in GAUGE_GENERATORS.values():
        assert commutes(LOGICAL_X, g) and commutes(LOGICAL_Z, g)
    assert not commutes(LOGICAL_X, LOGICAL_Z)


def test_hadamard_permutes_gauge_group_and_swaps_stabilizers():
    gauge = {g.letters for g in GAUGE_GENERATORS.values()}
    assert {conjugate_by_gates(g, H_L).letters for g in GAUGE_GENERATORS.values()} == gauge
    assert conjugate_by_gates(PauliString("XXXX"), H_L).letters == "ZZZZ"
    assert conjugate_by_gates(PauliString("ZZZZ"), H_L).letters == "XXXX"
    assert {s.letters for s in STABILIZERS} == {"IIII", "XXXX", "YYYY", "ZZZZ"}


@given(signed4, signed4)
def test_product_phase_reorder(p, q):
    k1, l1 = product_phase(p, q)
    k2, l2 = product_phase(q, p)
    assert l1 == l2
    # commuting operators give identical phases, anticommuting differ by -1
    assert (k1 - k2) % 4 == (0 if commutes(p, q) else 2)


@given(paulis4, paulis4, st.lists(clifford, max_size=6))
def test_conjugation_preserves_commutation(p, q, gates):
    assert commutes(conjugate_by_gates(p, gates), conjugate_by_gates(q, gates)) == commutes(p, q)


@given(signed4, signed4, st.lists(clifford, max_size=6))
def test_conjugation_is_a_homomorphism(p, q, gates):
    if not commutes(p, q):
        return
    lhs = conjugate_by_gates(p * q, gates)
    rhs = conjugate_by_gates(p, gates) * conjugate_by_gates(q, gates)
    assert lhs == rhs


def test_relabel_has_no_noise_and_placement_rule():
    items = with_gate_noise([Gate("H", (0,)), Gate("CNOT", (0, 1)), swap_labels(1, 2)])
    assert items.count(NoiseSite(0)) == 2 and items.count(NoiseSite(1)) == 1
    circ = PhysicalCircuit(5, items)
    check_noise_placement(circ)
    with pytest.raises(PauliError):
        check_noise_placement(PhysicalCircuit(5, [Gate("H", (0,))]))
    with pytest.raises(PauliError):
        check_noise_placement(PhysicalCircuit(5, [NoiseSite(0)]))


def test_serialize_round_trip():
    items = [Prep(4, "Xplus"), *with_gate_noise([Gate("CNOT", (4, 0))]), swap_labels(1, 2), Measure(4, "XXII"),
             RoundCheck(), Readout((0, 1, 2, 3), True)]
    circ = PhysicalCircuit(5, items)
    text = circ.serialize()
    assert "PREP 4 Xplus" in text and "READOUT 0 1 2 3 parity" in text
    assert PhysicalCircuit.deserialize(5, text) == circ


def test_gate_validation():
    with pytest.raises(PauliError):
        Gate("CNOT", (1, 1))
    with pytest.raises(PauliError):
        Gate("T", (0,))
    with pytest.raises(PauliError):
        conjugate_by_gate(PauliString("XX"), Gate("H", (3,)))
