"""Circuits and decoding rules for the four-qubit Bacon-Shor code.

Data qubits are 0..3, the single syndrome ancilla is 4.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .pauli import (
    Gate,
    Item,
    Measure,
    NoiseSite,
    PauliString,
    PhysicalCircuit,
    Prep,
    Readout,
    RoundCheck,
    commutes,
    conjugate_by_gate,
    product_phase,
    swap_labels,
    with_gate_noise,
)

N_DATA = 4
ANCILLA = 4
N_QUBITS = 5

GAUGE_GENERATORS = {
    name: PauliString(name) for name in ("XXII", "IIXX", "ZIZI", "IZIZ")
}
STABILIZERS = tuple(PauliString(s) for s in ("IIII", "XXXX", "YYYY", "ZZZZ"))
LOGICAL_X = PauliString("XIXI")
LOGICAL_Z = PauliString("ZZII")

# supports of each gauge measurement and its type
GAUGE_SUPPORT = {
    "XXII": ("X", (0, 1)),
    "IIXX": ("X", (2, 3)),
    "ZIZI": ("Z", (0, 2)),
    "IZIZ": ("Z", (1, 3)),
}
DEFAULT_ORDER = ("XXII", "IIXX", "ZIZI", "IZIZ")


class LogicalGate(enum.Enum):
    X_L = "X_L"
    Z_L = "Z_L"
    H_L = "H_L"

    def __str__(self) -> str:
        return self.value


def gauge_group() -> list[str]:
    """Letter strings of the gauge group, phases dropped (16 elements)."""
    gens = list(GAUGE_GENERATORS.values())
    out = set()
    for mask in itertools.product((0, 1), repeat=len(gens)):
        acc = PauliString.identity(N_DATA)
        for bit, g in zip(mask, gens):
            if bit:
                _, letters = product_phase(acc, g)
                acc = PauliString(letters)
        out.add(acc.letters)
    return sorted(out)


def gauge_center() -> list[str]:
    """Gauge group elements commuting with every gauge generator."""
    return [
        s
        for s in gauge_group()
        if all(commutes(PauliString(s), g) for g in GAUGE_GENERATORS.values())
    ]


def in_gauge_group(p: PauliString) -> bool:
    return p.letters in gauge_group()


def classify_residual(p: PauliString) -> str:
    """Name the role a data-qubit Pauli plays for the code.

    Returns one of ``"stabilizer"``, ``"gauge"``, ``"logical"`` (undetectable
    and acts on the logical qubit), ``"detectable"`` (anticommutes with a
    stabilizer).
    """
    p = p.unsigned()
    if p.letters in {s.letters for s in STABILIZERS}:
        return "stabilizer"
    if not all(commutes(p, s) for s in STABILIZERS):
        return "detectable"
    if in_gauge_group(p):
        return "gauge"
    return "logical"


# ------------------------------------------------------------------ circuits


def prep_circuit() -> PhysicalCircuit:
    """Noisy |0_L> preparation: |+>|000>, then CNOT(0,2), CNOT(0,1), CNOT(2,3)."""
    items: list[Item] = [Prep(0, "Xplus"), Prep(1), Prep(2), Prep(3), Prep(ANCILLA)]
    items += with_gate_noise(
        [Gate("CNOT", (0, 2)), Gate("CNOT", (0, 1)), Gate("CNOT", (2, 3))]
    )
    return PhysicalCircuit(N_QUBITS, items)


def gauge_measurement(name: str) -> list[Item]:
    kind, (a, b) = GAUGE_SUPPORT[name]
    if kind == "X":
        items: list[Item] = [Prep(ANCILLA, "Xplus")]
        items += with_gate_noise(
            [Gate("CNOT", (ANCILLA, a)), Gate("CNOT", (ANCILLA, b)), Gate("H", (ANCILLA,))]
        )
    else:
        items = [Prep(ANCILLA, "Z0")]
        items += with_gate_noise([Gate("CNOT", (a, ANCILLA)), Gate("CNOT", (b, ANCILLA))])
    items.append(Measure(ANCILLA, name))
    return items


def syndrome_round_circuit(order: Sequence[str] = DEFAULT_ORDER) -> PhysicalCircuit:
    if sorted(order) != sorted(DEFAULT_ORDER):
        raise ValueError(f"measurement order must permute {DEFAULT_ORDER}, got {order}")
    items: list[Item] = []
    for name in order:
        items += gauge_measurement(name)
    items.append(RoundCheck())
    return PhysicalCircuit(N_QUBITS, items)


_LOGICAL_GATES = {
    LogicalGate.X_L: [Gate("X", (0,)), Gate("X", (2,))],
    LogicalGate.Z_L: [Gate("Z", (0,)), Gate("Z", (1,))],
    LogicalGate.H_L: [Gate("H", (q,)) for q in range(N_DATA)] + [swap_labels(1, 2)],
}


def logical_gate_sequence(g: LogicalGate) -> list[Gate]:
    return list(_LOGICAL_GATES[LogicalGate(g)])


def compile_logical(g: LogicalGate) -> PhysicalCircuit:
    return PhysicalCircuit(N_QUBITS, with_gate_noise(_LOGICAL_GATES[LogicalGate(g)]))


def decode_z_readout(bits: Sequence[int], final_parity_check: bool = True) -> Optional[int]:
    """Logical bit from a Z readout of the four data qubits, None if rejected."""
    b = [int(v) & 1 for v in bits]
    if len(b) != N_DATA:
        raise ValueError("expected four readout bits")
    if final_parity_check and (b[0] ^ b[1] ^ b[2] ^ b[3]):
        return None
    return b[0] ^ b[1]


@dataclass(frozen=True)
class AcceptanceRule:
    """Reject a round unless the product of outcomes within each pair is +1.

    Outcomes are bits (0 for eigenvalue +1).
    """

    pairs: tuple[tuple[str, ...], ...] = (("XXII", "IIXX"), ("ZIZI", "IZIZ"))

    def parities(self, outcomes: Mapping[str, int]) -> tuple[int, ...]:
        return tuple(sum(outcomes.get(lbl, 0) for lbl in pair) % 2 for pair in self.pairs)

    def accepts(self, outcomes: Mapping[str, int]) -> bool:
        return not any(self.parities(outcomes))

    def pair_index(self, label: str) -> int:
        for i, pair in enumerate(self.pairs):
            if label in pair:
                return i
        raise KeyError(label)


def round_positions(depth: int, gap: int) -> list[int]:
    """Numbers of logical gates applied before each syndrome round.

    The final round at ``depth`` is always present.
    """
    if gap < 1:
        raise ValueError("gap must be >= 1")
    pos = list(range(gap, depth + 1, gap))
    if not pos or pos[-1] != depth:
        pos.append(depth)
    return pos


def assemble_encoded_circuit(
    logical_seq: Iterable[LogicalGate],
    gap: int,
    *,
    after_prep_round: bool = False,
    final_round: bool = True,
    basis: str = "Z",
    final_parity_check: bool = True,
    order: Sequence[str] = DEFAULT_ORDER,
    include_prep: bool = True,
) -> PhysicalCircuit:
    """Prep, logical gates with a syndrome round every ``gap`` gates, readout.

    ``basis="X"`` appends a noisy logical Hadamard before the Z readout.
    """
    seq = [LogicalGate(g) for g in logical_seq]
    if gap < 1:
        raise ValueError("gap must be >= 1")
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    rounds = set(round_positions(len(seq), gap)) if final_round else set(
        range(gap, len(seq) + 1, gap)
    )
    if not seq and not final_round and not after_prep_round:
        raise ValueError("empty logical sequence with no syndrome rounds")
    round_items = syndrome_round_circuit(order).items
    circ = prep_circuit() if include_prep else PhysicalCircuit(N_QUBITS)
    items = list(circ.items)
    # with an empty sequence the terminal round doubles as the post-prep round
    if after_prep_round and 0 not in rounds:
        items += round_items
    for i, g in enumerate(seq, start=1):
        items += compile_logical(g).items
        if i in rounds:
            items += round_items
    if not seq and final_round:
        items += round_items
    if basis == "X":
        items += compile_logical(LogicalGate.H_L).items
    items.append(Readout(tuple(range(N_DATA)), final_parity_check))
    return PhysicalCircuit(N_QUBITS, items)


def expected_noise_sites(logical_seq: Sequence[LogicalGate], n_rounds: int) -> int:
    per_gate = {LogicalGate.X_L: 2, LogicalGate.Z_L: 2, LogicalGate.H_L: 4}
    return 6 + 18 * n_rounds + sum(per_gate[LogicalGate(g)] for g in logical_seq)


def residual_after(circuit: PhysicalCircuit, start: int, fault: PauliString) -> PauliString:
    """Propagate a Pauli ``fault`` inserted before item ``start`` to the end."""
    p = fault
    for it in circuit.items[start:]:
        if isinstance(it, Gate):
            p = conjugate_by_gate(p, it)
    return p


def prep_fault_residuals() -> list[tuple[int, str, PauliString]]:
    """Residual data Pauli for every single fault at every prep noise site."""
    circ = prep_circuit()
    out = []
    for idx, it in enumerate(circ.items):
        if not isinstance(it, NoiseSite):
            continue
        for letter in "XYZ":
            fault = PauliString.single(N_QUBITS, it.qubit, letter)
            res = residual_after(circ, idx + 1, fault)
            out.append((it.qubit, letter, PauliString(res.letters[:N_DATA], res.sign)))
    return out
