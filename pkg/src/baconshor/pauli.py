"""Signed Pauli strings, Clifford gates and the circuit representation.

Qubits are indexed from 0.  Data qubits of the code are 0..3 and the
syndrome ancilla is 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

MAX_QUBITS = 5
LETTERS = "IXZY"

# (x, z) bits for each letter; Y carries x = z = 1.
_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_FROM_XZ = {v: k for k, v in _XZ.items()}

# Single-letter products: (a, b) -> (power of i, letter).
_MUL = {}
for _a in "IXYZ":
    for _b in "IXYZ":
        if _a == "I":
            _MUL[_a, _b] = (0, _b)
        elif _b == "I":
            _MUL[_a, _b] = (0, _a)
        elif _a == _b:
            _MUL[_a, _b] = (0, "I")
_MUL.update(
    {
        ("X", "Y"): (1, "Z"),
        ("Y", "Z"): (1, "X"),
        ("Z", "X"): (1, "Y"),
        ("Y", "X"): (3, "Z"),
        ("Z", "Y"): (3, "X"),
        ("X", "Z"): (3, "Y"),
    }
)


class PauliError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    """A Pauli operator ``sign * letters[0] (x) letters[1] (x) ...``."""

    letters: str
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PauliError(f"sign must be +1 or -1, got {self.sign!r}")
        if not 1 <= len(self.letters) <= MAX_QUBITS:
            raise PauliError(f"length {len(self.letters)} outside 1..{MAX_QUBITS}")
        if any(c not in _XZ for c in self.letters):
            raise PauliError(f"invalid Pauli letters {self.letters!r}")

    @classmethod
    def parse(cls, text: str) -> PauliString:
        text = text.strip()
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        return cls(text, sign)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> PauliString:
        letters = ["I"] * n
        letters[qubit] = letter
        return cls("".join(letters))

    def __str__(self) -> str:
        return ("+" if self.sign == 1 else "-") + self.letters

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.letters, -self.sign)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def is_identity(self) -> bool:
        return self.weight == 0

    def xz(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        bits = [_XZ[c] for c in self.letters]
        return tuple(b[0] for b in bits), tuple(b[1] for b in bits)

    def unsigned(self) -> PauliString:
        return PauliString(self.letters)


def _check_lengths(p: PauliString, q: PauliString) -> None:
    if len(p) != len(q):
        raise PauliError(f"length mismatch: {p} vs {q}")


def product_phase(p: PauliString, q: PauliString) -> tuple[int, str]:
    """Return ``(k, letters)`` with ``p * q = i**k * letters`` (k mod 4)."""
    _check_lengths(p, q)
    k = 0 if p.sign * q.sign == 1 else 2
    out = []
    for a, b in zip(p.letters, q.letters):
        dk, c = _MUL[a, b]
        k += dk
        out.append(c)
    return k % 4, "".join(out)


def multiply(p: PauliString, q: PauliString) -> PauliString:
    k, letters = product_phase(p, q)
    if k % 2:
        raise PauliError(f"product {p} * {q} is not Hermitian")
    return PauliString(letters, 1 if k == 0 else -1)


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_lengths(p, q)
    clashes = sum(a != "I" and b != "I" and a != b for a, b in zip(p.letters, q.letters))
    return clashes % 2 == 0


# --------------------------------------------------------------------- gates

GATE_KINDS = ("H", "X", "Y", "Z", "CNOT", "RELABEL")
_ARITY = {"H": 1, "X": 1, "Y": 1, "Z": 1, "CNOT": 2}


@dataclass(frozen=True)
class Gate:
    """A Clifford gate.

    ``RELABEL`` permutes qubit labels: the qubit at ``targets[i]`` moves to
    ``targets[perm[i]]``.  It is free and never followed by noise.
    """

    kind: str
    targets: tuple[int, ...]
    perm: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise PauliError(f"unsupported gate kind {self.kind!r}")
        if self.kind == "RELABEL":
            if sorted(self.perm) != list(range(len(self.targets))):
                raise PauliError(f"bad relabel permutation {self.perm}")
        elif len(self.targets) != _ARITY[self.kind]:
            raise PauliError(f"{self.kind} takes {_ARITY[self.kind]} targets")
        if len(set(self.targets)) != len(self.targets):
            raise PauliError(f"repeated targets in {self}")

    @property
    def arity(self) -> int:
        return 0 if self.kind == "RELABEL" else len(self.targets)

    def mapping(self) -> dict[int, int]:
        """Old position -> new position for a relabel."""
        return {t: self.targets[j] for t, j in zip(self.targets, self.perm)}


def swap_labels(a: int, b: int) -> Gate:
    return Gate("RELABEL", (a, b), (1, 0))


def conjugate_by_gate(p: PauliString, g: Gate) -> PauliString:
    """Return ``g p g^dagger``."""
    n = len(p)
    if any(t >= n for t in g.targets):
        raise PauliError(f"gate {g} out of range for {n} qubits")
    x, z = (list(v) for v in p.xz())
    r = 0 if p.sign == 1 else 1
    if g.kind == "RELABEL":
        m = g.mapping()
        nx, nz = list(x), list(z)
        for old, new in m.items():
            nx[new], nz[new] = x[old], z[old]
        x, z = nx, nz
    elif g.kind == "H":
        (a,) = g.targets
        r ^= x[a] & z[a]
        x[a], z[a] = z[a], x[a]
    elif g.kind == "X":
        (a,) = g.targets
        r ^= z[a]
    elif g.kind == "Z":
        (a,) = g.targets
        r ^= x[a]
    elif g.kind == "Y":
        (a,) = g.targets
        r ^= x[a] ^ z[a]
    elif g.kind == "CNOT":
        a, b = g.targets
        r ^= x[a] & z[b] & (x[b] ^ z[a] ^ 1)
        x[b] ^= x[a]
        z[a] ^= z[b]
    else:  # pragma: no cover - guarded by Gate
        raise PauliError(f"unsupported gate {g.kind}")
    letters = "".join(_FROM_XZ[xi, zi] for xi, zi in zip(x, z))
    return PauliString(letters, -1 if r else 1)


def conjugate_by_gates(p: PauliString, gates: Iterable[Gate]) -> PauliString:
    for g in gates:
        p = conjugate_by_gate(p, g)
    return p


# ------------------------------------------------------------ circuit items


@dataclass(frozen=True)
class NoiseSite:
    qubit: int


@dataclass(frozen=True)
class Prep:
    """Noiseless reset of ``qubit`` to |0> (``Z0``) or |+> (``Xplus``)."""

    qubit: int
    basis: str = "Z0"

    def __post_init__(self):
        if self.basis not in ("Z0", "Xplus"):
            raise PauliError(f"unknown prep basis {self.basis!r}")


@dataclass(frozen=True)
class Measure:
    """Noiseless computational-basis measurement of an ancilla."""

    qubit: int
    label: str


@dataclass(frozen=True)
class RoundCheck:
    """End of a syndrome round; the acceptance rule is evaluated here."""


@dataclass(frozen=True)
class Readout:
    """Noiseless destructive Z readout of the data qubits."""

    qubits: tuple[int, ...] = (0, 1, 2, 3)
    parity_check: bool = True


Item = Union[Gate, NoiseSite, Prep, Measure, RoundCheck, Readout]


@dataclass(frozen=True)
class PhysicalCircuit:
    n_qubits: int
    items: tuple[Item, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise PauliError(f"n_qubits must be in 1..{MAX_QUBITS}")
        object.__setattr__(self, "items", tuple(self.items))

    def __iter__(self) -> Iterator[Item]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __add__(self, other: PhysicalCircuit) -> PhysicalCircuit:
        if other.n_qubits != self.n_qubits:
            raise PauliError("cannot concatenate circuits of different widths")
        return PhysicalCircuit(self.n_qubits, self.items + other.items)

    @property
    def gates(self) -> list[Gate]:
        return [it for it in self.items if isinstance(it, Gate)]

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    @property
    def noise_sites(self) -> int:
        return sum(1 for it in self.items if isinstance(it, NoiseSite))

    @property
    def n_rounds(self) -> int:
        return sum(1 for it in self.items if isinstance(it, RoundCheck))

    def without_noise(self) -> PhysicalCircuit:
        return PhysicalCircuit(
            self.n_qubits, tuple(it for it in self.items if not isinstance(it, NoiseSite))
        )

    def serialize(self) -> str:
        return "".join(format_item(it) + "\n" for it in self.items)

    @classmethod
    def deserialize(cls, n_qubits: int, text: str) -> PhysicalCircuit:
        return cls(n_qubits, tuple(parse_item(line) for line in text.splitlines() if line.strip()))


def with_gate_noise(gates: Sequence[Gate]) -> list[Item]:
    """Gates each followed by one noise site per acted qubit."""
    items: list[Item] = []
    for g in gates:
        items.append(g)
        if g.kind != "RELABEL":
            items.extend(NoiseSite(q) for q in g.targets)
    return items


def check_noise_placement(circuit: PhysicalCircuit) -> None:
    """Raise unless every non-relabel gate is followed by its noise sites."""
    items = circuit.items
    i = 0
    while i < len(items):
        it = items[i]
        if isinstance(it, Gate) and it.kind != "RELABEL":
            follow = items[i + 1 : i + 1 + it.arity]
            want = [NoiseSite(q) for q in it.targets]
            if list(follow) != want:
                raise PauliError(f"gate {format_item(it)} at {i} lacks its noise sites")
            i += 1 + it.arity
            continue
        if isinstance(it, NoiseSite):
            raise PauliError(f"stray noise site at {i}")
        i += 1


def format_item(it: Item) -> str:
    if isinstance(it, Gate):
        if it.kind == "RELABEL":
            return "RELABEL " + " ".join(map(str, it.targets)) + " / " + " ".join(map(str, it.perm))
        return it.kind + " " + " ".join(map(str, it.targets))
    if isinstance(it, NoiseSite):
        return f"NOISE {it.qubit}"
    if isinstance(it, Prep):
        return f"PREP {it.qubit} {it.basis}"
    if isinstance(it, Measure):
        return f"MEASURE {it.qubit} {it.label}"
    if isinstance(it, RoundCheck):
        return "CHECK"
    if isinstance(it, Readout):
        return "READOUT " + " ".join(map(str, it.qubits)) + (" parity" if it.parity_check else "")
    raise PauliError(f"unknown circuit item {it!r}")


def parse_item(line: str) -> Item:
    head, *rest = line.split()
    if head == "NOISE":
        return NoiseSite(int(rest[0]))
    if head == "PREP":
        return Prep(int(rest[0]), rest[1])
    if head == "MEASURE":
        return Measure(int(rest[0]), rest[1])
    if head == "CHECK":
        return RoundCheck()
    if head == "READOUT":
        parity = rest[-1:] == ["parity"]
        return Readout(tuple(int(q) for q in rest if q != "parity"), parity)
    if head == "RELABEL":
        cut = rest.index("/")
        return Gate("RELABEL", tuple(map(int, rest[:cut])), tuple(map(int, rest[cut + 1 :])))
    return Gate(head, tuple(map(int, rest)))
