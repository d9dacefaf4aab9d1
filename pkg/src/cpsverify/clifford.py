"""Clifford circuits and their symplectic tableaus.

A :class:`CliffordTableau` stores the images ``C X_j C†`` and ``C Z_j C†`` of the
``2n`` generators.  Any Pauli is a product of generators, so its image is the
matching product of images; that is how :func:`conjugate` works.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliError, PauliString, multiply

SINGLE_QUBIT_GATES = ("H", "S", "SDG", "X", "Y", "Z")
TWO_QUBIT_GATES = ("CNOT", "CZ", "SWAP")
CLIFFORD_GATES = SINGLE_QUBIT_GATES + TWO_QUBIT_GATES
NON_CLIFFORD_GATES = ("T",)

_ALIASES = {"CX": "CNOT", "SDAG": "SDG", "SD": "SDG", "S_DAG": "SDG"}
_ARITY = {**{g: 1 for g in SINGLE_QUBIT_GATES + NON_CLIFFORD_GATES}, **{g: 2 for g in TWO_QUBIT_GATES}}
_INVERSE_NAME = {"S": "SDG", "SDG": "S"}


class CircuitError(ValueError):
    """Malformed gate, circuit or circuit file."""


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        name = _ALIASES.get(self.name.upper(), self.name.upper())
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if name not in _ARITY:
            raise CircuitError(f"unsupported gate {self.name!r}")
        if len(self.qubits) != _ARITY[name]:
            raise CircuitError(f"{name} takes {_ARITY[name]} qubit(s), got {len(self.qubits)}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {name} {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{name} needs distinct qubits, got {self.qubits}")

    @property
    def is_clifford(self) -> bool:
        return self.name in CLIFFORD_GATES

    def inverse(self) -> Gate:
        if not self.is_clifford:
            raise CircuitError(f"no Clifford inverse for {self.name}")
        return Gate(_INVERSE_NAME.get(self.name, self.name), self.qubits)

    def __str__(self) -> str:
        return " ".join([self.name, *map(str, self.qubits)])


# Kept as an alias: a Clifford gate is a Gate whose name is in CLIFFORD_GATES.
CliffordGate = Gate


def _validate(n: int, gates: Sequence[Gate], allowed: Iterable[str]) -> None:
    allowed = set(allowed)
    for g in gates:
        if g.name not in allowed:
            raise CircuitError(f"gate {g.name} not allowed here")
        if any(q >= n for q in g.qubits):
            raise CircuitError(f"gate {g} exceeds circuit width {n}")


@dataclass(frozen=True)
class CliffordCircuit:
    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 1:
            raise CircuitError(f"circuit width must be positive, got {self.n}")
        _validate(self.n, self.gates, CLIFFORD_GATES)

    def inverse(self) -> CliffordCircuit:
        return CliffordCircuit(self.n, tuple(g.inverse() for g in reversed(self.gates)))

    def __add__(self, other: CliffordCircuit) -> CliffordCircuit:
        if other.n != self.n:
            raise CircuitError("cannot concatenate circuits of different width")
        return CliffordCircuit(self.n, self.gates + other.gates)

    def to_text(self) -> str:
        return "\n".join([f"QUBITS {self.n}", *map(str, self.gates)]) + "\n"

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> CliffordCircuit:
        width, gates = parse_gate_lines(text, n, CLIFFORD_GATES)
        return cls(width, gates)

    @classmethod
    def load(cls, path: str | Path, n: int | None = None) -> CliffordCircuit:
        return cls.parse(Path(path).read_text(), n)


def parse_gate_lines(text: str, n: int | None, allowed: Iterable[str]) -> tuple[int, tuple[Gate, ...]]:
    """Parse the one-gate-per-line format.

    ``#`` starts a comment.  The first non-comment line may be ``QUBITS n``;
    otherwise the width is ``n`` if given, else one more than the largest index.
    """
    allowed = set(allowed)
    declared = None
    gates = []
    seen_content = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0].upper()
        if head == "QUBITS":
            if seen_content:
                raise CircuitError(f"line {lineno}: QUBITS must be the first statement")
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise CircuitError(f"line {lineno}: expected 'QUBITS <n>', got {raw.strip()!r}")
            declared = int(tokens[1])
            seen_content = True
            continue
        seen_content = True
        name = _ALIASES.get(head, head)
        if name not in allowed:
            raise CircuitError(f"line {lineno}: unsupported gate {tokens[0]!r}")
        try:
            qubits = tuple(int(t) for t in tokens[1:])
            gates.append(Gate(name, qubits))
        except ValueError as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    width = declared if declared is not None else n
    if width is None:
        width = 1 + max((q for g in gates for q in g.qubits), default=0)
    for g in gates:
        if any(q >= width for q in g.qubits):
            raise CircuitError(f"gate {g} exceeds declared width {width}")
    return width, tuple(gates)


def conjugate_by_gate(p: PauliString, gate: Gate) -> PauliString:
    """``G p G†`` for a single Clifford gate (Aaronson-Gottesman update rules)."""
    x, z, ph = p.x, p.z, p.phase
    name, qs = gate.name, gate.qubits
    if any(q >= p.n for q in qs):
        raise CircuitError(f"gate {gate} exceeds Pauli width {p.n}")
    a = qs[0]
    xa, za = (x >> a) & 1, (z >> a) & 1
    if name == "H":
        ph += 2 * (xa & za)
        if xa != za:
            x ^= 1 << a
            z ^= 1 << a
    elif name == "S":
        ph += 2 * (xa & za)
        z ^= xa << a
    elif name == "SDG":
        ph += 2 * (xa & (za ^ 1))
        z ^= xa << a
    elif name == "X":
        ph += 2 * za
    elif name == "Y":
        ph += 2 * (xa ^ za)
    elif name == "Z":
        ph += 2 * xa
    else:
        b = qs[1]
        xb, zb = (x >> b) & 1, (z >> b) & 1
        if name == "CNOT":
            ph += 2 * (xa & zb & (xb ^ za ^ 1))
            x ^= xa << b
            z ^= zb << a
        elif name == "CZ":
            ph += 2 * (xa & xb & (za ^ zb))
            z ^= (xb << a) | (xa << b)
        elif name == "SWAP":
            if xa != xb:
                x ^= (1 << a) | (1 << b)
            if za != zb:
                z ^= (1 << a) | (1 << b)
        else:
            raise CircuitError(f"{name} is not a Clifford gate")
    return PauliString(p.n, x, z, ph)


@dataclass(frozen=True, eq=True)
class CliffordTableau:
    """Images of ``X_j`` and ``Z_j`` under ``P -> C P C†``."""

    n: int
    x_images: tuple[PauliString, ...]
    z_images: tuple[PauliString, ...]

    def __post_init__(self) -> None:
        if len(self.x_images) != self.n or len(self.z_images) != self.n:
            raise CircuitError("tableau needs exactly n X-images and n Z-images")
        for img in self.x_images + self.z_images:
            if img.n != self.n or not img.is_hermitian:
                raise CircuitError(f"invalid generator image {img}")

    @classmethod
    def identity(cls, n: int) -> CliffordTableau:
        return cls(
            n,
            tuple(PauliString(n, 1 << j, 0) for j in range(n)),
            tuple(PauliString(n, 0, 1 << j) for j in range(n)),
        )

    def apply(self, p: PauliString) -> PauliString:
        """``C p C†`` for any Pauli, Hermitian or not."""
        if p.n != self.n:
            raise PauliError(f"width mismatch: tableau {self.n} vs Pauli {p.n}")
        out = PauliString(self.n, 0, 0, p.phase + (p.x & p.z).bit_count())
        support = p.x | p.z
        while support:
            low = support & -support
            j = low.bit_length() - 1
            if p.x & low:
                out = multiply(out, self.x_images[j])
            if p.z & low:
                out = multiply(out, self.z_images[j])
            support ^= low
        return out

    def apply_gate(self, gate: Gate) -> CliffordTableau:
        """Tableau of ``G·C`` (gate applied after this one)."""
        return CliffordTableau(
            self.n,
            tuple(conjugate_by_gate(p, gate) for p in self.x_images),
            tuple(conjugate_by_gate(p, gate) for p in self.z_images),
        )

    @cached_property
    def inverse_tableau(self) -> CliffordTableau:
        return inverse(self)

    def is_identity(self) -> bool:
        return self == CliffordTableau.identity(self.n)

    def symplectic_matrix(self) -> np.ndarray:
        """Rows are generator images as ``(x bits | z bits)`` over GF(2)."""
        n = self.n
        m = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        for row, img in enumerate(self.x_images + self.z_images):
            for j in range(n):
                m[row, j] = (img.x >> j) & 1
                m[row, n + j] = (img.z >> j) & 1
        return m

    def is_valid(self) -> bool:
        """Images of X_j and Z_j anticommute, all other pairs commute."""
        gens = self.x_images + self.z_images
        n = self.n
        for a in range(2 * n):
            for b in range(a + 1, 2 * n):
                should_anticommute = b == a + n
                if gens[a].commutes(gens[b]) == should_anticommute:
                    return False
        return True


def tableau_from_circuit(circuit: CliffordCircuit) -> CliffordTableau:
    t = CliffordTableau.identity(circuit.n)
    xs, zs = list(t.x_images), list(t.z_images)
    for gate in circuit.gates:
        xs = [conjugate_by_gate(p, gate) for p in xs]
        zs = [conjugate_by_gate(p, gate) for p in zs]
    return CliffordTableau(circuit.n, tuple(xs), tuple(zs))


def conjugate(t: CliffordTableau, p: PauliString) -> PauliString:
    """Back-propagated observable ``C p C†``; ``p`` must be Hermitian."""
    if not p.is_hermitian:
        raise PauliError(f"observable {p} is not Hermitian")
    return t.apply(p)


def conjugate_inverse(t: CliffordTableau, p: PauliString) -> PauliString:
    """``C† p C``."""
    if not p.is_hermitian:
        raise PauliError(f"observable {p} is not Hermitian")
    return t.inverse_tableau.apply(p)


def compose(a: CliffordTableau, b: CliffordTableau) -> CliffordTableau:
    """Tableau of ``A·B``: apply ``b`` first, then ``a``."""
    if a.n != b.n:
        raise PauliError(f"width mismatch: {a.n} vs {b.n}")
    return CliffordTableau(
        a.n,
        tuple(a.apply(p) for p in b.x_images),
        tuple(a.apply(p) for p in b.z_images),
    )


def inverse(t: CliffordTableau) -> CliffordTableau:
    """Inverse via ``M^-1 = Ω M^T Ω``, then signs fixed by forward conjugation."""
    n = t.n
    m = t.symplectic_matrix()
    omega = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    omega[:n, n:] = np.eye(n, dtype=np.uint8)
    omega[n:, :n] = np.eye(n, dtype=np.uint8)
    minv = (omega @ m.T.astype(np.int64) @ omega) % 2
    images = []
    for row in range(2 * n):
        x = sum(int(minv[row, j]) << j for j in range(n))
        z = sum(int(minv[row, n + j]) << j for j in range(n))
        cand = PauliString(n, x, z)
        target = PauliString(n, 1 << row, 0) if row < n else PauliString(n, 0, 1 << (row - n))
        image = t.apply(cand)
        if (image.x, image.z) != (target.x, target.z):
            raise CircuitError("tableau is not symplectic; cannot invert")
        images.append(cand if image.phase == 0 else -cand)
    return CliffordTableau(n, tuple(images[:n]), tuple(images[n:]))


def random_circuit(n: int, depth: int, rng: np.random.Generator) -> CliffordCircuit:
    """``depth`` gates, each drawn uniformly from the gate set on random qubits."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    names = CLIFFORD_GATES if n >= 2 else SINGLE_QUBIT_GATES
    gates = []
    for _ in range(depth):
        name = names[rng.integers(len(names))]
        qubits = rng.choice(n, size=_ARITY[name], replace=False)
        gates.append(Gate(name, tuple(int(q) for q in qubits)))
    return CliffordCircuit(n, tuple(gates))
