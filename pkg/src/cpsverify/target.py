"""Clifford-enhanced product-state targets and their Pauli sampling plans.

The characteristic function uses ``chi(P) = Tr[|psi><psi| P] / 2`` so that
``|psi><psi| = sum_P chi(P) P`` holds exactly on one qubit.  With this
normalization ``chi(I) = 1/2`` and the non-identity l1 weight ``w`` is 1/2 on
stabilizer states and ``1/sqrt(2)`` on ``T|+>``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .clifford import CliffordCircuit, CliffordTableau, conjugate, tableau_from_circuit
from .pauli import PauliAxis, PauliString, embed_single

PURITY_TOL = 1e-9
SUPPORT_TOL = 1e-12
_NON_IDENTITY = (PauliAxis.X, PauliAxis.Y, PauliAxis.Z)


class TargetError(ValueError):
    """Invalid single-qubit state, state file or target."""


@dataclass(frozen=True)
class SingleQubitState:
    """Pure single-qubit state given by its Bloch vector."""

    bloch: tuple[float, float, float]

    def __post_init__(self) -> None:
        bloch = tuple(float(v) for v in self.bloch)
        if len(bloch) != 3:
            raise TargetError("Bloch vector needs three components")
        norm2 = sum(v * v for v in bloch)
        if abs(norm2 - 1.0) > PURITY_TOL:
            raise TargetError(f"Bloch vector {bloch} is not normalized (|r|^2 = {norm2})")
        object.__setattr__(self, "bloch", bloch)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> SingleQubitState:
        return cls(
            (
                math.sin(theta) * math.cos(phi),
                math.sin(theta) * math.sin(phi),
                math.cos(theta),
            )
        )

    @classmethod
    def named(cls, token: str) -> SingleQubitState:
        try:
            return NAMED_STATES[token.strip()]
        except KeyError:
            raise TargetError(f"unknown state token {token!r}") from None

    def amplitudes(self) -> np.ndarray:
        """State vector ``(cos(theta/2), e^{i phi} sin(theta/2))``."""
        rx, ry, rz = self.bloch
        theta = math.acos(max(-1.0, min(1.0, rz)))
        phi = math.atan2(ry, rx)
        return np.array(
            [math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)], dtype=complex
        )

    def density(self) -> np.ndarray:
        rx, ry, rz = self.bloch
        return 0.5 * np.array([[1 + rz, rx - 1j * ry], [rx + 1j * ry, 1 - rz]], dtype=complex)

    def component(self, axis: PauliAxis) -> float:
        if axis is PauliAxis.I:
            return 1.0
        return self.bloch[{"X": 0, "Y": 1, "Z": 2}[axis.name]]


_R = 1 / math.sqrt(2)
# largest per-qubit weight |r_x| + |r_y| + |r_z| over 2 on the Bloch sphere; sums to m <= n sqrt(3) / 2
MAX_WEIGHT = math.sqrt(3) / 2
NAMED_STATES = {
    "0": SingleQubitState((0.0, 0.0, 1.0)),
    "1": SingleQubitState((0.0, 0.0, -1.0)),
    "+": SingleQubitState((1.0, 0.0, 0.0)),
    "-": SingleQubitState((-1.0, 0.0, 0.0)),
    "+i": SingleQubitState((0.0, 1.0, 0.0)),
    "-i": SingleQubitState((0.0, -1.0, 0.0)),
    "T": SingleQubitState((_R, _R, 0.0)),
}


@dataclass(frozen=True)
class ChiTable:
    chi: dict[PauliAxis, float]
    w: float

    def __getitem__(self, axis: PauliAxis | str) -> float:
        return self.chi[PauliAxis.parse(axis)]


def chi(state: SingleQubitState) -> ChiTable:
    """Characteristic function of a pure single-qubit state."""
    table = {PauliAxis.I: 0.5}
    for axis in _NON_IDENTITY:
        table[axis] = state.component(axis) / 2
    w = sum(abs(table[a]) for a in _NON_IDENTITY)
    return ChiTable(table, w)


def parse_states(text: str) -> tuple[SingleQubitState, ...]:
    """One qubit per line: a named token, ``bloch rx ry rz`` or ``angles theta phi``."""
    states = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            states.append(parse_state_tokens(tokens))
        except (TargetError, ValueError) as exc:
            raise TargetError(f"line {lineno}: {exc}") from None
    if not states:
        raise TargetError("state file lists no qubits")
    return tuple(states)


def parse_state_tokens(tokens: Sequence[str]) -> SingleQubitState:
    head = tokens[0].lower()
    if head == "bloch":
        if len(tokens) != 4:
            raise TargetError("expected 'bloch rx ry rz'")
        return SingleQubitState(tuple(float(t) for t in tokens[1:]))
    if head == "angles":
        if len(tokens) != 3:
            raise TargetError("expected 'angles theta phi'")
        return SingleQubitState.from_angles(float(tokens[1]), float(tokens[2]))
    if len(tokens) != 1:
        raise TargetError(f"unexpected tokens {' '.join(tokens)!r}")
    return SingleQubitState.named(tokens[0])


def format_state(state: SingleQubitState) -> str:
    for token, named in NAMED_STATES.items():
        if named == state:
            return token
    return "bloch {!r} {!r} {!r}".format(*state.bloch)


@dataclass(frozen=True)
class CpsTarget:
    """``C (psi_0 ⊗ ... ⊗ psi_{n-1})`` with a known Clifford ``C``."""

    states: tuple[SingleQubitState, ...]
    circuit: CliffordCircuit

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if self.circuit.n != len(self.states):
            raise TargetError(
                f"circuit width {self.circuit.n} does not match {len(self.states)} states"
            )

    @property
    def n(self) -> int:
        return len(self.states)

    @cached_property
    def tableau(self) -> CliffordTableau:
        return tableau_from_circuit(self.circuit)

    @classmethod
    def product(cls, states: Sequence[SingleQubitState | str], circuit: CliffordCircuit | None = None) -> CpsTarget:
        states = tuple(SingleQubitState.named(s) if isinstance(s, str) else s for s in states)
        return cls(states, circuit or CliffordCircuit(len(states)))

    @classmethod
    def load(cls, states_path: str | Path, circuit_path: str | Path | None = None) -> CpsTarget:
        states = parse_states(Path(states_path).read_text())
        if circuit_path is None:
            circuit = CliffordCircuit(len(states))
        else:
            circuit = CliffordCircuit.parse(Path(circuit_path).read_text(), n=len(states))
        return cls(states, circuit)


class SamplingMode(str, enum.Enum):
    EXCLUDE_IDENTITY = "exclude_identity"
    INCLUDE_IDENTITY = "include_identity"

    @classmethod
    def parse(cls, value: str | SamplingMode) -> SamplingMode:
        if isinstance(value, SamplingMode):
            return value
        aliases = {"exclude": cls.EXCLUDE_IDENTITY, "include": cls.INCLUDE_IDENTITY}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown sampling mode {value!r}") from None


@dataclass(frozen=True)
class Setting:
    qubit: int
    axis: PauliAxis
    sign: int


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """Joint distribution ``D(i, P) = |chi_i(P)| / m_eff`` with its sampling tables.

    ``support`` lists every ``(i, P)`` with non-zero weight; ``probs`` holds
    ``D`` on it.  Sampling is two-stage: ``i`` from ``mu``, then ``P`` from the
    per-qubit table.
    """

    mode: SamplingMode
    weights: tuple[float, ...]
    m: float
    support: tuple[Setting, ...]
    probs: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    _qubit_cdf: np.ndarray = field(repr=False)
    _axis_cdf: tuple[np.ndarray, ...] = field(repr=False)
    _axis_offset: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def M(self) -> float:
        return self.n / 2 + self.m

    @property
    def m_eff(self) -> float:
        return self.m if self.mode is SamplingMode.EXCLUDE_IDENTITY else self.M

    @property
    def signs(self) -> np.ndarray:
        return np.array([s.sign for s in self.support], dtype=np.int8)

    def witness_from_mean(self, x_bar: float) -> float:
        """Affine map from the signed-outcome mean to the witness estimate."""
        if self.mode is SamplingMode.EXCLUDE_IDENTITY:
            return 1 - self.n / 2 + self.m * x_bar
        return 1 - self.n + self.M * x_bar

    def probability(self, qubit: int, axis: PauliAxis | str) -> float:
        axis = PauliAxis.parse(axis)
        for s, p in zip(self.support, self.probs):
            if s.qubit == qubit and s.axis is axis:
                return float(p)
        return 0.0


def build_plan(target: CpsTarget, mode: SamplingMode | str = SamplingMode.EXCLUDE_IDENTITY) -> SamplingPlan:
    mode = SamplingMode.parse(mode)
    axes = _NON_IDENTITY if mode is SamplingMode.EXCLUDE_IDENTITY else (PauliAxis.I,) + _NON_IDENTITY
    tables = [chi(s) for s in target.states]
    weights = tuple(t.w for t in tables)
    m = math.fsum(weights)
    if m <= 0 or not all(0.5 - 1e-9 <= w <= MAX_WEIGHT + 1e-9 for w in weights):
        raise TargetError("characteristic weights outside [1/2, sqrt(3)/2]; states must be pure")
    per_qubit = [math.fsum(abs(t.chi[a]) for a in axes) for t in tables]
    m_eff = math.fsum(per_qubit)

    support, probs, axis_cdf, offsets = [], [], [], []
    for i, table in enumerate(tables):
        offsets.append(len(support))
        local = []
        for a in axes:
            value = table.chi[a]
            if abs(value) < SUPPORT_TOL:
                continue
            support.append(Setting(i, a, 1 if value > 0 else -1))
            probs.append(abs(value) / m_eff)
            local.append(abs(value))
        cdf = np.cumsum(local) / math.fsum(local)
        cdf[-1] = 1.0
        axis_cdf.append(cdf)
    mu = np.array(per_qubit) / m_eff
    qubit_cdf = np.cumsum(mu)
    qubit_cdf[-1] = 1.0
    return SamplingPlan(
        mode=mode,
        weights=weights,
        m=m,
        support=tuple(support),
        probs=np.array(probs),
        mu=mu,
        _qubit_cdf=qubit_cdf,
        _axis_cdf=tuple(axis_cdf),
        _axis_offset=np.array(offsets),
    )


def sample_indices(plan: SamplingPlan, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` settings; returns indices into ``plan.support``."""
    qubits = np.searchsorted(plan._qubit_cdf, rng.random(size), side="right")
    qubits = np.minimum(qubits, plan.n - 1)
    u = rng.random(size)
    out = np.empty(size, dtype=np.int64)
    for i in range(plan.n):
        sel = qubits == i
        if not sel.any():
            continue
        cdf = plan._axis_cdf[i]
        local = np.minimum(np.searchsorted(cdf, u[sel], side="right"), len(cdf) - 1)
        out[sel] = plan._axis_offset[i] + local
    return out


def sample_setting(plan: SamplingPlan, rng: np.random.Generator) -> Setting:
    return plan.support[int(sample_indices(plan, rng, 1)[0])]


def backprop_observable(target: CpsTarget, s: Setting) -> PauliString:
    """The observable ``C P^(i) C†`` to measure for setting ``s``."""
    return conjugate(target.tableau, embed_single(s.axis, s.qubit, target.n))
