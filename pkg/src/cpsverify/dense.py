"""Exact dense-matrix reference simulator for small registers.

Everything here is brute force on ``2**n`` amplitudes or ``2**n x 2**n``
density matrices and is used as ground truth for the scalable code paths.
Qubit 0 is the most significant bit of a basis index (leftmost Kronecker
factor), matching the left-to-right text form of Pauli strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .clifford import Gate
from .pauli import PauliAxis, PauliString
from .target import CpsTarget

MAX_QUBITS = 12
DFE_MAX_QUBITS = 6
PSD_TOL = 1e-9


class DimensionError(ValueError):
    """Register too large for dense simulation, or mismatched dimensions."""


_SQ2 = 1 / math.sqrt(2)
PAULI_2X2 = {
    PauliAxis.I: np.eye(2, dtype=complex),
    PauliAxis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliAxis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliAxis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
GATE_MATRICES = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "X": PAULI_2X2[PauliAxis.X],
    "Y": PAULI_2X2[PauliAxis.Y],
    "Z": PAULI_2X2[PauliAxis.Z],
    "T": np.diag([1, np.exp(1j * math.pi / 4)]).astype(complex),
    "CNOT": _CNOT,
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def _check_width(n: int, cap: int = MAX_QUBITS) -> None:
    if n > cap:
        raise DimensionError(f"{n} qubits exceeds the dense cap of {cap}")


def num_qubits(state: np.ndarray) -> int:
    d = state.shape[0]
    n = d.bit_length() - 1
    if 1 << n != d or (state.ndim == 2 and state.shape[1] != d) or state.ndim > 2:
        raise DimensionError(f"shape {state.shape} is not a qubit register")
    return n


def as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


# -- Paulis ---------------------------------------------------------------


def pauli_matrix(p: PauliString) -> np.ndarray:
    _check_width(p.n)
    out = np.array([[1j**p.phase]], dtype=complex)
    for axis in p.axes:
        out = np.kron(out, PAULI_2X2[axis])
    return out


def _index_mask(bits: int, n: int) -> int:
    mask = 0
    for j in range(n):
        if (bits >> j) & 1:
            mask |= 1 << (n - 1 - j)
    return mask


@lru_cache(maxsize=4096)
def _pauli_action(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(idx, coef)`` with ``P|b> = coef[b] |idx[b]>``."""
    n = p.n
    xm, zm = _index_mask(p.x, n), _index_mask(p.z, n)
    b = np.arange(1 << n, dtype=np.uint64)
    parity = np.bitwise_count(b & np.uint64(zm)) & 1
    coef = (1j ** ((p.phase + (p.x & p.z).bit_count()) % 4)) * (1 - 2 * parity.astype(float))
    idx = (b ^ np.uint64(xm)).astype(np.int64)
    idx.flags.writeable = False
    coef.flags.writeable = False
    return idx, coef


def apply_pauli(p: PauliString, state: np.ndarray) -> np.ndarray:
    """``P @ state`` for a vector or a matrix (acting on rows)."""
    if num_qubits(state) != p.n:
        raise DimensionError(f"Pauli width {p.n} does not match state")
    idx, coef = _pauli_action(p)
    out = np.empty_like(state, dtype=complex)
    if state.ndim == 1:
        out[idx] = coef * state
    else:
        out[idx, :] = coef[:, None] * state
    return out


def expectation(rho: np.ndarray, p: PauliString) -> float:
    """``Tr[rho P]`` for a density matrix or ``<v|P|v>`` for a vector."""
    if not p.is_hermitian:
        raise ValueError(f"observable {p} is not Hermitian")
    rho = np.asarray(rho, dtype=complex)
    if num_qubits(rho) != p.n:
        raise DimensionError(f"Pauli width {p.n} does not match state")
    idx, coef = _pauli_action(p)
    if rho.ndim == 1:
        return float(np.real(np.vdot(rho[idx], coef * rho)))
    return float(np.real(np.sum(rho[np.arange(len(idx)), idx] * coef)))


# -- gates and circuits ---------------------------------------------------


def _apply_to_axes(tensor: np.ndarray, u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    u = u.reshape((2,) * (2 * k))
    moved = np.tensordot(u, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(moved, list(range(k)), list(axes))


def apply_unitary(state: np.ndarray, u: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """``U`` on ``qubits`` of a vector, or ``U rho U†`` on a density matrix."""
    n = num_qubits(state)
    if state.ndim == 1:
        t = _apply_to_axes(state.reshape((2,) * n), u, qubits)
        return t.reshape(1 << n)
    t = state.reshape((2,) * (2 * n))
    t = _apply_to_axes(t, u, qubits)
    t = _apply_to_axes(t, u.conj(), [n + q for q in qubits])
    return t.reshape(1 << n, 1 << n)


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    return apply_unitary(state, GATE_MATRICES[gate.name], gate.qubits)


def apply_circuit(state: np.ndarray, circuit) -> np.ndarray:
    for gate in circuit.gates:
        state = apply_gate(state, gate)
    return state


def circuit_unitary(circuit) -> np.ndarray:
    n = circuit.n
    _check_width(n)
    t = np.eye(1 << n, dtype=complex).reshape((2,) * (2 * n))
    for gate in circuit.gates:
        t = _apply_to_axes(t, GATE_MATRICES[gate.name], gate.qubits)
    return t.reshape(1 << n, 1 << n)


def product_state(amplitudes: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for a in amplitudes:
        out = np.kron(out, a)
    return out


def build_cps_dense(target: CpsTarget) -> np.ndarray:
    _check_width(target.n)
    psi = product_state([s.amplitudes() for s in target.states])
    return apply_circuit(psi, target.circuit)


def zero_state(n: int) -> np.ndarray:
    _check_width(n)
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1
    return v


# -- channels -------------------------------------------------------------


def _validate_local(channel, param: str | None) -> None:
    if isinstance(channel.qubit, bool) or int(channel.qubit) != channel.qubit or channel.qubit < 0:
        raise ValueError(f"channel qubit must be a non-negative integer, got {channel.qubit!r}")
    object.__setattr__(channel, "qubit", int(channel.qubit))
    if param is not None:
        value = float(getattr(channel, param))
        if not 0 <= value <= 1:
            raise ValueError(f"{type(channel).__name__} parameter {value} outside [0, 1]")
        object.__setattr__(channel, param, value)


@dataclass(frozen=True)
class Depolarizing:
    """``rho -> (1 - p) rho + p I/2`` on one qubit."""

    p: float
    qubit: int

    def __post_init__(self) -> None:
        _validate_local(self, "p")

    def kraus(self):
        p = self.p
        return [math.sqrt(1 - 3 * p / 4) * PAULI_2X2[PauliAxis.I]] + [
            math.sqrt(p / 4) * PAULI_2X2[a] for a in (PauliAxis.X, PauliAxis.Y, PauliAxis.Z)
        ]


@dataclass(frozen=True)
class Dephasing:
    """Off-diagonal elements shrink by ``1 - p``; ``p = 1`` fully dephases."""

    p: float
    qubit: int

    def __post_init__(self) -> None:
        _validate_local(self, "p")

    def kraus(self):
        return [
            math.sqrt(1 - self.p / 2) * PAULI_2X2[PauliAxis.I],
            math.sqrt(self.p / 2) * PAULI_2X2[PauliAxis.Z],
        ]


@dataclass(frozen=True)
class AmplitudeDamping:
    gamma: float
    qubit: int

    def __post_init__(self) -> None:
        _validate_local(self, "gamma")

    def kraus(self):
        g = self.gamma
        return [
            np.array([[1, 0], [0, math.sqrt(1 - g)]], dtype=complex),
            np.array([[0, math.sqrt(g)], [0, 0]], dtype=complex),
        ]


@dataclass(frozen=True)
class UnitaryRotation:
    """Coherent error ``exp(-i angle/2 sigma_axis)``."""

    axis: PauliAxis
    angle: float
    qubit: int

    def __post_init__(self) -> None:
        _validate_local(self, None)
        object.__setattr__(self, "axis", PauliAxis.parse(self.axis))
        object.__setattr__(self, "angle", float(self.angle))

    def kraus(self):
        sigma = PAULI_2X2[self.axis]
        u = math.cos(self.angle / 2) * np.eye(2) - 1j * math.sin(self.angle / 2) * sigma
        return [u]


@dataclass(frozen=True)
class PauliChannel:
    """``rho -> (1 - sum p) rho + sum_k p_k P_k rho P_k``."""

    terms: tuple[tuple[PauliString, float], ...] = ()

    def __post_init__(self) -> None:
        terms = tuple((p, float(prob)) for p, prob in self.terms)
        object.__setattr__(self, "terms", terms)
        for p, prob in terms:
            if not p.is_hermitian:
                raise ValueError(f"Pauli channel term {p} is not Hermitian")
            if not 0 <= prob <= 1:
                raise ValueError(f"probability {prob} outside [0, 1]")
        if sum(prob for _, prob in terms) > 1 + 1e-12:
            raise ValueError("Pauli channel probabilities sum above 1")
        widths = {p.n for p, _ in terms}
        if len(widths) > 1:
            raise ValueError("Pauli channel terms have mixed widths")

    @property
    def total(self) -> float:
        return math.fsum(prob for _, prob in self.terms)


SingleQubitChannel = Union[Depolarizing, Dephasing, AmplitudeDamping, UnitaryRotation]
Channel = Union[SingleQubitChannel, PauliChannel]


def _check_probability(channel) -> None:
    value = getattr(channel, "p", getattr(channel, "gamma", 0.0))
    if not 0 <= value <= 1:
        raise ValueError(f"{type(channel).__name__} parameter {value} outside [0, 1]")


def apply_channel(rho: np.ndarray, channel: Channel) -> np.ndarray:
    rho = as_density(rho)
    n = num_qubits(rho)
    if isinstance(channel, PauliChannel):
        out = (1 - channel.total) * rho
        for p, prob in channel.terms:
            if p.n != n:
                raise DimensionError(f"Pauli channel width {p.n} does not match {n}")
            pr = apply_pauli(p, rho)
            out = out + prob * apply_pauli(p, pr.conj().T).conj().T
        return out
    _check_probability(channel)
    if not 0 <= channel.qubit < n:
        raise DimensionError(f"channel qubit {channel.qubit} out of range")
    out = np.zeros_like(rho)
    for k in channel.kraus():
        out = out + apply_unitary(rho, k, [channel.qubit])
    return out


def apply_local_channel(rho2: np.ndarray, channel: SingleQubitChannel) -> np.ndarray:
    """Apply a single-qubit channel to a lone 2x2 density matrix."""
    return apply_channel(rho2, replace(channel, qubit=0))


# -- figures of merit ----------------------------------------------------


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """``<psi|rho|psi>``; ``rho`` may also be a pure state vector."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape[0] != psi.shape[0]:
        raise DimensionError("fidelity arguments have different dimensions")
    if rho.ndim == 1:
        return float(abs(np.vdot(psi, rho)) ** 2)
    return float(np.real(np.vdot(psi, rho @ psi)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    rho, sigma = as_density(rho), as_density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError("trace distance arguments have different dimensions")
    diff = rho - sigma
    evals = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.sum(np.abs(evals)))


def reduced_qubit(rho: np.ndarray, i: int) -> np.ndarray:
    """Single-qubit reduced density matrix of qubit ``i``."""
    rho = as_density(rho)
    n = num_qubits(rho)
    t = rho.reshape(1 << i, 2, 1 << (n - i - 1), 1 << i, 2, 1 << (n - i - 1))
    return np.einsum("aibajb->ij", t)


def exact_witness(rho: np.ndarray, target: CpsTarget) -> float:
    """``1 - sum_i (1 - F_i)`` for the single-qubit marginals of ``C† rho C``."""
    _check_width(target.n)
    rho = as_density(rho)
    if num_qubits(rho) != target.n:
        raise DimensionError("state width does not match target")
    back = apply_circuit(rho, target.circuit.inverse())
    total = 1.0
    for i, state in enumerate(target.states):
        total -= 1 - fidelity(reduced_qubit(back, i), state.amplitudes())
    return total


def is_density(rho: np.ndarray, tol: float = PSD_TOL) -> bool:
    rho = np.asarray(rho)
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        return False
    if abs(np.trace(rho) - 1) > 1e-9:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -tol)


# -- measurement ------------------------------------------------------------


def measure_pauli(state: np.ndarray, p: PauliString, rng: np.random.Generator):
    """Projective measurement of ``p``; returns ``(outcome, post_state)``."""
    if not p.is_hermitian:
        raise ValueError(f"observable {p} is not Hermitian")
    state = np.asarray(state, dtype=complex)
    if num_qubits(state) != p.n:
        raise DimensionError(f"Pauli width {p.n} does not match state")
    ev = expectation(state, p)
    prob_plus = min(1.0, max(0.0, (1 + ev) / 2))
    outcome = 1 if rng.random() < prob_plus else -1
    return outcome, project(state, p, outcome)


def project(state: np.ndarray, p: PauliString, outcome: int) -> np.ndarray:
    """Normalized ``(I + s P)/2`` projection of a vector or density matrix."""
    pv = apply_pauli(p, state)
    if state.ndim == 1:
        post = (state + outcome * pv) / 2
        norm = np.linalg.norm(post)
        if norm < 1e-15:
            raise ValueError(f"outcome {outcome} of {p} has zero probability")
        return post / norm
    half = (state + outcome * pv) / 2
    post = (half + outcome * apply_pauli(p, half.conj().T).conj().T) / 2
    tr = np.real(np.trace(post))
    if tr < 1e-15:
        raise ValueError(f"outcome {outcome} of {p} has zero probability")
    return post / tr


# -- global direct fidelity estimation -------------------------------------


def all_paulis(n: int):
    for x in range(1 << n):
        for z in range(1 << n):
            yield PauliString(n, x, z)


def characteristic_function(psi: np.ndarray) -> tuple[list[PauliString], np.ndarray]:
    """``chi(P) = <psi|P|psi> / d`` over all ``4**n`` Paulis."""
    n = num_qubits(psi)
    _check_width(n, DFE_MAX_QUBITS)
    paulis = list(all_paulis(n))
    values = np.array([expectation(psi, p) for p in paulis]) / (1 << n)
    return paulis, values


def dfe_sample_size(chi_l1: float, epsilon: float, delta: float) -> int:
    """Two-sided Hoeffding count for an estimator with range ``2 * chi_l1``."""
    return math.ceil(2 * chi_l1**2 / epsilon**2 * math.log(2 / delta))


def dfe_global(
    psi: np.ndarray,
    rho_source: np.ndarray,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    n_samples: int | None = None,
) -> float:
    """Direct fidelity estimate of ``<psi|rho|psi>`` from single-shot Pauli outcomes.

    Paulis are drawn with probability ``|chi(P)| / ||chi||_1`` over all ``4**n``
    operators (identity included, so the estimator is unbiased); each sample
    contributes ``||chi||_1 sgn(chi(P)) x`` with ``x = ±1`` the measured outcome.
    """
    paulis, values = characteristic_function(psi)
    if num_qubits(as_density(rho_source)) != num_qubits(psi):
        raise DimensionError("source and target widths differ")
    weights = np.abs(values)
    keep = weights > 1e-12
    paulis = [p for p, k in zip(paulis, keep) if k]
    values, weights = values[keep], weights[keep]
    norm = float(weights.sum())
    if n_samples is None:
        n_samples = dfe_sample_size(norm, epsilon, delta)
    expect = np.array([expectation(rho_source, p) for p in paulis])
    draws = rng.choice(len(paulis), size=n_samples, p=weights / norm)
    prob_plus = np.clip((1 + expect[draws]) / 2, 0.0, 1.0)
    outcomes = np.where(rng.random(n_samples) < prob_plus, 1.0, -1.0)
    return float(norm * np.mean(np.sign(values[draws]) * outcomes))


# -- universal circuits ------------------------------------------------------


def simulate_circuit(circuit, initial: np.ndarray | None = None) -> np.ndarray:
    """Statevector of any circuit over the dense gate set (Clifford + T)."""
    _check_width(circuit.n)
    state = zero_state(circuit.n) if initial is None else np.asarray(initial, dtype=complex)
    return apply_circuit(state, circuit)


def z_distribution(state: np.ndarray, qubits: Sequence[int] | None = None) -> dict[str, float]:
    """Computational-basis outcome probabilities, keyed by bit strings (qubit 0 first)."""
    rho_diag = np.abs(state) ** 2 if state.ndim == 1 else np.real(np.diag(state))
    n = num_qubits(state)
    qubits = list(range(n)) if qubits is None else list(qubits)
    probs = rho_diag.reshape((2,) * n)
    others = tuple(q for q in range(n) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    order = sorted(qubits)
    marg = np.moveaxis(marg, [order.index(q) for q in qubits], list(range(len(qubits))))
    out = {}
    for idx in np.ndindex(marg.shape):
        out["".join(map(str, idx))] = float(marg[idx])
    return out


def total_variation(p: dict[str, float], q: dict[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def cps_density(target: CpsTarget) -> np.ndarray:
    return as_density(build_cps_dense(target))
