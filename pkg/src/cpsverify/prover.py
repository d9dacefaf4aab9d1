"""Simulated provers and the verifier's measurement sessions.

Honest i.i.d. provers prepare ``Λ_post(C (⊗_j Λ_j(psi_j)) C†)``: single-qubit
noise before the known Clifford, Pauli noise after it.  Their Pauli
expectations are computed without dense simulation by pulling the observable
back through ``C`` and multiplying per-qubit Bloch components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import dense
from .dense import PauliChannel, SingleQubitChannel
from .pauli import PauliAxis, PauliString, commutes
from .target import CpsTarget


class SessionError(RuntimeError):
    """Session misuse: exhausted copies, double measurement, wrong mode."""


@dataclass(frozen=True)
class HonestIid:
    target: CpsTarget
    pre_channels: tuple[SingleQubitChannel, ...] = ()
    post_pauli: PauliChannel = field(default_factory=PauliChannel)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pre_channels", tuple(self.pre_channels))
        for ch in self.pre_channels:
            if isinstance(ch, PauliChannel):
                raise ValueError("pre-Clifford noise must be single-qubit channels")
            if not 0 <= ch.qubit < self.target.n:
                raise ValueError(f"channel {ch} acts outside the {self.target.n}-qubit target")
        if self.post_pauli.terms and self.post_pauli.terms[0][0].n != self.target.n:
            raise ValueError("post-Clifford Pauli noise width does not match the target")

    @property
    def n(self) -> int:
        return self.target.n

    @cached_property
    def local_densities(self) -> tuple[np.ndarray, ...]:
        out = []
        for j, state in enumerate(self.target.states):
            rho = state.density()
            for ch in self.pre_channels:
                if ch.qubit == j:
                    rho = dense.apply_local_channel(rho, ch)
            out.append(rho)
        return tuple(out)

    @cached_property
    def local_bloch(self) -> np.ndarray:
        """Rows ``(1, <X>, <Y>, <Z>)`` of each noisy single-qubit state."""
        rows = []
        for rho in self.local_densities:
            rows.append(
                [1.0]
                + [
                    float(np.real(np.trace(rho @ dense.PAULI_2X2[a])))
                    for a in (PauliAxis.X, PauliAxis.Y, PauliAxis.Z)
                ]
            )
        return np.array(rows)

    def dense_state(self) -> np.ndarray:
        """Dense prepared state: a vector when noiseless, else a density matrix."""
        return self._dense

    @cached_property
    def _dense(self) -> np.ndarray:
        if not self.pre_channels and not self.post_pauli.terms:
            return dense.build_cps_dense(self.target)
        rho = np.ones((1, 1), dtype=complex)
        for local in self.local_densities:
            rho = np.kron(rho, local)
        rho = dense.apply_circuit(rho, self.target.circuit)
        if self.post_pauli.terms:
            rho = dense.apply_channel(rho, self.post_pauli)
        return rho


@dataclass(frozen=True, eq=False)
class FixedAlternative:
    """A prover that always sends the given dense state (vector or density matrix)."""

    state: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "state", np.asarray(self.state, dtype=complex))
        dense.num_qubits(self.state)

    @property
    def n(self) -> int:
        return dense.num_qubits(self.state)

    def dense_state(self) -> np.ndarray:
        return self.state


Strategy = Union[HonestIid, FixedAlternative]


@dataclass(frozen=True)
class CorrelatedClassical:
    """Shared-randomness adversary: one strategy is drawn per session."""

    strategies: tuple[tuple[float, Strategy], ...]

    def __post_init__(self) -> None:
        strategies = tuple((float(p), s) for p, s in self.strategies)
        object.__setattr__(self, "strategies", strategies)
        if not strategies:
            raise ValueError("need at least one strategy")
        if any(p < 0 for p, _ in strategies) or not math.isclose(sum(p for p, _ in strategies), 1.0, abs_tol=1e-9):
            raise ValueError("strategy probabilities must be non-negative and sum to 1")
        if len({s.n for _, s in strategies}) != 1:
            raise ValueError("strategies act on different widths")

    @property
    def n(self) -> int:
        return self.strategies[0][1].n

    def dense_state(self) -> np.ndarray:
        """Single-copy marginal: the probability-weighted mixture."""
        return sum(p * dense.as_density(s.dense_state()) for p, s in self.strategies)


ProverSpec = Union[HonestIid, CorrelatedClassical, FixedAlternative]


def honest_expectation(spec: HonestIid, q: PauliString) -> float:
    """``Tr[rho q]`` for an honest prover via back-propagation through ``C``."""
    if not q.is_hermitian:
        raise ValueError(f"observable {q} is not Hermitian")
    back = spec.target.tableau.inverse_tableau.apply(q)
    value = float(back.sign)
    support = back.x | back.z
    bloch = spec.local_bloch
    while support and value != 0.0:
        low = support & -support
        j = low.bit_length() - 1
        column = ((back.x >> j) & 1) + 2 * ((back.z >> j) & 1)  # X=1, Z=2, Y=3
        value *= bloch[j, (0, 1, 3, 2)[column]]
        support ^= low
    flipped = math.fsum(prob for p, prob in spec.post_pauli.terms if not commutes(p, q))
    return value * (1 - 2 * flipped)


def strategy_expectation(strategy: Strategy, q: PauliString) -> float:
    if isinstance(strategy, HonestIid):
        return honest_expectation(strategy, q)
    return dense.expectation(strategy.state, q)


def expectation(spec: ProverSpec, q: PauliString) -> float:
    """Single-copy expectation of ``q`` on the prover's (marginal) state."""
    if isinstance(spec, CorrelatedClassical):
        return math.fsum(p * strategy_expectation(s, q) for p, s in spec.strategies)
    return strategy_expectation(spec, q)


class MeasurementSession:
    """The verifier's view of ``n_copies`` registers sent by a prover.

    In single-shot mode every copy is measured at most once and outcomes are
    drawn from exact expectations.  In adaptive mode the current copy is held
    as a dense state and measurements collapse it.
    """

    def __init__(
        self,
        spec: ProverSpec,
        n_copies: int,
        rng: np.random.Generator,
        adaptive: bool = False,
        *,
        strategy_index: int | None = None,
    ):
        if n_copies < 1:
            raise ValueError("a session needs at least one copy")
        self.spec = spec
        self.n_copies = int(n_copies)
        self.adaptive = adaptive
        self._rng = rng
        self.strategy_index = strategy_index
        if isinstance(spec, CorrelatedClassical):
            if strategy_index is None:
                probs = np.array([p for p, _ in spec.strategies])
                self.strategy_index = int(rng.choice(len(probs), p=probs / probs.sum()))
            self.strategy: Strategy = spec.strategies[self.strategy_index][1]
        else:
            self.strategy = spec
        # every copy below the cursor is consumed; explicit holds consumed copies above it
        self._cursor = 0
        self._explicit: set[int] = set()
        self._current: int | None = None
        self._state: np.ndarray | None = None
        self._cache: dict[PauliString, float] = {}

    @property
    def n(self) -> int:
        return self.strategy.n

    @property
    def remaining(self) -> int:
        return self.n_copies - self._cursor - len(self._explicit)

    def _is_used(self, copy: int) -> bool:
        return copy < self._cursor or copy in self._explicit

    def _advance(self) -> None:
        while self._cursor in self._explicit:
            self._explicit.discard(self._cursor)
            self._cursor += 1

    def _take_block(self, count: int) -> np.ndarray:
        """The next ``count`` unused copies in index order."""
        if self.remaining < count:
            raise SessionError(f"need {count} copies, only {self.remaining} left")
        self._advance()
        if not self._explicit or min(self._explicit) >= self._cursor + count:
            block = np.arange(self._cursor, self._cursor + count, dtype=np.int64)
            self._cursor += count
            self._advance()
            return block
        block = []
        while len(block) < count:
            if self._cursor in self._explicit:
                self._explicit.discard(self._cursor)
            else:
                block.append(self._cursor)
            self._cursor += 1
        self._advance()
        return np.array(block, dtype=np.int64)

    # -- copy bookkeeping --------------------------------------------------

    def _take(self, copy: int | None) -> int:
        if copy is None:
            if self.remaining < 1:
                raise SessionError("all copies have been consumed")
            return int(self._take_block(1)[0])
        copy = int(copy)
        if not 0 <= copy < self.n_copies:
            raise SessionError(f"copy {copy} does not exist")
        if self._is_used(copy):
            raise SessionError(f"copy {copy} was already measured")
        self._explicit.add(copy)
        self._advance()
        return copy

    def next_copy(self) -> int:
        """Advance to a fresh copy (adaptive mode materializes its state)."""
        copy = self._take(None)
        if self.adaptive:
            self._current = copy
            self._state = self.strategy.dense_state().copy()
        return copy

    # -- measurement -------------------------------------------------------

    def expectation(self, q: PauliString) -> float:
        if q not in self._cache:
            self._cache[q] = strategy_expectation(self.strategy, q)
        return self._cache[q]

    def measure(self, q: PauliString, copy: int | None = None) -> int:
        if q.n != self.n:
            raise SessionError(f"observable width {q.n} does not match register width {self.n}")
        if self.adaptive:
            if copy is not None and copy != self._current:
                raise SessionError("adaptive sessions measure the current copy only")
            if self._state is None:
                self.next_copy()
            outcome, self._state = dense.measure_pauli(self._state, q, self._rng)
            return outcome
        self._take(copy)
        prob_plus = (1 + self.expectation(q)) / 2
        return 1 if self._rng.random() < prob_plus else -1

    def measure_indexed(
        self,
        observables: Sequence[PauliString],
        which: np.ndarray,
        copies: np.ndarray | None = None,
    ) -> np.ndarray:
        """Measure ``observables[which[j]]`` on copy ``copies[j]`` (single-shot only).

        Without ``copies`` the next ``len(which)`` unused copies are taken in order.
        """
        if self.adaptive:
            raise SessionError("batched measurement needs a single-shot session")
        which = np.asarray(which, dtype=np.int64)
        for q in observables:
            if q.n != self.n:
                raise SessionError(f"observable width {q.n} does not match register width {self.n}")
        if copies is None:
            copies = self._take_block(len(which))
        else:
            copies = np.asarray(copies, dtype=np.int64)
            if len(copies) != len(which):
                raise SessionError("one copy index per measurement is required")
            if np.any(copies < 0) or np.any(copies >= self.n_copies):
                raise SessionError("copy index out of range")
            if len(np.unique(copies)) != len(copies) or any(self._is_used(int(c)) for c in copies):
                raise SessionError("a copy would be measured twice")
            self._explicit.update(int(c) for c in copies)
            self._advance()
        means = np.array([self.expectation(q) for q in observables])
        prob_plus = (1 + means[which]) / 2
        return np.where(self._rng.random(len(which)) < prob_plus, 1, -1).astype(np.int8)

    # -- kept registers ----------------------------------------------------

    def keep(self, copy: int) -> MeasurementSession:
        """Hand over copy ``copy`` as a one-copy adaptive session."""
        self._take(copy)
        return self._adaptive_copy()

    def fresh(self) -> MeasurementSession:
        """Another independent copy of this session's state, for repeated shots."""
        return self._adaptive_copy()

    def _adaptive_copy(self) -> MeasurementSession:
        kept = MeasurementSession(
            self.spec, 1, self._rng, adaptive=True, strategy_index=self.strategy_index
        )
        kept.next_copy()
        return kept

    def density(self) -> np.ndarray:
        """Dense density of the current adaptive copy, or of one fresh copy."""
        if self.adaptive and self._state is not None:
            return dense.as_density(self._state)
        return dense.as_density(self.strategy.dense_state())


def open_session(spec: ProverSpec, n_copies: int, rng: np.random.Generator, adaptive: bool = False) -> MeasurementSession:
    return MeasurementSession(spec, n_copies, rng, adaptive=adaptive)
