"""Magic-state-injection compilation and execution.

Every ``T q`` becomes the one-ancilla gadget: ``CNOT q -> a`` into a fresh
``T|+>`` ancilla ``a``, measure ``Z_a``, and on outcome -1 apply ``S q``.
All Clifford gates (including the gadget entanglers) are moved to the front,
so the device only prepares the product state, applies one Clifford ``C`` and
then performs Pauli measurements.

Moving a Clifford ``V`` past a later measurement of ``O`` turns it into a
measurement of ``V† O V``.  With ``R_k`` the Cliffords that originally
followed gadget ``k``, the ancilla measurement becomes ``R_k Z_a R_k†`` and
the conditional ``S`` becomes the Clifford ``R_k S_q R_k†``, which is never
applied but accumulated in a frame ``F``; each scheduled observable ``O`` is
measured as ``F† O F``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import dense
from .certify import CertResult, VerifyConfig, verify_noniid
from .clifford import (
    CLIFFORD_GATES,
    NON_CLIFFORD_GATES,
    CircuitError,
    CliffordCircuit,
    CliffordTableau,
    Gate,
    compose,
    inverse,
    parse_gate_lines,
    random_circuit,
    tableau_from_circuit,
)
from .pauli import PauliString, embed_single
from .prover import MeasurementSession, ProverSpec, SessionError, open_session
from .target import NAMED_STATES, CpsTarget, build_plan


@dataclass(frozen=True)
class UniversalCircuit:
    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 1:
            raise CircuitError(f"circuit width must be positive, got {self.n}")
        for g in self.gates:
            if g.name not in CLIFFORD_GATES + NON_CLIFFORD_GATES:
                raise CircuitError(f"unsupported gate {g.name}")
            if any(q >= self.n for q in g.qubits):
                raise CircuitError(f"gate {g} exceeds circuit width {self.n}")

    @property
    def t_count(self) -> int:
        return sum(g.name == "T" for g in self.gates)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> UniversalCircuit:
        width, gates = parse_gate_lines(text, n, CLIFFORD_GATES + NON_CLIFFORD_GATES)
        return cls(width, gates)

    @classmethod
    def load(cls, path: str | Path) -> UniversalCircuit:
        return cls.parse(Path(path).read_text())

    def to_text(self) -> str:
        return "\n".join([f"QUBITS {self.n}", *map(str, self.gates)]) + "\n"


def random_universal_circuit(n: int, depth: int, t_count: int, rng: np.random.Generator) -> UniversalCircuit:
    """``depth`` random Clifford gates with ``t_count`` T gates at random positions."""
    gates = list(random_circuit(n, depth, rng).gates)
    for _ in range(t_count):
        pos = int(rng.integers(len(gates) + 1))
        gates.insert(pos, Gate("T", (int(rng.integers(n)),)))
    return UniversalCircuit(n, tuple(gates))


@dataclass(frozen=True)
class MsiStep:
    """One ancilla measurement with its conditional frame update."""

    ancilla: int
    data_qubit: int
    base: PauliString
    correction: CliffordTableau
    correction_inverse: CliffordTableau


@dataclass(frozen=True)
class MsiProgram:
    width: int
    cps: CpsTarget
    schedule: tuple[MsiStep, ...]
    outputs: tuple[PauliString, ...]
    # frames depend only on the ancilla outcomes so far; shared across shots
    _frames: dict[tuple[bool, ...], PauliFrame] = field(default_factory=dict, compare=False, repr=False)

    @property
    def t_count(self) -> int:
        return len(self.schedule)

    def frame_after(self, history: tuple[bool, ...]) -> PauliFrame:
        """Frame after the first ``len(history)`` ancilla outcomes (True means -1)."""
        frame = self._frames.get(history)
        if frame is None:
            if not history:
                frame = PauliFrame(self.cps.n)
            else:
                frame = self.frame_after(history[:-1])
                if history[-1]:
                    frame = frame.copy()
                    frame.update(self.schedule[len(history) - 1])
            self._frames[history] = frame
        return frame

    def to_json(self, states_file: str | None = None, circuit_file: str | None = None) -> dict[str, Any]:
        return {
            "width": self.width,
            "t_count": self.t_count,
            "cps": {
                "n": self.cps.n,
                "states": states_file or ["0"] * self.width + ["T"] * self.t_count,
                "circuit": circuit_file or [str(g) for g in self.cps.circuit.gates],
            },
            "schedule": [
                {
                    "ancilla": step.ancilla,
                    "data_qubit": step.data_qubit,
                    "base_pauli": str(step.base),
                    "on_minus_one": f"S {step.data_qubit} conjugated by later Cliffords",
                    "correction_images": {
                        "X": [str(p) for p in step.correction.x_images],
                        "Z": [str(p) for p in step.correction.z_images],
                    },
                }
                for step in self.schedule
            ],
            "outputs": [str(p) for p in self.outputs],
        }


def compile_msi(circ: UniversalCircuit) -> MsiProgram:
    w, t = circ.n, circ.t_count
    width = w + t
    static: list[Gate] = []
    gadgets: list[tuple[int, int, int]] = []  # (data qubit, ancilla, position in static)
    for g in circ.gates:
        if g.name == "T":
            ancilla = w + len(gadgets)
            static.append(Gate("CNOT", (g.qubits[0], ancilla)))
            gadgets.append((g.qubits[0], ancilla, len(static)))
        else:
            static.append(g)

    states = tuple([NAMED_STATES["0"]] * w + [NAMED_STATES["T"]] * t)
    cps = CpsTarget(states, CliffordCircuit(width, tuple(static)))

    schedule = []
    for q, a, pos in gadgets:
        later = tableau_from_circuit(CliffordCircuit(width, tuple(static[pos:])))
        later_inv = inverse(later)
        s_gate = tableau_from_circuit(CliffordCircuit(width, (Gate("S", (q,)),)))
        correction = compose(later, compose(s_gate, later_inv))
        schedule.append(
            MsiStep(
                ancilla=a,
                data_qubit=q,
                base=later.apply(embed_single("Z", a, width)),
                correction=correction,
                correction_inverse=inverse(correction),
            )
        )
    outputs = tuple(embed_single("Z", j, width) for j in range(w))
    return MsiProgram(w, cps, tuple(schedule), outputs)


class PauliFrame:
    """Accumulated conditional Clifford ``F`` together with ``F†``."""

    def __init__(self, n: int):
        self.tableau = CliffordTableau.identity(n)
        self.inverse = self.tableau
        self._seen: dict[PauliString, PauliString] = {}

    def update(self, step: MsiStep) -> None:
        self.tableau = compose(step.correction, self.tableau)
        self.inverse = compose(self.inverse, step.correction_inverse)
        self._seen = {}

    def observable(self, base: PauliString) -> PauliString:
        """``F† base F``, the observable to measure on the held state."""
        out = self._seen.get(base)
        if out is None:
            out = self._seen[base] = self.inverse.apply(base)
        return out

    def copy(self) -> PauliFrame:
        other = PauliFrame.__new__(PauliFrame)
        other.tableau, other.inverse = self.tableau, self.inverse
        other._seen = dict(self._seen)
        return other


def run_msi(program: MsiProgram, session: MeasurementSession) -> str:
    """Execute the adaptive schedule on one copy; returns output bits (qubit 0 first)."""
    if not session.adaptive:
        raise SessionError("MSI execution needs an adaptive session")
    if session.n != program.cps.n:
        raise SessionError(f"session width {session.n} does not match program width {program.cps.n}")
    history: tuple[bool, ...] = ()
    for step in program.schedule:
        frame = program.frame_after(history)
        history += (session.measure(frame.observable(step.base)) == -1,)
    frame = program.frame_after(history)
    bits = []
    for z in program.outputs:
        bits.append("0" if session.measure(frame.observable(z)) == 1 else "1")
    return "".join(bits)


def branch_distribution(program: MsiProgram, state: np.ndarray, cutoff: float = 1e-14) -> dict[str, float]:
    """Exact output distribution by enumerating every measurement branch."""
    dist: dict[str, float] = {}
    observables = [(step, step.base) for step in program.schedule] + [(None, z) for z in program.outputs]

    def walk(state, k, frame, prob, bits):
        if k == len(observables):
            dist[bits] = dist.get(bits, 0.0) + prob
            return
        step, base = observables[k]
        obs = frame.observable(base)
        ev = dense.expectation(state, obs)
        for outcome in (1, -1):
            p = (1 + outcome * ev) / 2
            if p * prob <= cutoff:
                continue
            post = dense.project(state, obs, outcome)
            if step is None:
                walk(post, k + 1, frame, prob * p, bits + ("0" if outcome == 1 else "1"))
            else:
                nxt = frame
                if outcome == -1:
                    nxt = frame.copy()
                    nxt.update(step)
                walk(post, k + 1, nxt, prob * p, bits)

    walk(np.asarray(state, dtype=complex), 0, PauliFrame(program.cps.n), 1.0, "")
    return dist


def ideal_distribution(circ: UniversalCircuit) -> dict[str, float]:
    """Dense statevector simulation of the original circuit, measured in Z."""
    return dense.z_distribution(dense.simulate_circuit(circ))


@dataclass
class MsiRun:
    accept: bool
    certification: CertResult
    outputs: list[str] | None
    bound: float
    kept: MeasurementSession | None = None

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for bits in self.outputs or []:
            out[bits] = out.get(bits, 0) + 1
        return dict(sorted(out.items()))


def verify_and_run(
    program: MsiProgram,
    prover: ProverSpec,
    vcfg: VerifyConfig,
    rng: np.random.Generator,
    shots: int = 1,
) -> MsiRun:
    """Certify the resource state, then run the computation on the kept copy.

    Only the first shot uses the kept copy itself; further shots run on fresh
    copies of the same kept state, which is a simulation shortcut for
    estimating its output distribution.
    """
    if prover.n != program.cps.n:
        raise SessionError(f"prover width {prover.n} does not match program width {program.cps.n}")
    plan = build_plan(program.cps, vcfg.cert.mode)
    session = open_session(prover, vcfg.n_total, rng)
    result, kept = verify_noniid(program.cps, plan, session, vcfg, rng)
    bound = math.sqrt(vcfg.cert.epsilon)
    if not result.accept:
        return MsiRun(False, result, None, bound, kept)
    outputs = [run_msi(program, kept if i == 0 else kept.fresh()) for i in range(shots)]
    return MsiRun(True, result, outputs, bound, kept)


def program_json(program: MsiProgram) -> str:
    return json.dumps(program.to_json(), indent=2)
