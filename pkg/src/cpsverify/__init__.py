"""Certification of Clifford-enhanced product states and magic-state-injection computation."""

from .certify import (
    CertConfig,
    CertResult,
    VerifyConfig,
    certify_iid,
    expected_witness,
    sample_size_iid,
    sample_size_noniid,
    verify_noniid,
)
from .clifford import CliffordCircuit, CliffordTableau, Gate, conjugate, tableau_from_circuit
from .msi import MsiProgram, UniversalCircuit, compile_msi, run_msi, verify_and_run
from .pauli import PauliAxis, PauliString
from .prover import CorrelatedClassical, FixedAlternative, HonestIid, honest_expectation, open_session
from .target import CpsTarget, SamplingMode, SingleQubitState, backprop_observable, build_plan, chi

__all__ = [
    "CertConfig",
    "CertResult",
    "VerifyConfig",
    "certify_iid",
    "expected_witness",
    "sample_size_iid",
    "sample_size_noniid",
    "verify_noniid",
    "CliffordCircuit",
    "CliffordTableau",
    "Gate",
    "conjugate",
    "tableau_from_circuit",
    "MsiProgram",
    "UniversalCircuit",
    "compile_msi",
    "run_msi",
    "verify_and_run",
    "PauliAxis",
    "PauliString",
    "CorrelatedClassical",
    "FixedAlternative",
    "HonestIid",
    "honest_expectation",
    "open_session",
    "CpsTarget",
    "SamplingMode",
    "SingleQubitState",
    "backprop_observable",
    "build_plan",
    "chi",
]
