"""Quick oracle-backed invariant checks run by ``cpsverify selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dense
from .certify import CertConfig, expected_witness, sample_size_iid
from .clifford import compose, conjugate, inverse, random_circuit, tableau_from_circuit
from .msi import branch_distribution, compile_msi, ideal_distribution, random_universal_circuit
from .pauli import PauliString
from .prover import HonestIid, honest_expectation
from .target import CpsTarget, SamplingMode, SingleQubitState, build_plan, chi


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _random_pauli(n: int, rng: np.random.Generator, hermitian: bool = True) -> PauliString:
    x, z = int(rng.integers(1 << n)), int(rng.integers(1 << n))
    phase = 2 * int(rng.integers(2)) if hermitian else int(rng.integers(4))
    return PauliString(n, x, z, phase)


def _random_state(rng: np.random.Generator) -> SingleQubitState:
    v = rng.normal(size=3)
    return SingleQubitState(tuple(v / np.linalg.norm(v)))


def _random_noisy(n: int, rng: np.random.Generator) -> HonestIid:
    target = CpsTarget(tuple(_random_state(rng) for _ in range(n)), random_circuit(n, 4 * n, rng))
    channels = [dense.Depolarizing(float(rng.uniform(0, 0.3)), j) for j in range(n)]
    channels += [dense.AmplitudeDamping(float(rng.uniform(0, 0.2)), j) for j in range(n)]
    post = dense.PauliChannel(((_random_pauli(n, rng).unsigned(), float(rng.uniform(0, 0.1))),))
    return HonestIid(target, channels, post)


def check_multiplication(rng) -> CheckResult:
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        p, q = _random_pauli(n, rng, False), _random_pauli(n, rng, False)
        diff = dense.pauli_matrix(p * q) - dense.pauli_matrix(p) @ dense.pauli_matrix(q)
        worst = max(worst, float(np.abs(diff).max()))
    return CheckResult("pauli multiplication vs matrices", worst < 1e-12, f"max error {worst:.1e}")


def check_conjugation(rng) -> CheckResult:
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        circ = random_circuit(n, 20, rng)
        p = _random_pauli(n, rng)
        u = dense.circuit_unitary(circ)
        got = dense.pauli_matrix(conjugate(tableau_from_circuit(circ), p))
        worst = max(worst, float(np.abs(got - u @ dense.pauli_matrix(p) @ u.conj().T).max()))
    return CheckResult("tableau conjugation vs dense unitary", worst < 1e-10, f"max error {worst:.1e}")


def check_inverse(rng) -> CheckResult:
    ok = True
    for _ in range(50):
        n = int(rng.integers(1, 6))
        t = tableau_from_circuit(random_circuit(n, 25, rng))
        ok &= compose(t, inverse(t)).is_identity() and t.is_valid()
    return CheckResult("tableau inverse and symplecticity", ok, "50 random circuits")


def check_chi(rng) -> CheckResult:
    worst = 0.0
    for _ in range(100):
        s = _random_state(rng)
        table = chi(s)
        rebuilt = sum(table.chi[a] * dense.PAULI_2X2[a] for a in table.chi)
        worst = max(worst, float(np.abs(rebuilt - s.density()).max()))
    magic = chi(SingleQubitState.named("T"))
    ok = worst < 1e-12 and math.isclose(magic.w, 1 / math.sqrt(2), abs_tol=1e-12)
    return CheckResult("characteristic function reconstruction", ok, f"max error {worst:.1e}")


def check_fast_path(rng) -> CheckResult:
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(1, 5))
        spec = _random_noisy(n, rng)
        rho = spec.dense_state()
        for _ in range(5):
            q = _random_pauli(n, rng)
            worst = max(worst, abs(honest_expectation(spec, q) - dense.expectation(rho, q)))
    return CheckResult("honest fast path vs dense expectation", worst < 1e-10, f"max error {worst:.1e}")


def check_witness(rng) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        spec = _random_noisy(n, rng)
        exact = dense.exact_witness(spec.dense_state(), spec.target)
        for mode in SamplingMode:
            worst = max(worst, abs(expected_witness(spec.target, build_plan(spec.target, mode), spec) - exact))
    return CheckResult("expected witness vs dense witness", worst < 1e-9, f"max error {worst:.1e}")


def check_witness_bound(rng) -> CheckResult:
    ok = True
    for _ in range(50):
        n = int(rng.integers(1, 5))
        spec = _random_noisy(n, rng)
        rho = spec.dense_state()
        psi = dense.build_cps_dense(spec.target)
        ok &= dense.exact_witness(rho, spec.target) <= dense.fidelity(rho, psi) + 1e-9
    return CheckResult("witness lower-bounds fidelity", ok, "50 noisy instances")


def check_sample_size(rng) -> CheckResult:
    plan = build_plan(CpsTarget.product(["0"]))
    n_iid = sample_size_iid(plan, CertConfig(0.3, 0.1))
    return CheckResult("sample size formula", n_iid == 150, f"N_iid(|0>, eps=0.3, delta=0.1) = {n_iid}")


def check_msi(rng) -> CheckResult:
    worst = 0.0
    for _ in range(10):
        circ = random_universal_circuit(int(rng.integers(1, 4)), 6, int(rng.integers(0, 3)), rng)
        program = compile_msi(circ)
        got = branch_distribution(program, dense.build_cps_dense(program.cps))
        worst = max(worst, dense.total_variation(got, ideal_distribution(circ)))
    return CheckResult("MSI branch enumeration vs dense simulation", worst < 1e-9, f"max TVD {worst:.1e}")


CHECKS: tuple[Callable[[np.random.Generator], CheckResult], ...] = (
    check_multiplication,
    check_conjugation,
    check_inverse,
    check_chi,
    check_fast_path,
    check_witness,
    check_witness_bound,
    check_sample_size,
    check_msi,
)


def run_selftest(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(rng) for check in CHECKS]
