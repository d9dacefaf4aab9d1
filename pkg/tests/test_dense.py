import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from cpsverify import dense
from cpsverify.clifford import CliffordCircuit, conjugate, random_circuit, tableau_from_circuit
from cpsverify.dense import (
    AmplitudeDamping,
    Dephasing,
    Depolarizing,
    DimensionError,
    PauliChannel,
    UnitaryRotation,
)
from cpsverify.msi import UniversalCircuit
from cpsverify.pauli import PauliAxis, PauliString
from cpsverify.target import NAMED_STATES, CpsTarget, SingleQubitState

R = 1 / math.sqrt(2)


def P(text):
    return PauliString.parse(text)


def random_state(rng):
    v = rng.normal(size=3)
    return SingleQubitState(tuple(v / np.linalg.norm(v)))


def random_density(n, rng, rank=None):
    d = 1 << n
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_target(n, rng, depth=None):
    return CpsTarget(tuple(random_state(rng) for _ in range(n)), random_circuit(n, depth or 5 * n, rng))


def oracle_cps(target):
    u = oracle.circuit_matrix([(g.name, g.qubits) for g in target.circuit.gates], target.n)
    return u @ oracle.kron(*(oracle.pure_vector(s.bloch) for s in target.states)).ravel(), u


def test_single_zero_state():
    assert np.allclose(dense.build_cps_dense(CpsTarget.product(["0"])), [1, 0])


def test_bell_state():
    target = CpsTarget.product(["0", "0"], CliffordCircuit.parse("H 0\nCNOT 0 1"))
    assert np.allclose(dense.build_cps_dense(target), [R, 0, 0, R])


def test_magic_state_amplitudes():
    assert np.allclose(dense.build_cps_dense(CpsTarget.product(["T"])), [R, np.exp(1j * np.pi / 4) * R])


def test_cps_matches_oracle_up_to_phase(rng):
    for _ in range(20):
        target = random_target(int(rng.integers(1, 6)), rng)
        got = dense.build_cps_dense(target)
        want, _ = oracle_cps(target)
        assert abs(abs(np.vdot(want, got)) - 1) < 1e-10


def test_width_cap():
    with pytest.raises(DimensionError):
        dense.simulate_circuit(UniversalCircuit(dense.MAX_QUBITS + 1))


@pytest.mark.parametrize(
    "state, pauli, expected",
    [
        ([1, 0], "Z", 1.0),
        ([R, 0, 0, R], "XX", 1.0),
        ([R, 0, 0, R], "ZZ", 1.0),
        ([R, 0, 0, R], "XZ", 0.0),
        ([R, 0, 0, R], "-YY", 1.0),
    ],
)
def test_expectation_examples(state, pauli, expected):
    v = np.array(state, dtype=complex)
    assert dense.expectation(v, P(pauli)) == pytest.approx(expected, abs=1e-12)
    assert dense.expectation(dense.as_density(v), P(pauli)) == pytest.approx(expected, abs=1e-12)


def test_maximally_mixed_expectations_vanish():
    rho = np.eye(8) / 8
    for p in list(dense.all_paulis(3))[1:]:
        assert dense.expectation(rho, p) == 0


def test_expectation_rejects_bad_input():
    with pytest.raises(ValueError):
        dense.expectation(np.array([1, 0]), P("+iX"))
    with pytest.raises(DimensionError):
        dense.expectation(np.array([1, 0]), P("XX"))


def test_expectation_matches_trace_oracle(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        rho = random_density(n, rng)
        p = PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)), 2 * int(rng.integers(2)))
        assert dense.expectation(rho, p) == pytest.approx(np.trace(rho @ oracle.pauli(str(p))).real, abs=1e-12)


def test_gate_application_matches_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        c = random_circuit(n, 20, rng)
        u = oracle.circuit_matrix([(g.name, g.qubits) for g in c.gates], n)
        assert np.allclose(dense.circuit_unitary(c), u)
        rho = random_density(n, rng)
        assert np.allclose(dense.apply_circuit(rho, c), u @ rho @ u.conj().T)


def test_fidelity_and_trace_distance_basics():
    psi = np.array([R, R], dtype=complex)
    rho = dense.as_density(psi)
    assert dense.fidelity(rho, psi) == pytest.approx(1)
    assert dense.trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
    orth = np.array([R, -R], dtype=complex)
    assert dense.fidelity(rho, orth) == pytest.approx(0, abs=1e-12)
    assert dense.trace_distance(rho, dense.as_density(orth)) == pytest.approx(1)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.37, 1.0])
def test_depolarized_fidelity(p, rng):
    state = random_state(rng)
    psi = state.amplitudes()
    rho = dense.apply_channel(state.density(), Depolarizing(p, 0))
    assert dense.fidelity(rho, psi) == pytest.approx(1 - p / 2, abs=1e-12)


def test_dephasing_convention():
    plus = dense.as_density(np.array([R, R]))
    half = dense.apply_channel(plus, Dephasing(0.5, 0))
    assert half[0, 1] == pytest.approx(0.25)
    full = dense.apply_channel(plus, Dephasing(1.0, 0))
    assert np.allclose(full, np.eye(2) / 2)


def test_amplitude_damping_relaxes_to_ground():
    one = np.diag([0, 1]).astype(complex)
    out = dense.apply_channel(one, AmplitudeDamping(0.3, 0))
    assert np.allclose(out, np.diag([0.3, 0.7]))


def test_unitary_rotation():
    zero = np.diag([1, 0]).astype(complex)
    out = dense.apply_channel(zero, UnitaryRotation(PauliAxis.X, math.pi, 0))
    assert np.allclose(out, np.diag([0, 1]))


def test_pauli_channel_on_two_qubits():
    rho = dense.as_density(np.array([R, 0, 0, R]))
    out = dense.apply_channel(rho, PauliChannel(((P("ZI"), 0.25),)))
    assert dense.expectation(out, P("XX")) == pytest.approx(0.5)
    assert dense.expectation(out, P("ZZ")) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: Depolarizing(1.2, 0),
        lambda: Dephasing(-0.1, 0),
        lambda: AmplitudeDamping(0.5, -1),
        lambda: Depolarizing(0.1, 0.5),
        lambda: PauliChannel(((P("X"), 0.7), (P("Z"), 0.7))),
        lambda: PauliChannel(((P("+iX"), 0.1),)),
    ],
)
def test_invalid_channels(make):
    with pytest.raises(ValueError):
        make()


def test_channels_preserve_trace_and_positivity(rng):
    for _ in range(30):
        n = int(rng.integers(1, 4))
        rho = random_density(n, rng)
        q = int(rng.integers(n))
        for ch in (
            Depolarizing(float(rng.random()), q),
            Dephasing(float(rng.random()), q),
            AmplitudeDamping(float(rng.random()), q),
            UnitaryRotation(PauliAxis.Y, float(rng.normal()), q),
            PauliChannel(((PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n))), 0.3),)),
        ):
            out = dense.apply_channel(rho, ch)
            assert np.trace(out).real == pytest.approx(1)
            assert dense.is_density(out)


def test_depolarizing_matches_oracle_kraus(rng):
    rho = random_density(3, rng)
    assert np.allclose(dense.apply_channel(rho, Depolarizing(0.3, 1)), oracle.depolarize(rho, 0.3, 1, 3))


def test_exact_witness_perfect_state(rng):
    target = random_target(4, rng)
    assert dense.exact_witness(dense.build_cps_dense(target), target) == pytest.approx(1, abs=1e-12)


def test_exact_witness_two_qubit_depolarized(rng):
    target = random_target(2, rng)
    rho = dense.as_density(dense.product_state([s.amplitudes() for s in target.states]))
    for j in range(2):
        rho = dense.apply_channel(rho, Depolarizing(0.1, j))
    rho = dense.apply_circuit(rho, target.circuit)
    assert dense.exact_witness(rho, target) == pytest.approx(0.9, abs=1e-12)


def test_exact_witness_matches_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5))
        target = random_target(n, rng)
        rho = random_density(n, rng, rank=2)
        _, u = oracle_cps(target)
        psis = [oracle.pure_vector(s.bloch) for s in target.states]
        assert dense.exact_witness(rho, target) == pytest.approx(oracle.witness(rho, psis, u), abs=1e-10)


def test_witness_bounds_fidelity(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        target = random_target(n, rng)
        psi = dense.build_cps_dense(target)
        rho = dense.as_density(psi)
        for j in range(n):
            rho = dense.apply_channel(rho, Depolarizing(float(rng.uniform(0, 0.4)), j))
        f = dense.fidelity(rho, psi)
        w = dense.exact_witness(rho, target)
        assert 1 - n * (1 - f) - 1e-9 <= w <= f + 1e-9


def test_measure_deterministic_outcome(rng):
    zero = np.array([1, 0], dtype=complex)
    for _ in range(20):
        outcome, post = dense.measure_pauli(zero, P("Z"), rng)
        assert outcome == 1 and np.allclose(post, zero)


def test_measure_plus_in_z(rng):
    plus = np.array([R, R], dtype=complex)
    outcomes = []
    for _ in range(4000):
        outcome, post = dense.measure_pauli(plus, P("Z"), rng)
        outcomes.append(outcome)
        assert np.allclose(np.abs(post), [1, 0] if outcome == 1 else [0, 1])
    assert abs(np.mean(outcomes)) < 4 / math.sqrt(4000)


def test_bell_measurements_correlated(rng):
    bell = np.array([R, 0, 0, R], dtype=complex)
    for _ in range(100):
        a, post = dense.measure_pauli(bell, P("ZI"), rng)
        b, _ = dense.measure_pauli(post, P("IZ"), rng)
        assert a == b


def test_measure_density_matrix_matches_vector(rng):
    bell = np.array([R, 0, 0, R], dtype=complex)
    post_v = dense.project(bell, P("XI"), -1)
    post_rho = dense.project(dense.as_density(bell), P("XI"), -1)
    assert np.allclose(dense.as_density(post_v), post_rho)


def test_zero_probability_projection_rejected():
    with pytest.raises(ValueError):
        dense.project(np.array([1, 0], dtype=complex), P("Z"), -1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fuchs_van_de_graaf(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    rho = random_density(n, rng, rank=int(rng.integers(1, 1 << n)) or 1)
    f = dense.fidelity(rho, psi)
    d = dense.trace_distance(rho, dense.as_density(psi))
    assert 1 - math.sqrt(f) - 1e-9 <= d <= math.sqrt(1 - f) + 1e-9
    assert d == pytest.approx(oracle.trace_distance(rho, np.outer(psi, psi.conj())), abs=1e-10)


def test_cyclicity(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        c = random_circuit(n, 20, rng)
        rho = random_density(n, rng)
        p = PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)))
        back = dense.apply_circuit(rho, c.inverse())
        assert dense.expectation(rho, conjugate(tableau_from_circuit(c), p)) == pytest.approx(
            dense.expectation(back, p), abs=1e-10
        )


def test_reduced_qubit_matches_oracle(rng):
    rho = random_density(3, rng)
    for i in range(3):
        assert np.allclose(dense.reduced_qubit(rho, i), oracle.reduced(rho, i, 3))


def test_dfe_perfect_state(rng):
    target = CpsTarget.product(["T", "+"], CliffordCircuit.parse("CNOT 0 1"))
    psi = dense.build_cps_dense(target)
    eps, delta = 0.1, 0.05
    est = dense.dfe_global(psi, psi, eps, delta, rng)
    assert abs(est - 1) <= eps


def test_dfe_bell_with_global_depolarizing(rng):
    bell = np.array([R, 0, 0, R], dtype=complex)
    p = 0.3
    rho = (1 - p) * dense.as_density(bell) + p * np.eye(4) / 4
    exact = dense.fidelity(rho, bell)
    eps, delta = 0.1, 0.05
    misses = sum(abs(dense.dfe_global(bell, rho, eps, delta, rng) - exact) > 2 * eps for _ in range(40))
    assert misses <= 40 * delta + 3 * math.sqrt(40 * delta)


def test_dfe_variance_scales_with_chi_norm(rng):
    psi = NAMED_STATES["T"].amplitudes()
    paulis, values = dense.characteristic_function(psi)
    norm = np.abs(values).sum()
    assert norm == pytest.approx(0.5 + R)
    # single-sample estimates take values ±norm, so their variance is norm² - F²
    singles = np.array([dense.dfe_global(psi, psi, 0.1, 0.1, rng, n_samples=1) for _ in range(20000)])
    assert set(np.round(np.abs(singles), 12)) == {round(norm, 12)}
    assert singles.var() == pytest.approx(norm**2 - 1, abs=0.05)


def test_dfe_width_cap():
    with pytest.raises(DimensionError):
        dense.characteristic_function(dense.zero_state(dense.DFE_MAX_QUBITS + 1))


def test_z_distribution_ordering():
    state = np.zeros(4, dtype=complex)
    state[1] = 1  # qubit 0 in |0>, qubit 1 in |1>
    assert dense.z_distribution(state) == {"00": 0, "01": 1.0, "10": 0, "11": 0}
    assert dense.z_distribution(state, [1]) == {"0": 0, "1": 1.0}
