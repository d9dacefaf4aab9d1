import math

import numpy as np
import pytest

from cpsverify import dense
from cpsverify.certify import CertConfig, VerifyConfig, sample_size_iid
from cpsverify.clifford import CircuitError, CliffordCircuit
from cpsverify.msi import (
    UniversalCircuit,
    branch_distribution,
    compile_msi,
    ideal_distribution,
    program_json,
    random_universal_circuit,
    run_msi,
    verify_and_run,
)
from cpsverify.pauli import PauliString
from cpsverify.prover import FixedAlternative, HonestIid, SessionError, open_session
from cpsverify.target import NAMED_STATES, build_plan

import oracle


def perfect_state(program):
    return dense.build_cps_dense(program.cps)


def shots(program, count, rng, spec=None):
    session = open_session(spec or HonestIid(program.cps), 1, rng, adaptive=True)
    counts = {}
    for i in range(count):
        bits = run_msi(program, session if i == 0 else session.fresh())
        counts[bits] = counts.get(bits, 0) + 1
    return {k: v / count for k, v in counts.items()}


def tvd_slack(dist, count):
    # 3 sigma of the summed absolute multinomial deviations
    return 3 * sum(math.sqrt(p * (1 - p) / count) for p in dist.values()) / 2


def test_parse_accepts_t_gates_and_rejects_unknown():
    circ = UniversalCircuit.parse("H 0\nT 0\nCNOT 0 1\nT 1")
    assert circ.n == 2 and circ.t_count == 2
    assert UniversalCircuit.parse(circ.to_text(), 2) == circ
    with pytest.raises(CircuitError, match="line 2"):
        UniversalCircuit.parse("H 0\nQ 1")


def test_clifford_only_program_is_trivial():
    circ = UniversalCircuit.parse("H 0\nCNOT 0 1\nS 1")
    program = compile_msi(circ)
    assert program.t_count == 0 and program.schedule == ()
    assert program.cps.circuit == CliffordCircuit.parse("H 0\nCNOT 0 1\nS 1", 2)
    assert [str(p) for p in program.outputs] == ["ZI", "IZ"]
    dist = branch_distribution(program, perfect_state(program))
    assert dense.total_variation(dist, ideal_distribution(circ)) < 1e-12


def test_single_t_gadget_structure():
    program = compile_msi(UniversalCircuit.parse("H 0\nT 0"))
    assert program.width == 1 and program.cps.n == 2
    assert program.cps.states == (NAMED_STATES["0"], NAMED_STATES["T"])
    assert [g.name for g in program.cps.circuit.gates] == ["H", "CNOT"]
    (step,) = program.schedule
    assert step.ancilla == 1 and step.data_qubit == 0
    assert step.base == PauliString.parse("IZ")
    # nothing follows the gadget, so the correction is S on the data wire
    s = step.correction
    assert s.apply(PauliString.parse("XI")) == PauliString.parse("YI")
    assert s.apply(PauliString.parse("ZI")) == PauliString.parse("ZI")


def test_two_t_gates_branch_dependent_observable():
    program = compile_msi(UniversalCircuit.parse("H 0\nT 0\nH 0\nT 0"))
    assert program.t_count == 2
    second = program.schedule[1].base
    plus = program.frame_after((False,)).observable(second)
    minus = program.frame_after((True,)).observable(second)
    assert plus != minus
    assert minus.is_hermitian and plus.is_hermitian


def test_x_measurement_of_magic_state(rng):
    circ = UniversalCircuit.parse("H 0\nT 0\nH 0")
    program = compile_msi(circ)
    exact = (1 + 1 / math.sqrt(2)) / 2
    assert branch_distribution(program, perfect_state(program))["0"] == pytest.approx(exact, abs=1e-12)
    count = 20000
    freq = shots(program, count, rng).get("0", 0.0)
    assert abs(freq - exact) <= 3 * math.sqrt(exact * (1 - exact) / count)


@pytest.mark.parametrize("seed", range(8))
def test_branch_enumeration_matches_dense_simulation(seed):
    rng = np.random.default_rng(seed)
    circ = random_universal_circuit(int(rng.integers(1, 4)), 8, int(rng.integers(0, 4)), rng)
    program = compile_msi(circ)
    got = branch_distribution(program, perfect_state(program))
    assert dense.total_variation(got, ideal_distribution(circ)) < 1e-9


def test_ideal_distribution_matches_kron_oracle(rng):
    circ = random_universal_circuit(3, 10, 3, rng)
    u = oracle.circuit_matrix([(g.name, g.qubits) for g in circ.gates], 3)
    amps = u[:, 0]
    want = {format(b, "03b"): abs(amps[b]) ** 2 for b in range(8)}
    got = ideal_distribution(circ)
    for bits, p in want.items():
        assert got.get(bits, 0.0) == pytest.approx(p, abs=1e-12)


def test_t_count_accounting(rng):
    for _ in range(10):
        t = int(rng.integers(0, 5))
        circ = random_universal_circuit(3, 6, t, rng)
        program = compile_msi(circ)
        assert program.t_count == t == circ.t_count
        assert program.cps.n == 3 + t
        assert sum(s == NAMED_STATES["T"] for s in program.cps.states) == t
        assert sorted(step.ancilla for step in program.schedule) == list(range(3, 3 + t))


def test_frame_observables_are_hermitian(rng):
    for _ in range(10):
        program = compile_msi(random_universal_circuit(3, 10, 4, rng))
        for bits in range(1 << program.t_count):
            history = tuple(bool(bits >> j & 1) for j in range(program.t_count))
            for k, step in enumerate(program.schedule):
                assert program.frame_after(history[:k]).observable(step.base).is_hermitian
            for z in program.outputs:
                assert program.frame_after(history).observable(z).is_hermitian


def test_run_msi_session_checks(rng):
    program = compile_msi(UniversalCircuit.parse("H 0\nT 0"))
    with pytest.raises(SessionError):
        run_msi(program, open_session(HonestIid(compile_msi(UniversalCircuit.parse("H 0")).cps), 1, rng, adaptive=True))
    with pytest.raises(SessionError):
        run_msi(program, open_session(HonestIid(program.cps), 1, rng))


def test_random_circuit_sampled_distribution(rng):
    circ = random_universal_circuit(3, 10, 4, np.random.default_rng(3))
    program = compile_msi(circ)
    ideal = ideal_distribution(circ)
    count = 10**5
    got = shots(program, count, rng)
    assert dense.total_variation(got, ideal) <= 0.01 + tvd_slack(ideal, count)


def test_program_json_round_trips_through_json():
    import json

    payload = json.loads(program_json(compile_msi(UniversalCircuit.parse("H 0\nT 0\nCNOT 0 1\nT 1"))))
    assert payload["t_count"] == 2 and payload["cps"]["n"] == 4
    assert [s["ancilla"] for s in payload["schedule"]] == [2, 3]
    assert payload["outputs"] == ["ZIII", "IZII"]


def test_verify_and_run_perfect_prover(rng):
    circ = UniversalCircuit.parse("H 0\nT 0\nH 0")
    program = compile_msi(circ)
    cert = CertConfig(0.3, 0.1)
    n_test = sample_size_iid(build_plan(program.cps), cert)
    vcfg = VerifyConfig(cert, 10 * n_test, n_test)
    run = verify_and_run(program, HonestIid(program.cps), vcfg, rng, shots=4000)
    assert run.accept and run.bound == pytest.approx(math.sqrt(0.3))
    ideal = ideal_distribution(circ)
    freq = {k: v / 4000 for k, v in run.counts().items()}
    assert dense.total_variation(freq, ideal) <= tvd_slack(ideal, 4000)


def test_verify_and_run_aborts_on_bad_prover(rng):
    program = compile_msi(UniversalCircuit.parse("H 0\nT 0\nH 0"))
    bad = FixedAlternative(np.eye(4) / 4)
    cert = CertConfig(0.3, 0.1)
    n_test = sample_size_iid(build_plan(program.cps), cert)
    vcfg = VerifyConfig(cert, 10 * n_test, n_test)
    aborts = sum(not verify_and_run(program, bad, vcfg, rng).accept for _ in range(30))
    assert aborts >= 27
    with pytest.raises(SessionError):
        verify_and_run(program, FixedAlternative(np.eye(2) / 2), vcfg, rng)
